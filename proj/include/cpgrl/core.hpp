#pragma once

#include "cpgrl/common.hpp"
#include "cpgrl/cpg/params.hpp"
#include "cpgrl/cpg/state.hpp"
#include "cpgrl/cpg/dynamics.hpp"
#include "cpgrl/cpg/tape.hpp"
#include "cpgrl/cpg/backward.hpp"
#include "cpgrl/cpg/gradcheck.hpp"
#include "cpgrl/nn/linear.hpp"
#include "cpgrl/nn/actor.hpp"
#include "cpgrl/nn/adam.hpp"
#include "cpgrl/nn/normalizer.hpp"
#include "cpgrl/env/crawler.hpp"
#include "cpgrl/rl/config.hpp"
#include "cpgrl/rl/replay.hpp"
#include "cpgrl/rl/modular.hpp"
#include "cpgrl/rl/trainer.hpp"
#include "cpgrl/io/csv.hpp"
#include "cpgrl/io/checkpoint.hpp"
