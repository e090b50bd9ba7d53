#pragma once

#include <utility>
#include <vector>

#include "cpgrl/cpg/dynamics.hpp"

namespace cpgrl {

// Forward record of a rollout: the parameter set, the state before the first
// step, and the state after every step. Everything the backward pass reads
// (coupling trigonometric arguments, neighbor amplitudes, final phases) is
// reconstructible from consecutive state pairs.
struct CpgTape {
    CpgParams params;
    Modulation mod;
    std::vector<CpgState> states;  // states[0] initial, states[t] after step t
    Mat outputs;                   // steps x n

    int steps() const { return static_cast<int>(states.size()) - 1; }
    int size() const { return params.n; }

    // Re-runs the forward pass from the recorded start and checks outputs
    // reproduce bit-exactly.
    bool replay_matches() const {
        auto [s, ys] = cpg_rollout(params, mod, states.front(), steps());
        (void)s;
        return (ys.array() == outputs.array()).all();
    }
};

inline std::tuple<CpgState, Mat, CpgTape> rollout_with_tape(const CpgParams& p, const Modulation& mod,
                                                            const CpgState& state, int steps) {
    require(steps >= 1, "rollout_with_tape: steps must be >= 1");
    CpgTape tape;
    tape.params = p;
    tape.mod = mod;
    tape.states.reserve(steps + 1);
    tape.states.push_back(state);
    tape.outputs.resize(steps, state.size());
    CpgState s = state;
    for (int t = 0; t < steps; ++t) {
        s = cpg_step(p, mod, s);
        tape.states.push_back(s);
        tape.outputs.row(t) = s.output().transpose();
    }
    Mat outputs = tape.outputs;
    return {std::move(s), std::move(outputs), std::move(tape)};
}

}  // namespace cpgrl
