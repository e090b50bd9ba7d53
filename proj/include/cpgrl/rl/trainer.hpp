#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "cpgrl/cpg/backward.hpp"
#include "cpgrl/cpg/dynamics.hpp"
#include "cpgrl/cpg/tape.hpp"
#include "cpgrl/env/crawler.hpp"
#include "cpgrl/io/checkpoint.hpp"
#include "cpgrl/io/csv.hpp"
#include "cpgrl/nn/actor.hpp"
#include "cpgrl/nn/adam.hpp"
#include "cpgrl/nn/normalizer.hpp"
#include "cpgrl/rl/config.hpp"
#include "cpgrl/rl/modular.hpp"
#include "cpgrl/rl/replay.hpp"

namespace cpgrl {

// Networks and optimizers for one policy module. Single-agent runs own one
// module spanning every joint; modular runs own one per body segment.
struct ModuleNets {
    ModuleSlices slices;
    int actor_in = 0;
    bool use_cpg = true;
    ActorNet actor, actor_targ;
    FfActor ff, ff_targ;
    std::vector<CriticNet> critics, critic_targs;
    Adam opt_actor;
    std::vector<Adam> opt_critic;

    std::vector<Dense*> actor_layers() { return use_cpg ? actor.layers() : ff.layers(); }
    std::vector<Dense*> actor_targ_layers() {
        return use_cpg ? actor_targ.layers() : ff_targ.layers();
    }
};

// One greedy rollout's worth of diagnostics.
struct EpisodeLog {
    double ret = 0.0;
    long steps = 0;
    double distance = 0.0;     // straight-line displacement
    double path_length = 0.0;  // integrated displacement
    int actor_calls = 0;
    double wall_ms_per_step = 0.0;
    std::vector<Vec> torques, deltas;
    std::vector<std::vector<double>> trajectory;  // step,x,y,heading,vx,vy,yaw,z,joints,g_j,torque,r,done
};

// The training engine: babbling, segment collection, replay, twin-critic
// targets with clipped smoothing noise (td3) or single-critic targets (ddpg),
// delayed policy updates through the CPG rollout gradient, and greedy
// deployment. One environment step at a time, one thread, one RNG stream.
class Trainer {
  public:
    // apply_transfer=false skips the weight-transfer routine; checkpoint
    // loading uses it because every parameter is overwritten anyway and the
    // transfer source file may no longer exist.
    explicit Trainer(const RunConfig& cfg, bool apply_transfer = true)
        : cfg_(cfg),
          n_mod_(cfg.modular.n_mod),
          mod_(cfg.cpg),
          rng_(cfg.seed),
          env_(cfg.env, cfg.seed ^ 0x9e3779b97f4a7c15ull),
          norm_(obs_dim(cfg.env)),
          buffer_(cfg.train.buffer_capacity, cfg.train.tau_c, cfg.train.tau_o) {
        cfg_.validate();
        const int n_critics = cfg_.train.algo == "td3" ? 2 : 1;
        const int critic_in = critic_input_dim(cfg_.env, cfg_.train.tau_o, cfg_.train.tau_c);
        for (int m = 0; m < n_mod_; ++m) {
            ModuleNets mn;
            mn.slices = module_slices(cfg_.env, n_mod_, m);
            mn.actor_in = module_actor_input_dim(cfg_.env, n_mod_, cfg_.train.tau_o);
            mn.use_cpg = cfg_.net.actor == "cpg";
            if (mn.use_cpg) {
                mn.actor = ActorNet(mn.slices.joints, mn.actor_in, cfg_.net.trunk1,
                                    cfg_.net.trunk2, cfg_.net.head_hidden, rng_);
                mn.actor_targ = mn.actor;
            } else {
                mn.ff = FfActor(mn.slices.joints, mn.actor_in, cfg_.net.trunk1, cfg_.net.trunk2,
                                rng_);
                mn.ff_targ = mn.ff;
            }
            for (int k = 0; k < n_critics; ++k) {
                mn.critics.emplace_back(critic_in, cfg_.net.critic[0], cfg_.net.critic[1],
                                        cfg_.net.critic[2], cfg_.net.critic[3], rng_);
                mn.critic_targs.push_back(mn.critics.back());
            }
            configure_opt(mn.opt_actor);
            mn.opt_actor.attach(mn.actor_layers());
            mn.opt_critic.resize(n_critics);
            for (int k = 0; k < n_critics; ++k) {
                configure_opt(mn.opt_critic[k]);
                mn.opt_critic[k].attach(mn.critics[k].layers());
            }
            mods_.push_back(std::move(mn));
        }
        if (apply_transfer) apply_transfer_routine();
        reset_episode();
    }

    const RunConfig& config() const { return cfg_; }
    long env_steps() const { return env_steps_; }
    long episodes() const { return episodes_; }
    long update_calls() const { return update_calls_; }
    double last_episode_return() const { return last_ep_return_; }
    ReplayBuffer& buffer() { return buffer_; }
    Normalizer& normalizer() { return norm_; }
    Rng& rng() { return rng_; }
    ModuleNets& module_nets(int m) { return mods_.at(static_cast<size_t>(m)); }
    const ModuleNets& module_nets(int m) const { return mods_.at(static_cast<size_t>(m)); }
    int n_mod() const { return n_mod_; }

    // Redirects artifact output (metrics, checkpoints) without touching any
    // training state; used when resuming into a new directory.
    void set_out_dir(const std::string& dir) { cfg_.out_dir = dir; }

    // Extends (or shortens) the step budget on resume so the embedded config
    // of a resumed run matches an unbroken run to the same total.
    void set_total_steps(long total) {
        require(total >= 0, "set_total_steps: negative budget");
        cfg_.train.total_steps = total;
    }

    // Copies network weights, targets, and normalizer statistics from a
    // structurally identical trainer; optimizer state and replay stay fresh.
    // This is the fine-tuning transfer: same body, new task.
    void adopt_weights(const Trainer& src) {
        require(src.n_mod_ == n_mod_, "adopt_weights: module count mismatch");
        require(src.cfg_.net.trunk1 == cfg_.net.trunk1 && src.cfg_.net.trunk2 == cfg_.net.trunk2 &&
                    src.cfg_.net.head_hidden == cfg_.net.head_hidden &&
                    src.cfg_.net.critic == cfg_.net.critic,
                "adopt_weights: network architecture mismatch");
        for (int m = 0; m < n_mod_; ++m) {
            const ModuleNets& s = src.mods_[static_cast<size_t>(m)];
            ModuleNets& d = mods_[static_cast<size_t>(m)];
            require(s.use_cpg == d.use_cpg, "adopt_weights: actor kind mismatch");
            require(s.critics.size() == d.critics.size(), "adopt_weights: critic count mismatch");
            if (d.use_cpg) {
                require(s.actor.n == d.actor.n && s.actor.input_dim == d.actor.input_dim,
                        "adopt_weights: actor shape mismatch");
                d.actor = s.actor;
                d.actor_targ = s.actor_targ;
            } else {
                require(s.ff.n == d.ff.n && s.ff.input_dim == d.ff.input_dim,
                        "adopt_weights: actor shape mismatch");
                d.ff = s.ff;
                d.ff_targ = s.ff_targ;
            }
            d.critics = s.critics;
            d.critic_targs = s.critic_targs;
        }
        norm_ = src.norm_;
    }

    struct RunResult {
        long env_steps = 0;
        long episodes = 0;
        double last_eval = std::numeric_limits<double>::quiet_NaN();
        bool stopped_early = false;
        long steps_at_stop = -1;
    };

    // Trains for up to max_new_steps further environment steps. When
    // stop_at_eval is finite, stops at the first periodic evaluation whose
    // mean return reaches it.
    RunResult run(long max_new_steps,
                  double stop_at_eval = std::numeric_limits<double>::infinity()) {
        open_logs();
        const long limit = env_steps_ + max_new_steps;
        const long eval_every = cfg_.train.eval_every;
        const long ckpt_every = cfg_.train.checkpoint_every;
        long next_eval = eval_every > 0 ? (env_steps_ / eval_every + 1) * eval_every
                                        : std::numeric_limits<long>::max();
        long next_ckpt = ckpt_every > 0 ? (env_steps_ / ckpt_every + 1) * ckpt_every
                                        : std::numeric_limits<long>::max();
        RunResult rr;
        while (env_steps_ < limit) {
            const bool done = collect_segment(true);
            if (env_steps_ >= cfg_.train.babble_steps && buffer_.ready(cfg_.train.batch)) {
                ++segments_since_update_;
                if (segments_since_update_ >= cfg_.train.update_every) {
                    segments_since_update_ = 0;
                    update_once();
                }
            }
            if (done && metrics_) {
                metrics_->row(std::vector<double>{
                    static_cast<double>(env_steps_), static_cast<double>(episodes_),
                    last_ep_return_, static_cast<double>(last_ep_steps_), last_q_loss_[0],
                    last_q_loss_[1], last_actor_obj_});
            }
            if (env_steps_ >= next_eval) {
                const double ev = evaluate(cfg_.train.eval_episodes, eval_seed());
                rr.last_eval = ev;
                if (evals_) {
                    evals_->row(std::vector<double>{static_cast<double>(env_steps_), ev});
                    evals_->flush();
                }
                if (ev >= stop_at_eval) {
                    rr.stopped_early = true;
                    rr.steps_at_stop = env_steps_;
                    break;
                }
                next_eval += eval_every;
            }
            if (env_steps_ >= next_ckpt) {
                save(out_path("checkpoint_" + std::to_string(env_steps_) + ".bin"), true);
                next_ckpt += ckpt_every;
            }
        }
        rr.env_steps = env_steps_;
        rr.episodes = episodes_;
        if (metrics_) metrics_->flush();
        return rr;
    }

    // Mean greedy return over fresh environments (training state untouched).
    double evaluate(int episodes, uint64_t base_seed) {
        double total = 0.0;
        for (int e = 0; e < episodes; ++e) total += deploy_episode(base_seed + e).ret;
        return total / std::max(episodes, 1);
    }

    // One greedy episode on a fresh environment. Optional overrides support
    // the ablation and fault studies; the environment override must keep the
    // observation layout intact.
    EpisodeLog deploy_episode(uint64_t seed, const Modulation* mod_override = nullptr,
                              int tau_c_override = 0, const EnvConfig* env_override = nullptr,
                              bool record_trajectory = false) {
        const Modulation& dmod = mod_override ? *mod_override : mod_;
        const int dtau = tau_c_override > 0 ? tau_c_override : cfg_.train.tau_c;
        EnvConfig ec = env_override ? *env_override : cfg_.env;
        require(obs_dim(ec) == obs_dim(cfg_.env) && ec.joints() == cfg_.env.joints(),
                "deploy: environment override changes the observation layout");

        CrawlerEnv env(ec, seed);
        Rng lrng(seed ^ 0x5bf03635ull);
        std::deque<Vec> hist{env.current_obs()};
        Vec goal = env.current_goal();
        std::vector<CpgState> cs;
        for (int m = 0; m < n_mod_; ++m)
            cs.push_back(CpgState::initial(lrng, mods_[m].slices.joints, ec.dt));

        EpisodeLog log;
        double px = env.state().x, py = env.state().y;
        const auto t0 = std::chrono::steady_clock::now();
        bool done = false;
        while (!done && log.steps < ec.episode_len) {
            const Mat win = window_from(hist);
            ++log.actor_calls;
            std::vector<CpgParams> params(static_cast<size_t>(n_mod_));
            std::vector<Vec> held(static_cast<size_t>(n_mod_));
            for (int m = 0; m < n_mod_; ++m) {
                const Vec in = module_actor_input(win, goal, norm_, cfg_.env, n_mod_, m,
                                                  cfg_.train.tau_o);
                if (mods_[m].use_cpg) params[m] = mods_[m].actor.act(in);
                else held[m] = mods_[m].ff.act(in);
            }
            for (int sub = 0; sub < dtau && !done; ++sub) {
                Vec gj(cfg_.env.joints());
                for (int m = 0; m < n_mod_; ++m) {
                    const auto& sl = mods_[m].slices;
                    if (mods_[m].use_cpg) {
                        cs[m] = cpg_step(params[m], dmod, cs[m]);
                        gj.segment(sl.joint_offset, sl.joints) = cs[m].output();
                    } else {
                        gj.segment(sl.joint_offset, sl.joints) = held[m];
                    }
                }
                for (int jj = 0; jj < gj.size(); ++jj)
                    gj[jj] = clamp(gj[jj], -ec.s_max, ec.s_max);
                const CrawlerEnv::Result res = env.step(gj);
                const CrawlerState& st = env.state();
                log.ret += res.reward;
                ++log.steps;
                log.path_length += std::hypot(st.x - px, st.y - py);
                px = st.x;
                py = st.y;
                log.torques.push_back(res.torque);
                log.deltas.push_back(res.joint_delta);
                if (record_trajectory) {
                    std::vector<double> row{static_cast<double>(st.step), st.x, st.y,
                                            st.heading, st.vx, st.vy, st.yaw_rate, st.z};
                    for (int jj = 0; jj < st.joints.size(); ++jj) row.push_back(st.joints[jj]);
                    for (int jj = 0; jj < gj.size(); ++jj) row.push_back(gj[jj]);
                    for (int jj = 0; jj < res.torque.size(); ++jj) row.push_back(res.torque[jj]);
                    row.push_back(res.reward);
                    row.push_back(res.done ? 1.0 : 0.0);
                    log.trajectory.push_back(std::move(row));
                }
                hist.push_back(res.obs);
                if (static_cast<int>(hist.size()) > cfg_.train.tau_o) hist.pop_front();
                goal = res.goal;
                done = res.done;
            }
        }
        const auto t1 = std::chrono::steady_clock::now();
        log.wall_ms_per_step =
            std::chrono::duration<double, std::milli>(t1 - t0).count() / std::max<long>(log.steps, 1);
        log.distance = std::hypot(env.state().x, env.state().y);
        return log;
    }

    // --- pieces exposed for tests ---

    // Collects one decision segment (tau_c env steps or fewer on terminal).
    bool collect_segment(bool explore) {
        if (env_steps_ >= cfg_.train.babble_steps) norm_.frozen = true;
        const bool babbling = explore && env_steps_ < cfg_.train.babble_steps;
        const Mat win = window_from(obs_hist_);

        std::vector<CpgParams> params(static_cast<size_t>(n_mod_));
        std::vector<Vec> held(static_cast<size_t>(n_mod_));
        std::vector<Vec> packed(static_cast<size_t>(n_mod_));
        for (int m = 0; m < n_mod_; ++m) {
            const auto& sl = mods_[m].slices;
            if (mods_[m].use_cpg) {
                if (babbling) {
                    params[m] = random_params(rng_, sl.joints);
                } else {
                    const Vec in = module_actor_input(win, cur_goal_, norm_, cfg_.env, n_mod_, m,
                                                      cfg_.train.tau_o);
                    params[m] = mods_[m].actor.act(in);
                }
                packed[m] = pack_params(params[m]);
            } else {
                if (babbling) {
                    held[m] = uniform_vec(rng_, sl.joints, -cfg_.env.s_max, cfg_.env.s_max);
                } else {
                    const Vec in = module_actor_input(win, cur_goal_, norm_, cfg_.env, n_mod_, m,
                                                      cfg_.train.tau_o);
                    held[m] = mods_[m].ff.act(in);
                }
                packed[m] = held[m];
            }
        }

        std::vector<Transition> seg;
        seg.reserve(static_cast<size_t>(cfg_.train.tau_c));
        bool done = false;
        for (int sub = 0; sub < cfg_.train.tau_c && !done; ++sub) {
            Transition tr;
            tr.s = obs_hist_.back();
            tr.goal = cur_goal_;
            tr.h = cpg_;
            Vec gj(cfg_.env.joints());
            for (int m = 0; m < n_mod_; ++m) {
                const auto& sl = mods_[m].slices;
                if (mods_[m].use_cpg) {
                    cpg_[m] = cpg_step(params[m], mod_, cpg_[m]);
                    gj.segment(sl.joint_offset, sl.joints) = cpg_[m].output();
                } else {
                    gj.segment(sl.joint_offset, sl.joints) = held[m];
                }
            }
            tr.h_next = cpg_;
            tr.g_cpg = packed;
            if (explore && cfg_.train.sigma_explore > 0.0)
                for (int jj = 0; jj < gj.size(); ++jj)
                    gj[jj] += gaussian(rng_, cfg_.train.sigma_explore);
            for (int jj = 0; jj < gj.size(); ++jj)
                gj[jj] = clamp(gj[jj], -cfg_.env.s_max, cfg_.env.s_max);
            tr.g_j = gj;

            const CrawlerEnv::Result res = env_.step(gj);
            tr.s_next = res.obs;
            tr.r = res.reward;
            tr.done = res.done;
            tr.goal_next = res.goal;
            seg.push_back(std::move(tr));

            obs_hist_.push_back(res.obs);
            if (static_cast<int>(obs_hist_.size()) > cfg_.train.tau_o) obs_hist_.pop_front();
            if (!norm_.frozen) norm_.update(res.obs);
            cur_goal_ = res.goal;
            ep_return_ += res.reward;
            ++ep_steps_;
            ++env_steps_;
            done = res.done;
        }
        buffer_.push_segment(seg);
        if (done) {
            last_ep_return_ = ep_return_;
            last_ep_steps_ = ep_steps_;
            ++episodes_;
            reset_episode();
        }
        return done;
    }

    // Per-module regression targets for one sampled batch.
    std::vector<Vec> compute_targets(const std::vector<SegmentSample>& batch) {
        const int B = static_cast<int>(batch.size());
        const bool td3 = cfg_.train.algo == "td3";
        Mat Xp(critic_input_dim(cfg_.env, cfg_.train.tau_o, cfg_.train.tau_c), B);
        for (int b = 0; b < B; ++b) {
            const SegmentSample& s = batch[static_cast<size_t>(b)];
            Mat G(cfg_.env.joints(), cfg_.train.tau_c);
            for (int m = 0; m < n_mod_; ++m) {
                const auto& sl = mods_[m].slices;
                const Vec in = module_actor_input(s.next_obs_window, s.goal_next, norm_,
                                                  cfg_.env, n_mod_, m, cfg_.train.tau_o);
                if (mods_[m].use_cpg) {
                    const CpgParams p = mods_[m].actor_targ.act(in);
                    const auto [st, ys] = cpg_rollout(p, mod_, s.h_end[static_cast<size_t>(m)],
                                                      cfg_.train.tau_c);
                    G.middleRows(sl.joint_offset, sl.joints) = ys.transpose();
                } else {
                    const Vec u = mods_[m].ff_targ.act(in);
                    G.middleRows(sl.joint_offset, sl.joints) = u.replicate(1, cfg_.train.tau_c);
                }
            }
            if (td3 && cfg_.train.sigma_target > 0.0) {
                const double c = cfg_.train.noise_clip;
                for (int i = 0; i < G.size(); ++i) {
                    const double eps = clamp(gaussian(rng_, cfg_.train.sigma_target), -c, c);
                    G.data()[i] = clamp(G.data()[i] + eps, -cfg_.env.s_max, cfg_.env.s_max);
                }
            }
            Xp.col(b) = critic_input(s.next_obs_window, s.goal_next, G);
        }

        std::vector<Vec> ys(static_cast<size_t>(n_mod_));
        for (int m = 0; m < n_mod_; ++m) {
            std::vector<Mat> qt;
            for (auto& ct : mods_[m].critic_targs) qt.push_back(ct.forward(Xp).q);
            Vec y(B);
            for (int b = 0; b < B; ++b) {
                const SegmentSample& s = batch[static_cast<size_t>(b)];
                double q = qt[0](0, b);
                if (qt.size() > 1) q = std::min(q, qt[1](0, b));
                y[b] = window_reward(s) + cfg_.train.gamma * (1.0 - s.done) * q;
            }
            ys[static_cast<size_t>(m)] = std::move(y);
        }
        return ys;
    }

    struct UpdateStats {
        double q_loss[2] = {0.0, 0.0};
        double actor_obj = 0.0;
        bool actor_updated = false;
    };

    // One gradient update: every critic regresses to its target; on delayed
    // calls every actor ascends its first critic through the CPG rollout
    // gradient, then all targets move by polyak averaging.
    UpdateStats update_once() {
        ++update_calls_;
        const int B = cfg_.train.batch;
        std::vector<SegmentSample> batch;
        batch.reserve(static_cast<size_t>(B));
        for (int b = 0; b < B; ++b) batch.push_back(buffer_.sample(rng_));
        const std::vector<Vec> ys = compute_targets(batch);

        Mat X(critic_input_dim(cfg_.env, cfg_.train.tau_o, cfg_.train.tau_c), B);
        for (int b = 0; b < B; ++b) {
            const SegmentSample& s = batch[static_cast<size_t>(b)];
            X.col(b) = critic_input(s.obs_window, s.goal, s.action_window);
        }

        // Forward every critic first so a non-finite loss refuses the whole
        // update with parameters untouched.
        struct CriticPass {
            CriticNet::Cache cache;
            Vec err;
            double loss = 0.0;
        };
        std::vector<std::vector<CriticPass>> passes(static_cast<size_t>(n_mod_));
        for (int m = 0; m < n_mod_; ++m) {
            for (auto& critic : mods_[m].critics) {
                CriticPass p;
                p.cache = critic.forward(X);
                p.err = p.cache.q.row(0).transpose() - ys[static_cast<size_t>(m)];
                p.loss = p.err.squaredNorm() / B;
                if (!std::isfinite(p.loss)) throw numeric_error("update refused: critic loss non-finite");
                passes[static_cast<size_t>(m)].push_back(std::move(p));
            }
        }
        UpdateStats stats;
        for (int m = 0; m < n_mod_; ++m) {
            for (size_t k = 0; k < mods_[m].critics.size(); ++k) {
                CriticPass& p = passes[static_cast<size_t>(m)][k];
                const Mat dQ = (2.0 / B) * p.err.transpose();
                mods_[m].critics[k].zero_grad();
                mods_[m].critics[k].backward(p.cache, dQ);
                mods_[m].opt_critic[k].step(mods_[m].critics[k].layers());
                if (m == 0 && k < 2) stats.q_loss[k] = p.loss;
            }
        }

        if (update_calls_ % cfg_.train.policy_delay == 0) {
            for (int m = 0; m < n_mod_; ++m) stats.actor_obj = actor_update(m, batch);
            for (int m = 0; m < n_mod_; ++m) {
                polyak_update(mods_[m].actor_targ_layers(), mods_[m].actor_layers(),
                              cfg_.train.rho);
                for (size_t k = 0; k < mods_[m].critics.size(); ++k)
                    polyak_update(mods_[m].critic_targs[k].layers(), mods_[m].critics[k].layers(),
                                  cfg_.train.rho);
            }
            stats.actor_updated = true;
        }
        last_q_loss_[0] = stats.q_loss[0];
        last_q_loss_[1] = stats.q_loss[1];
        if (stats.actor_updated) last_actor_obj_ = stats.actor_obj;
        return stats;
    }

    // Ascends module m's first critic in the module's own action slice,
    // with the other modules' actions replayed from the batch.
    double actor_update(int m, const std::vector<SegmentSample>& batch) {
        ModuleNets& M = mods_[static_cast<size_t>(m)];
        const int B = static_cast<int>(batch.size());
        const int nj = cfg_.env.joints();
        const int tau_c = cfg_.train.tau_c;
        const int act_off = obs_dim(cfg_.env) * cfg_.train.tau_o + goal_dim();

        Mat Ain(M.actor_in, B);
        for (int b = 0; b < B; ++b) {
            const SegmentSample& s = batch[static_cast<size_t>(b)];
            Ain.col(b) = module_actor_input(s.obs_window, s.goal, norm_, cfg_.env, n_mod_, m,
                                            cfg_.train.tau_o);
        }

        Mat X(critic_input_dim(cfg_.env, cfg_.train.tau_o, tau_c), B);
        if (M.use_cpg) {
            const ActorNet::Cache cache = M.actor.forward(Ain);
            std::vector<CpgTape> tapes;
            tapes.reserve(static_cast<size_t>(B));
            for (int b = 0; b < B; ++b) {
                const SegmentSample& s = batch[static_cast<size_t>(b)];
                std::vector<Vec> heads(5);
                for (int h = 0; h < 5; ++h) heads[static_cast<size_t>(h)] = cache.out[h].col(b);
                const CpgParams p = unpack_params(heads, M.slices.joints);
                auto [st, ys, tape] =
                    rollout_with_tape(p, mod_, s.h_start[static_cast<size_t>(m)], tau_c);
                Mat act = s.action_window;
                act.middleRows(M.slices.joint_offset, M.slices.joints) = ys.transpose();
                X.col(b) = critic_input(s.obs_window, s.goal, act);
                tapes.push_back(std::move(tape));
            }
            const CriticNet::Cache qc = M.critics[0].forward(X);
            const double obj = qc.q.mean();
            if (!std::isfinite(obj)) throw numeric_error("update refused: actor objective non-finite");
            const Mat dQ = Mat::Constant(1, B, -1.0 / B);
            const Mat dX = M.critics[0].backward(qc, dQ, true);

            std::array<Mat, 5> dHeads;
            for (int h = 0; h < 5; ++h)
                dHeads[static_cast<size_t>(h)] = Mat::Zero(head_size(M.slices.joints, h), B);
            for (int b = 0; b < B; ++b) {
                const Vec flat = dX.col(b).segment(act_off, static_cast<long>(nj) * tau_c);
                const Eigen::Map<const Mat> dact(flat.data(), nj, tau_c);
                const Mat og = dact.middleRows(M.slices.joint_offset, M.slices.joints).transpose();
                const CpgGradients g = backward(tapes[static_cast<size_t>(b)], og);
                const Vec pk = g.packed();
                int off = 0;
                for (int h = 0; h < 5; ++h) {
                    const int hs = head_size(M.slices.joints, h);
                    dHeads[static_cast<size_t>(h)].col(b) =
                        pk.segment(off, hs) * affine_bound_slope(kHeadBounds[h]);
                    off += hs;
                }
            }
            M.actor.zero_grad();
            M.actor.backward(cache, dHeads);
            M.opt_actor.step(M.actor.layers());
            return obj;
        }

        const FfActor::Cache cache = M.ff.forward(Ain);
        for (int b = 0; b < B; ++b) {
            const SegmentSample& s = batch[static_cast<size_t>(b)];
            Mat act = s.action_window;
            act.middleRows(M.slices.joint_offset, M.slices.joints) =
                cache.y.col(b).replicate(1, tau_c);
            X.col(b) = critic_input(s.obs_window, s.goal, act);
        }
        const CriticNet::Cache qc = M.critics[0].forward(X);
        const double obj = qc.q.mean();
        if (!std::isfinite(obj)) throw numeric_error("update refused: actor objective non-finite");
        const Mat dQ = Mat::Constant(1, B, -1.0 / B);
        const Mat dX = M.critics[0].backward(qc, dQ, true);
        Mat dY(M.slices.joints, B);
        for (int b = 0; b < B; ++b) {
            const Vec flat = dX.col(b).segment(act_off, static_cast<long>(nj) * tau_c);
            const Eigen::Map<const Mat> dact(flat.data(), nj, tau_c);
            dY.col(b) = dact.middleRows(M.slices.joint_offset, M.slices.joints).rowwise().sum();
        }
        M.ff.zero_grad();
        M.ff.backward(cache, dY);
        M.opt_actor.step(M.ff.layers());
        return obj;
    }

    Vec critic_input(const Mat& raw_window, const Vec& goal, const Mat& action_window) const {
        const int od = obs_dim(cfg_.env);
        Vec x(critic_input_dim(cfg_.env, cfg_.train.tau_o, cfg_.train.tau_c));
        int pos = 0;
        for (int c = 0; c < cfg_.train.tau_o; ++c) {
            x.segment(pos, od) = norm_.apply(raw_window.col(c));
            pos += od;
        }
        x.segment(pos, goal_dim()) = goal;
        pos += goal_dim();
        x.segment(pos, action_window.size()) =
            Eigen::Map<const Vec>(action_window.data(), action_window.size());
        return x;
    }

    double window_reward(const SegmentSample& s) const {
        if (!cfg_.train.discounted_window) return s.rewards.sum();
        double acc = 0.0, w = 1.0;
        for (int i = 0; i < s.rewards.size(); ++i, w *= cfg_.train.gamma) acc += w * s.rewards[i];
        return acc;
    }

    // --- checkpointing ---

    void save(const std::string& path, bool with_buffer) {
        std::filesystem::path p(path);
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        std::ofstream os(path, std::ios::binary);
        if (!os) throw io_error("cannot open checkpoint for writing: " + path);
        BinWriter w{os};
        write_header(w, cfg_.to_json().dump());
        w.u8(with_buffer ? 1 : 0);
        w.i64(env_steps_);
        w.i64(episodes_);
        w.i64(update_calls_);
        w.i64(segments_since_update_);
        w.f64(ep_return_);
        w.i64(ep_steps_);
        w.f64(last_ep_return_);
        w.i64(last_ep_steps_);
        w.f64(last_q_loss_[0]);
        w.f64(last_q_loss_[1]);
        w.f64(last_actor_obj_);
        write_rng(w, rng_);
        write_rng(w, env_.rng());
        write_env_state(w);
        w.u64(obs_hist_.size());
        for (const Vec& o : obs_hist_) w.vec(o);
        w.vec(cur_goal_);
        w.u64(cpg_.size());
        for (const CpgState& s : cpg_) write_cpg_state(w, s);
        write_normalizer(w, norm_);
        for (ModuleNets& m : mods_) {
            w.u8(m.use_cpg ? 1 : 0);
            write_module_nets(w, m);
        }
        if (with_buffer) write_buffer(w, buffer_);
        os.flush();
        if (!os) throw io_error("checkpoint write failure: " + path);
    }

    static std::unique_ptr<Trainer> load(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw io_error("cannot open checkpoint: " + path);
        BinReader r{is};
        const std::string cfg_json = read_header(r);
        RunConfig cfg;
        try {
            cfg = RunConfig::from_json(nlohmann::json::parse(cfg_json));
        } catch (const nlohmann::json::exception& ex) {
            throw io_error(std::string("checkpoint config corrupt: ") + ex.what());
        }
        auto t = std::make_unique<Trainer>(cfg, false);
        const bool with_buffer = r.u8() != 0;
        t->env_steps_ = r.i64();
        t->episodes_ = r.i64();
        t->update_calls_ = r.i64();
        t->segments_since_update_ = r.i64();
        t->ep_return_ = r.f64();
        t->ep_steps_ = r.i64();
        t->last_ep_return_ = r.f64();
        t->last_ep_steps_ = r.i64();
        t->last_q_loss_[0] = r.f64();
        t->last_q_loss_[1] = r.f64();
        t->last_actor_obj_ = r.f64();
        read_rng(r, t->rng_);
        read_rng(r, t->env_.rng());
        t->read_env_state(r);
        const uint64_t nh = r.u64();
        if (nh > 4096) throw io_error("checkpoint observation history implausible");
        t->obs_hist_.clear();
        for (uint64_t i = 0; i < nh; ++i) t->obs_hist_.push_back(r.vec());
        t->cur_goal_ = r.vec();
        const uint64_t nc = r.u64();
        require(nc == t->cpg_.size(), "checkpoint module count mismatch");
        for (uint64_t i = 0; i < nc; ++i) t->cpg_[i] = read_cpg_state(r);
        read_normalizer(r, t->norm_);
        for (ModuleNets& m : t->mods_) {
            const bool use_cpg = r.u8() != 0;
            require(use_cpg == m.use_cpg, "checkpoint actor kind mismatch");
            read_module_nets(r, m);
        }
        if (with_buffer) read_buffer(r, t->buffer_);
        return t;
    }

  private:
    void configure_opt(Adam& opt) const {
        opt.lr = cfg_.train.lr;
        opt.clip_norm = cfg_.train.clip_norm;
    }

    void apply_transfer_routine() {
        if (n_mod_ < 2 || cfg_.modular.routine <= 1) return;
        require(!cfg_.modular.source_checkpoint.empty(),
                "transfer routines 2 and 3 need modular.source_checkpoint");
        auto src = Trainer::load(cfg_.modular.source_checkpoint);
        require(src->n_mod_ == 1, "transfer source must be a single-module checkpoint");
        require(src->mods_[0].use_cpg, "transfer source must use the cpg actor");
        const int last = cfg_.modular.routine == 3 ? n_mod_ - 1 : 0;
        for (int m = 0; m <= last; ++m) {
            init_actor_from_source(mods_[static_cast<size_t>(m)].actor, src->mods_[0].actor, rng_);
            mods_[static_cast<size_t>(m)].actor_targ = mods_[static_cast<size_t>(m)].actor;
        }
    }

    void reset_episode() {
        env_.reset();
        obs_hist_.clear();
        obs_hist_.push_back(env_.current_obs());
        if (!norm_.frozen) norm_.update(obs_hist_.back());
        cur_goal_ = env_.current_goal();
        cpg_.clear();
        for (int m = 0; m < n_mod_; ++m)
            cpg_.push_back(CpgState::initial(rng_, mods_[m].slices.joints, cfg_.env.dt));
        ep_return_ = 0.0;
        ep_steps_ = 0;
        buffer_.begin_episode();
    }

    Mat window_from(const std::deque<Vec>& hist) const {
        const int od = obs_dim(cfg_.env);
        const int to = cfg_.train.tau_o;
        Mat w(od, to);
        const int have = static_cast<int>(hist.size());
        for (int k = 0; k < to; ++k) {
            const int idx = std::max(have - to + k, 0);
            w.col(k) = hist[static_cast<size_t>(idx)];
        }
        return w;
    }

    uint64_t eval_seed() const {
        return cfg_.seed * 7919ull + static_cast<uint64_t>(env_steps_);
    }

    std::string out_path(const std::string& name) const {
        return (std::filesystem::path(cfg_.out_dir) / name).string();
    }

    void open_logs() {
        if (cfg_.out_dir.empty() || metrics_) return;
        std::filesystem::create_directories(cfg_.out_dir);
        metrics_ = std::make_unique<CsvWriter>(
            out_path("metrics.csv"),
            std::vector<std::string>{"env_steps", "episode", "ep_return", "ep_steps", "q1_loss",
                                     "q2_loss", "actor_obj"},
            env_steps_ > 0);
        evals_ = std::make_unique<CsvWriter>(
            out_path("evals.csv"), std::vector<std::string>{"env_steps", "mean_return"},
            env_steps_ > 0);
    }

    void write_env_state(BinWriter& w) const {
        const CrawlerState& s = env_.state();
        w.f64(s.x);
        w.f64(s.y);
        w.f64(s.heading);
        w.f64(s.vx);
        w.f64(s.vy);
        w.f64(s.yaw_rate);
        w.f64(s.z);
        w.vec(s.joints);
        w.vec(s.joint_rates);
        w.u64(s.contact.size());
        for (bool c : s.contact) w.u8(c ? 1 : 0);
        w.u64(s.fault.size());
        for (bool f : s.fault) w.u8(f ? 1 : 0);
        w.i64(s.step);
        w.f64(s.stride_scale);
        w.f64(env_.goal_x());
        w.f64(env_.goal_y());
        w.i32(env_.waypoint_index());
    }

    void read_env_state(BinReader& r) {
        CrawlerState s(cfg_.env);
        s.x = r.f64();
        s.y = r.f64();
        s.heading = r.f64();
        s.vx = r.f64();
        s.vy = r.f64();
        s.yaw_rate = r.f64();
        s.z = r.f64();
        s.joints = r.vec();
        s.joint_rates = r.vec();
        require(s.joints.size() == cfg_.env.joints() && s.joint_rates.size() == cfg_.env.joints(),
                "checkpoint joint count mismatch");
        const uint64_t ncontact = r.u64();
        require(ncontact == s.contact.size(), "checkpoint contact count mismatch");
        for (uint64_t i = 0; i < ncontact; ++i) s.contact[i] = r.u8() != 0;
        const uint64_t nfault = r.u64();
        require(nfault == s.fault.size(), "checkpoint fault count mismatch");
        for (uint64_t i = 0; i < nfault; ++i) s.fault[i] = r.u8() != 0;
        s.step = r.i64();
        s.stride_scale = r.f64();
        const double gx = r.f64();
        const double gy = r.f64();
        const int wp = r.i32();
        env_.restore(s, gx, gy, wp);
    }

    static void write_module_nets(BinWriter& w, ModuleNets& m) {
        auto dump = [&w](const std::vector<Dense*>& layers) {
            for (const Dense* l : layers) write_dense(w, *l);
        };
        dump(m.actor_layers());
        dump(m.actor_targ_layers());
        write_adam(w, m.opt_actor);
        for (size_t k = 0; k < m.critics.size(); ++k) {
            dump(m.critics[k].layers());
            dump(m.critic_targs[k].layers());
            write_adam(w, m.opt_critic[k]);
        }
    }

    static void read_module_nets(BinReader& r, ModuleNets& m) {
        auto fill = [&r](const std::vector<Dense*>& layers) {
            for (Dense* l : layers) read_dense(r, *l);
        };
        fill(m.actor_layers());
        fill(m.actor_targ_layers());
        read_adam(r, m.opt_actor);
        for (size_t k = 0; k < m.critics.size(); ++k) {
            fill(m.critics[k].layers());
            fill(m.critic_targs[k].layers());
            read_adam(r, m.opt_critic[k]);
        }
    }

    RunConfig cfg_;
    int n_mod_;
    Modulation mod_;
    Rng rng_;
    CrawlerEnv env_;
    Normalizer norm_;
    ReplayBuffer buffer_;
    std::vector<ModuleNets> mods_;

    std::deque<Vec> obs_hist_;
    Vec cur_goal_;
    std::vector<CpgState> cpg_;
    double ep_return_ = 0.0;
    long ep_steps_ = 0;

    long env_steps_ = 0;
    long episodes_ = 0;
    long update_calls_ = 0;
    long segments_since_update_ = 0;
    double last_ep_return_ = 0.0;
    long last_ep_steps_ = 0;
    double last_q_loss_[2] = {0.0, 0.0};
    double last_actor_obj_ = 0.0;

    std::unique_ptr<CsvWriter> metrics_, evals_;
};

}  // namespace cpgrl
