#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>

#include "cpgrl/core.hpp"

using namespace cpgrl;
namespace fs = std::filesystem;

namespace {

// Relative output paths live under $CPGRL_OUT_ROOT when it is set.
std::string resolve_out(const std::string& out) {
    const char* root = std::getenv("CPGRL_OUT_ROOT");
    fs::path p(out);
    if (root && *root && p.is_relative()) return (fs::path(root) / p).string();
    return out;
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

std::vector<std::string> trajectory_header(int joints) {
    std::vector<std::string> h{"step", "x", "y", "heading", "vx", "vy", "yaw_rate", "z"};
    for (int j = 0; j < joints; ++j) h.push_back("q" + std::to_string(j));
    for (int j = 0; j < joints; ++j) h.push_back("g" + std::to_string(j));
    for (int j = 0; j < joints; ++j) h.push_back("tau" + std::to_string(j));
    h.push_back("reward");
    h.push_back("done");
    return h;
}

void write_trajectory(const std::string& path, const EpisodeLog& log, int joints) {
    CsvWriter w(path, trajectory_header(joints));
    for (const auto& row : log.trajectory) w.row(row);
}

// End-to-end gradient check through actor heads, affine bounding, and the
// CPG rollout: finite differences on sampled network weights.
double actor_through_cpg_check(uint64_t seed, double eps = 1e-5, double abs_floor = 1e-7) {
    Rng rng(seed);
    const int n = 4, in_dim = 9, steps = 5;
    ActorNet actor(n, in_dim, 12, 10, 8, rng);
    const Vec x = uniform_vec(rng, in_dim, -1.0, 1.0);
    const CpgState s0 = detail::sample_state(rng, n, 0.01);
    const Modulation mod;
    Mat coeff(steps, n);
    for (int t = 0; t < steps; ++t)
        for (int i = 0; i < n; ++i) coeff(t, i) = uniform(rng, -1.0, 1.0);

    const auto loss = [&]() {
        auto [st, ys] = cpg_rollout(actor.act(x), mod, s0, steps);
        (void)st;
        return (coeff.array() * ys.array()).sum();
    };

    const ActorNet::Cache cache = actor.forward(x);
    std::vector<Vec> heads(5);
    for (int h = 0; h < 5; ++h) heads[h] = cache.out[h].col(0);
    auto [st, ys, tape] = rollout_with_tape(unpack_params(heads, n), mod, s0, steps);
    (void)st;
    (void)ys;
    const Vec pk = backward(tape, coeff).packed();
    std::array<Mat, 5> dHeads;
    int off = 0;
    for (int h = 0; h < 5; ++h) {
        const int hs = head_size(n, h);
        dHeads[h] = pk.segment(off, hs) * affine_bound_slope(kHeadBounds[h]);
        off += hs;
    }
    actor.zero_grad();
    actor.backward(cache, dHeads);

    double worst = 0.0;
    const auto check = [&](double& param, double analytic) {
        const double keep = param;
        param = keep + eps;
        const double lp = loss();
        param = keep - eps;
        const double lm = loss();
        param = keep;
        const double fd = (lp - lm) / (2.0 * eps);
        const double scale = std::max({std::abs(analytic), std::abs(fd), abs_floor});
        worst = std::max(worst, std::abs(analytic - fd) / scale);
    };
    for (Dense* l : actor.layers()) {
        const long r = l->W.rows(), c = l->W.cols();
        check(l->W(0, 0), l->gW(0, 0));
        check(l->W(r / 2, c / 2), l->gW(r / 2, c / 2));
        check(l->W(r - 1, c - 1), l->gW(r - 1, c - 1));
        check(l->b(0), l->gb(0));
        check(l->b(r - 1), l->gb(r - 1));
    }
    return worst;
}

struct TrainOpts {
    std::string config, out, actor, reward, resume, finetune;
    uint64_t seed = 0;
    bool seed_set = false, light = false;
    long steps = -1, babble = -1;
    double stop_at = std::numeric_limits<double>::infinity();
};

int cmd_train(const TrainOpts& o) {
    std::unique_ptr<Trainer> t;
    if (!o.resume.empty()) {
        if (!o.config.empty() || o.seed_set || !o.actor.empty() || !o.reward.empty() ||
            !o.finetune.empty() || o.babble >= 0)
            throw config_error("--resume continues the embedded config; only --out and --steps apply");
        t = Trainer::load(o.resume);
        if (!o.out.empty()) t->set_out_dir(resolve_out(o.out));
        if (o.steps >= 0) t->set_total_steps(o.steps);
    } else {
        RunConfig cfg;
        std::unique_ptr<Trainer> src;
        if (!o.finetune.empty()) src = Trainer::load(o.finetune);
        if (!o.config.empty()) cfg = RunConfig::load(o.config);
        else if (src) cfg = src->config();
        if (o.seed_set) cfg.seed = o.seed;
        if (!o.actor.empty()) cfg.net.actor = o.actor;
        if (!o.reward.empty()) cfg.env.goal.mode = detail::goal_mode_from(o.reward);
        if (o.steps >= 0) cfg.train.total_steps = o.steps;
        if (o.babble >= 0) cfg.train.babble_steps = o.babble;
        cfg.out_dir = resolve_out(o.out.empty() ? cfg.out_dir : o.out);
        cfg.validate();
        t = std::make_unique<Trainer>(cfg);
        if (src) t->adopt_weights(*src);
    }
    const long total = o.steps >= 0 ? o.steps : t->config().train.total_steps;
    const long remaining = std::max<long>(0, total - t->env_steps());
    const Trainer::RunResult rr = t->run(remaining, o.stop_at);
    t->save(join(t->config().out_dir, "final.bin"), !o.light);
    std::cout << "train: steps=" << rr.env_steps << " episodes=" << rr.episodes
              << " last_eval=" << rr.last_eval
              << (rr.stopped_early ? " (stopped at threshold)" : "") << "\n";
    return 0;
}

struct ModularOpts {
    std::string config, out, source;
    uint64_t seed = 0;
    bool seed_set = false, light = false;
    int routine = 1;
    long steps = -1;
    double stop_at = std::numeric_limits<double>::infinity();
};

int cmd_train_modular(const ModularOpts& o) {
    RunConfig cfg;
    if (!o.config.empty()) cfg = RunConfig::load(o.config);
    else cfg.env.modules = 2;
    cfg.train.algo = "ddpg";
    cfg.modular.routine = o.routine;
    cfg.modular.n_mod = o.routine == 1 ? 1 : cfg.env.modules;
    if (!o.source.empty()) cfg.modular.source_checkpoint = o.source;
    if (o.seed_set) cfg.seed = o.seed;
    if (o.steps >= 0) cfg.train.total_steps = o.steps;
    cfg.out_dir = resolve_out(o.out.empty() ? cfg.out_dir : o.out);
    cfg.validate();
    if (o.routine >= 2 && cfg.modular.source_checkpoint.empty())
        throw config_error("routines 2 and 3 need --source-checkpoint");

    Trainer t(cfg);
    const Trainer::RunResult rr = t.run(std::max<long>(0, cfg.train.total_steps), o.stop_at);
    t.save(join(cfg.out_dir, "final.bin"), !o.light);
    std::cout << "train-modular: routine=" << o.routine << " steps=" << rr.env_steps
              << " episodes=" << rr.episodes << " last_eval=" << rr.last_eval << "\n";
    return 0;
}

struct DeployOpts {
    std::string checkpoint, out;
    uint64_t seed = 0;
    int episodes = 1;
    bool trajectory = false;
    std::vector<int> fault;
};

int cmd_deploy(const DeployOpts& o) {
    auto t = Trainer::load(o.checkpoint);
    const std::string out = resolve_out(o.out.empty() ? std::string("deploy") : o.out);
    fs::create_directories(out);
    EnvConfig env = t->config().env;
    const EnvConfig* override_env = nullptr;
    if (!o.fault.empty()) {
        env.fault_joints = o.fault;
        override_env = &env;
    }
    CsvWriter summary(join(out, "episodes.csv"),
                      {"episode", "seed", "return", "steps", "distance", "path_length",
                       "ms_per_step", "actor_calls"});
    for (int e = 0; e < o.episodes; ++e) {
        const uint64_t seed = o.seed + static_cast<uint64_t>(e);
        const EpisodeLog log = t->deploy_episode(seed, nullptr, 0, override_env, o.trajectory);
        summary.row(std::vector<double>{static_cast<double>(e), static_cast<double>(seed),
                                        log.ret, static_cast<double>(log.steps), log.distance,
                                        log.path_length, log.wall_ms_per_step,
                                        static_cast<double>(log.actor_calls)});
        if (o.trajectory)
            write_trajectory(join(out, "trajectory_" + std::to_string(e) + ".csv"), log,
                             t->config().env.joints());
        std::cout << "deploy: episode=" << e << " return=" << log.ret << " steps=" << log.steps
                  << " distance=" << log.distance << "\n";
    }
    return 0;
}

struct GradcheckOpts {
    int seeds = 10;
    int direct_cases = 50;
    double tol = 1e-4;
    bool direct_only = false;
};

int cmd_gradcheck(const GradcheckOpts& o) {
    bool all_pass = true;
    if (!o.direct_only) {
        GradcheckSpec spec;
        spec.seeds = o.seeds;
        spec.rel_tol = o.tol;
        const GradcheckReport rep = run_gradcheck(spec);
        std::cout << "gradcheck: cases=" << rep.cases << " worst_rel=" << rep.worst_rel << " (n="
                  << rep.worst_n << " steps=" << rep.worst_steps << " seed=" << rep.worst_seed
                  << ") tol=" << spec.rel_tol << (rep.pass ? " PASS" : " FAIL") << "\n";
        all_pass = all_pass && rep.pass;
    }
    double worst_direct = 0.0;
    for (int s = 0; s < o.direct_cases; ++s)
        worst_direct = std::max(worst_direct, direct_agreement_case(9000 + s));
    const bool direct_pass = worst_direct < 1e-10;
    std::cout << "direct: cases=" << o.direct_cases << " worst=" << worst_direct
              << " tol=1e-10" << (direct_pass ? " PASS" : " FAIL") << "\n";
    all_pass = all_pass && direct_pass;
    if (!o.direct_only) {
        double worst_e2e = 0.0;
        for (uint64_t s = 0; s < 5; ++s)
            worst_e2e = std::max(worst_e2e, actor_through_cpg_check(4400 + s));
        const bool e2e_pass = worst_e2e < o.tol;
        std::cout << "actor-cpg: cases=5 worst_rel=" << worst_e2e << " tol=" << o.tol
                  << (e2e_pass ? " PASS" : " FAIL") << "\n";
        all_pass = all_pass && e2e_pass;
    }
    if (!all_pass) throw numeric_error("gradient check failed");
    return 0;
}

struct AblateOpts {
    std::string checkpoint, param, out;
    std::vector<double> values;
    int episodes = 30;
    uint64_t seed = 1234;
};

int cmd_ablate(const AblateOpts& o) {
    static const std::set<std::string> known{"tau_c", "alpha_w", "alpha_phi", "alpha_A",
                                             "alpha_omega"};
    if (!known.count(o.param))
        throw config_error("ablate: unknown parameter \"" + o.param +
                           "\" (expected tau_c, alpha_w, alpha_phi, alpha_A, alpha_omega)");
    auto t = Trainer::load(o.checkpoint);
    const RunConfig& cfg = t->config();
    const bool is_tau = o.param == "tau_c";
    const double trained = [&] {
        if (is_tau) return static_cast<double>(cfg.train.tau_c);
        if (o.param == "alpha_w") return cfg.cpg.alpha_w;
        if (o.param == "alpha_phi") return cfg.cpg.alpha_phi;
        if (o.param == "alpha_A") return cfg.cpg.alpha_A;
        return cfg.cpg.alpha_omega;
    }();

    std::vector<double> grid = o.values;
    if (grid.empty()) {
        if (is_tau) grid = {1, 5, 10, 20, 50};
        else grid = {0.0, 0.25 * trained, 0.5 * trained, trained, 2.0 * trained};
    }
    if (std::find(grid.begin(), grid.end(), trained) == grid.end()) grid.push_back(trained);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (is_tau)
        for (double v : grid)
            if (v < 1.0 || v != std::floor(v))
                throw config_error("ablate: tau_c grid values must be positive integers");

    const std::string out = resolve_out(o.out.empty() ? std::string("ablate") : o.out);
    fs::create_directories(out);
    CsvWriter csv(join(out, "ablate_" + o.param + ".csv"),
                  {"value", "mean_return", "std_return", "min_return", "max_return", "episodes"});
    for (double v : grid) {
        Modulation mod = cfg.cpg;
        int tau = 0;
        if (is_tau) tau = static_cast<int>(v);
        else if (o.param == "alpha_w") mod.alpha_w = v;
        else if (o.param == "alpha_phi") mod.alpha_phi = v;
        else if (o.param == "alpha_A") mod.alpha_A = v;
        else mod.alpha_omega = v;

        Vec rets(o.episodes);
        for (int e = 0; e < o.episodes; ++e)
            rets[e] = t->deploy_episode(o.seed + static_cast<uint64_t>(e), &mod, tau).ret;
        const double mean = rets.mean();
        const double sd = o.episodes > 1
                              ? std::sqrt((rets.array() - mean).square().sum() / (o.episodes - 1))
                              : 0.0;
        csv.row(std::vector<double>{v, mean, sd, rets.minCoeff(), rets.maxCoeff(),
                                    static_cast<double>(o.episodes)});
        std::cout << "ablate " << o.param << "=" << v << ": mean=" << mean << " std=" << sd
                  << "\n";
    }
    return 0;
}

struct EnergyOpts {
    std::string ckpt_a, ckpt_b, out;
    int episodes = 5;
    uint64_t seed = 99;
};

int cmd_energy(const EnergyOpts& o) {
    auto ta = Trainer::load(o.ckpt_a);
    auto tb = Trainer::load(o.ckpt_b);
    const std::string out = resolve_out(o.out.empty() ? std::string("energy") : o.out);
    fs::create_directories(out);
    CsvWriter csv(join(out, "energy.csv"),
                  {"label", "episode", "seed", "work_J", "ms_per_iter", "completion_s",
                   "distance"});
    const auto run_side = [&](Trainer& t, const std::string& label) {
        double total_work = 0.0, total_ms = 0.0, total_T = 0.0, total_dist = 0.0;
        for (int e = 0; e < o.episodes; ++e) {
            const uint64_t seed = o.seed + static_cast<uint64_t>(e);
            const EpisodeLog log = t.deploy_episode(seed, nullptr, 0, nullptr, e == 0);
            const EnergyReport er = energy_audit(log.torques, log.deltas);
            const double T = log.steps * t.config().env.dt;
            csv.row({label, std::to_string(e), std::to_string(seed), csv_num(er.total),
                     csv_num(log.wall_ms_per_step), csv_num(T), csv_num(log.distance)});
            if (e == 0)
                write_trajectory(join(out, "trajectory_" + label + ".csv"), log,
                                 t.config().env.joints());
            total_work += er.total;
            total_ms += log.wall_ms_per_step;
            total_T += T;
            total_dist += log.distance;
        }
        std::cout << label << ": work=" << total_work / o.episodes
                  << " J, t=" << total_ms / o.episodes << " ms/iter, T=" << total_T / o.episodes
                  << " s, distance=" << total_dist / o.episodes << "\n";
        return std::pair{total_work, total_dist};
    };
    const auto [wa, da] = run_side(*ta, "a");
    const auto [wb, db] = run_side(*tb, "b");
    std::cout << "energy: a/b work ratio=" << (wb > 0 ? wa / wb : 0.0)
              << " a/b distance ratio=" << (db > 0 ? da / db : 0.0) << "\n";
    return 0;
}

struct PerturbOpts {
    std::string mode = "parameter", out;
    long steps = 2000;
    std::vector<long> at{500, 1500};
    uint64_t seed = 0;
};

int cmd_perturb(const PerturbOpts& o) {
    if (o.mode != "parameter" && o.mode != "state")
        throw config_error("perturb: mode must be parameter or state");
    const std::string out = resolve_out(o.out.empty() ? std::string("perturb") : o.out);
    fs::create_directories(out);
    const std::set<long> at(o.at.begin(), o.at.end());

    Rng rng(o.seed);
    const Modulation mod;
    CpgParams params = random_params(rng, 1);
    CpgState state = CpgState::initial(rng, 1, 0.01);

    CsvWriter csv(join(out, "perturb_" + o.mode + ".csv"),
                  {"step", "output", "bound", "perturbed"});
    double prev = state.output()[0];
    csv.row(std::vector<double>{0.0, prev, 0.0, 0.0});
    double max_ratio = 0.0, max_ratio_at_perturb = 0.0;
    for (long t = 1; t <= o.steps; ++t) {
        const double bound = smoothness_bound(state)[0];
        const bool hit = at.count(t) > 0;
        if (hit) {
            if (o.mode == "parameter") {
                params = random_params(rng, 1);
            } else {
                state.phase[0] = uniform(rng, 0.0, 2.0 * 3.14159265358979323846);
                state.phase_rate[0] = uniform(rng, 0.0, 20.0);
                state.amp[0] = uniform(rng, 0.0, 0.8);
                state.amp_rate[0] = uniform(rng, -0.5, 0.5);
                state.offset[0] = uniform(rng, -0.2, 0.2);
                state.offset_rate[0] = uniform(rng, -0.2, 0.2);
            }
        }
        state = cpg_step(params, mod, state);
        const double y = state.output()[0];
        csv.row(std::vector<double>{static_cast<double>(t), y, bound, hit ? 1.0 : 0.0});
        const double ratio = std::abs(y - prev) / std::max(bound, 1e-300);
        max_ratio = std::max(max_ratio, ratio);
        if (hit) max_ratio_at_perturb = std::max(max_ratio_at_perturb, ratio);
        prev = y;
    }
    std::cout << "perturb: mode=" << o.mode << " steps=" << o.steps
              << " max_jump_over_bound=" << max_ratio
              << " at_perturbation=" << max_ratio_at_perturb << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CPG locomotion policies: training, deployment, and analysis"};
    app.require_subcommand(1);
    int rc = 0;

    auto* init = app.add_subcommand("init-config", "Write a config file with full defaults");
    auto init_out = std::make_shared<std::string>("config.json");
    auto init_seed = std::make_shared<uint64_t>(0);
    init->add_option("--out", *init_out, "Config file path");
    init->add_option("--seed", *init_seed, "Seed to bake into the config");
    init->callback([init_out, init_seed, &rc] {
        RunConfig cfg;
        cfg.seed = *init_seed;
        const std::string path = resolve_out(*init_out);
        fs::path p(path);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        cfg.save(path);
        std::cout << "init-config: wrote " << path << "\n";
        rc = 0;
    });

    auto* train = app.add_subcommand("train", "Train a policy");
    auto topt = std::make_shared<TrainOpts>();
    train->add_option("--config", topt->config, "Config file");
    train->add_option("--seed", topt->seed, "Seed override");
    train->add_option("--out", topt->out, "Output directory override");
    train->add_option("--steps", topt->steps, "Total env steps override");
    train->add_option("--babble", topt->babble, "Babbling steps override");
    train->add_option("--actor", topt->actor, "Actor kind: cpg | ff")
        ->check(CLI::IsMember({"cpg", "ff"}));
    train->add_option("--reward", topt->reward, "Reward mode: free | goto | xaxis")
        ->check(CLI::IsMember({"free", "goto", "xaxis"}));
    train->add_option("--finetune-from", topt->finetune, "Checkpoint to transfer weights from");
    train->add_option("--resume", topt->resume, "Checkpoint to resume bit-exactly");
    train->add_option("--stop-at", topt->stop_at, "Stop once a periodic eval reaches this return");
    train->add_flag("--light-checkpoint", topt->light, "Final checkpoint without replay buffer");
    train->callback([train, topt, &rc] {
        topt->seed_set = train->count("--seed") > 0;
        rc = cmd_train(*topt);
    });

    auto* tm = app.add_subcommand("train-modular", "Train the multi-module system");
    auto mopt = std::make_shared<ModularOpts>();
    tm->add_option("--config", mopt->config, "Config file");
    tm->add_option("--routine", mopt->routine, "Weight-transfer routine")
        ->check(CLI::Range(1, 3));
    tm->add_option("--source-checkpoint", mopt->source, "Single-module source checkpoint");
    tm->add_option("--seed", mopt->seed, "Seed override");
    tm->add_option("--out", mopt->out, "Output directory override");
    tm->add_option("--steps", mopt->steps, "Total env steps override");
    tm->add_option("--stop-at", mopt->stop_at, "Stop once a periodic eval reaches this return");
    tm->add_flag("--light-checkpoint", mopt->light, "Final checkpoint without replay buffer");
    tm->callback([tm, mopt, &rc] {
        mopt->seed_set = tm->count("--seed") > 0;
        rc = cmd_train_modular(*mopt);
    });

    auto* dep = app.add_subcommand("deploy", "Run greedy episodes from a checkpoint");
    auto dopt = std::make_shared<DeployOpts>();
    dep->add_option("--checkpoint", dopt->checkpoint, "Trained checkpoint")->required();
    dep->add_option("--episodes", dopt->episodes, "Episode count");
    dep->add_option("--seed", dopt->seed, "Base episode seed");
    dep->add_option("--out", dopt->out, "Output directory");
    dep->add_option("--fault", dopt->fault, "Joint indices to freeze")->delimiter(',');
    dep->add_flag("--trajectory", dopt->trajectory, "Write per-step trajectory CSVs");
    dep->callback([dopt, &rc] { rc = cmd_deploy(*dopt); });

    auto* gc = app.add_subcommand("gradcheck", "Gradient oracle suite");
    auto gopt = std::make_shared<GradcheckOpts>();
    gc->add_option("--seeds", gopt->seeds, "Seeds per (n, steps) cell");
    gc->add_option("--tol", gopt->tol, "Relative tolerance");
    gc->add_option("--direct-cases", gopt->direct_cases, "Direct-recurrence case count");
    gc->add_flag("--direct-only", gopt->direct_only, "Only the decoupled direct recurrences");
    gc->callback([gopt, &rc] { rc = cmd_gradcheck(*gopt); });

    auto* ab = app.add_subcommand("ablate", "Deploy-time parameter sweep");
    auto aopt = std::make_shared<AblateOpts>();
    ab->add_option("--checkpoint", aopt->checkpoint, "Trained checkpoint")->required();
    ab->add_option("--param", aopt->param, "tau_c | alpha_w | alpha_phi | alpha_A | alpha_omega")
        ->required();
    ab->add_option("--values", aopt->values, "Grid values")->delimiter(',');
    ab->add_option("--episodes", aopt->episodes, "Episodes per grid value");
    ab->add_option("--seed", aopt->seed, "Base episode seed");
    ab->add_option("--out", aopt->out, "Output directory");
    ab->callback([aopt, &rc] { rc = cmd_ablate(*aopt); });

    auto* en = app.add_subcommand("energy", "Comparative work audit of two checkpoints");
    auto eopt = std::make_shared<EnergyOpts>();
    en->add_option("--checkpoint-a", eopt->ckpt_a, "First checkpoint")->required();
    en->add_option("--checkpoint-b", eopt->ckpt_b, "Second checkpoint")->required();
    en->add_option("--episodes", eopt->episodes, "Matched episodes per checkpoint");
    en->add_option("--seed", eopt->seed, "Base episode seed");
    en->add_option("--out", eopt->out, "Output directory");
    en->callback([eopt, &rc] { rc = cmd_energy(*eopt); });

    auto* pe = app.add_subcommand("perturb", "Single-oscillator perturbation traces");
    auto popt = std::make_shared<PerturbOpts>();
    pe->add_option("--mode", popt->mode, "state | parameter")
        ->check(CLI::IsMember({"state", "parameter"}));
    pe->add_option("--steps", popt->steps, "Trace length");
    pe->add_option("--at", popt->at, "Perturbation iterations")->delimiter(',');
    pe->add_option("--seed", popt->seed, "Seed");
    pe->add_option("--out", popt->out, "Output directory");
    pe->callback([popt, &rc] { rc = cmd_perturb(*popt); });

    try {
        app.parse(argc, argv);
        return rc;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const structural_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
