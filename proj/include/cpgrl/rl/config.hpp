#pragma once

#include <array>
#include <fstream>
#include <string>

#include <json.hpp>

#include "cpgrl/common.hpp"
#include "cpgrl/cpg/params.hpp"
#include "cpgrl/env/crawler.hpp"

namespace cpgrl {

struct TrainConfig {
    double gamma = 0.95;
    int batch = 64;
    double lr = 2e-4;
    long babble_steps = 10000;
    int update_every = 1;   // decision segments per gradient update
    int policy_delay = 2;   // actor update cadence in update calls (td3)
    int tau_c = 5;          // env steps per actor decision
    int tau_o = 5;          // stacked observations
    double sigma_explore = 0.1;
    double sigma_target = 0.2;
    double noise_clip = 0.5;
    double rho = 0.995;
    long buffer_capacity = 1000000;
    long total_steps = 200000;
    double clip_norm = 2.0;
    bool discounted_window = false;  // gamma^t weighting inside the reward window
    long eval_every = 0;             // env steps between greedy evals; 0 disables
    int eval_episodes = 1;
    long checkpoint_every = 0;       // env steps; 0 keeps only the final checkpoint
    std::string algo = "td3";        // td3 | ddpg
};

struct NetConfig {
    int trunk1 = 1024;
    int trunk2 = 512;
    int head_hidden = 512;
    std::array<int, 4> critic{1024, 1024, 512, 512};
    std::string actor = "cpg";  // cpg | ff
};

struct ModularConfig {
    int n_mod = 1;    // 1 = monolithic policy; otherwise one agent per body module
    int routine = 1;  // weight-transfer routine for train-modular
    std::string source_checkpoint;
};

struct RunConfig {
    uint64_t seed = 0;
    std::string out_dir = "run";
    EnvConfig env;
    Modulation cpg;
    TrainConfig train;
    NetConfig net;
    ModularConfig modular;

    void validate() const {
        const auto& e = env;
        require_cfg(e.legs >= 1 && e.modules >= 1, "env: legs and modules must be positive");
        require_cfg(e.dt > 0.0 && e.s_max > 0.0 && e.tau_max > 0.0, "env: dt, s_max, tau_max must be positive");
        require_cfg(e.kp >= 0.0 && e.kd >= 0.0, "env: PD gains must be nonnegative");
        require_cfg(e.episode_len >= 1, "env: episode_len must be positive");
        require_cfg(e.stride_gain >= 0.0 && e.yaw_gain >= 0.0 && e.z_gain >= 0.0,
                    "env: kinematic gains must be nonnegative");
        require_cfg(e.z_limit > 0.0, "env: z_limit must be positive");
        require_cfg(e.terrain_jitter >= 0.0 && e.terrain_jitter < 1.0,
                    "env: terrain_jitter must lie in [0, 1)");
        for (int j : e.fault_joints)
            require_cfg(j >= 0 && j < e.joints(), "env: fault joint index out of range");
        require_cfg(e.goal.switch_period >= 1, "env: goal switch_period must be positive");
        require_cfg(e.goal.goal_distance > 0.0, "env: goal_distance must be positive");

        try {
            cpg.validate();
        } catch (const std::exception& ex) {
            throw config_error(std::string("cpg: ") + ex.what());
        }

        const auto& t = train;
        require_cfg(t.gamma >= 0.0 && t.gamma <= 1.0, "train: gamma must lie in [0, 1]");
        require_cfg(t.batch >= 1, "train: batch must be positive");
        require_cfg(t.lr > 0.0, "train: lr must be positive");
        require_cfg(t.tau_c >= 1 && t.tau_o >= 1, "train: tau_c and tau_o must be positive");
        require_cfg(t.policy_delay >= 1 && t.update_every >= 1,
                    "train: update cadences must be positive");
        require_cfg(t.rho >= 0.0 && t.rho <= 1.0, "train: rho must lie in [0, 1]");
        require_cfg(t.sigma_explore >= 0.0 && t.sigma_target >= 0.0 && t.noise_clip >= 0.0,
                    "train: noise levels must be nonnegative");
        require_cfg(t.babble_steps >= 0 && t.total_steps >= 0, "train: step counts must be nonnegative");
        require_cfg(t.buffer_capacity >= static_cast<long>(t.batch) * t.tau_c,
                    "train: buffer_capacity too small for one batch");
        require_cfg(t.algo == "td3" || t.algo == "ddpg", "train: algo must be td3 or ddpg");

        const auto& n = net;
        require_cfg(n.trunk1 >= 1 && n.trunk2 >= 1 && n.head_hidden >= 1, "net: widths must be positive");
        for (int w : n.critic) require_cfg(w >= 1, "net: critic widths must be positive");
        require_cfg(n.actor == "cpg" || n.actor == "ff", "net: actor must be cpg or ff");

        const auto& m = modular;
        require_cfg(m.n_mod >= 1, "modular: n_mod must be positive");
        require_cfg(m.n_mod == 1 || m.n_mod == env.modules,
                    "modular: n_mod must be 1 or match env.modules");
        require_cfg(m.routine >= 1 && m.routine <= 3, "modular: routine must be 1, 2, or 3");
        if (m.n_mod > 1) {
            require_cfg(t.algo == "ddpg", "modular: multi-module training uses ddpg");
            require_cfg(n.actor == "cpg", "modular: multi-module training needs the cpg actor");
        }
    }

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);

    static RunConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open config file: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& ex) {
            throw config_error(std::string("config parse failure: ") + ex.what());
        }
        return from_json(j);
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw io_error("cannot write config file: " + path);
        out << to_json().dump(2) << "\n";
        if (!out) throw io_error("config write failure: " + path);
    }

  private:
    static void require_cfg(bool ok, const std::string& what) {
        if (!ok) throw config_error(what);
    }
};

namespace detail {

inline std::string goal_mode_name(GoalMode m) {
    switch (m) {
        case GoalMode::goto_goal: return "goto";
        case GoalMode::x_axis: return "xaxis";
        default: return "free";
    }
}

inline GoalMode goal_mode_from(const std::string& s) {
    if (s == "free") return GoalMode::free_locomotion;
    if (s == "goto") return GoalMode::goto_goal;
    if (s == "xaxis") return GoalMode::x_axis;
    throw config_error("unknown goal mode: " + s + " (expected free, goto, or xaxis)");
}

// Applies every key of a section object through `apply`, rejecting unknown
// keys so typos fail loudly rather than silently keeping defaults.
template <typename Fn>
void read_section(const nlohmann::json& root, const char* section, Fn&& apply) {
    if (!root.contains(section)) return;
    const nlohmann::json& sec = root.at(section);
    if (!sec.is_object()) throw config_error(std::string(section) + ": expected an object");
    for (const auto& [key, value] : sec.items()) {
        try {
            if (!apply(key, value))
                throw config_error(std::string(section) + ": unknown key \"" + key + "\"");
        } catch (const nlohmann::json::exception& ex) {
            throw config_error(std::string(section) + "." + key + ": " + ex.what());
        }
    }
}

}  // namespace detail

inline nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["out_dir"] = out_dir;

    nlohmann::json je;
    je["legs"] = env.legs;
    je["modules"] = env.modules;
    je["dt"] = env.dt;
    je["kp"] = env.kp;
    je["kd"] = env.kd;
    je["tau_max"] = env.tau_max;
    je["s_max"] = env.s_max;
    je["stride_gain"] = env.stride_gain;
    je["yaw_gain"] = env.yaw_gain;
    je["z_gain"] = env.z_gain;
    je["knee_contact_threshold"] = env.knee_contact_threshold;
    je["z_limit"] = env.z_limit;
    je["terrain_jitter"] = env.terrain_jitter;
    je["episode_len"] = env.episode_len;
    je["fault_joints"] = env.fault_joints;
    je["goal_mode"] = detail::goal_mode_name(env.goal.mode);
    je["waypoints"] = nlohmann::json::array();
    for (const auto& [x, y] : env.goal.waypoints) je["waypoints"].push_back({x, y});
    je["switch_period"] = env.goal.switch_period;
    je["goal_distance"] = env.goal.goal_distance;
    je["c_v"] = env.reward.c_v;
    je["c_b"] = env.reward.c_b;
    je["c_theta"] = env.reward.c_theta;
    je["c_z"] = env.reward.c_z;
    je["c_j"] = env.reward.c_j;
    je["c_e"] = env.reward.c_e;
    j["env"] = je;

    nlohmann::json jc;
    jc["alpha_w"] = cpg.alpha_w;
    jc["alpha_phi"] = cpg.alpha_phi;
    jc["alpha_omega"] = cpg.alpha_omega;
    jc["alpha_A"] = cpg.alpha_A;
    jc["alpha_B"] = cpg.alpha_B;
    jc["alpha_a"] = cpg.alpha_a;
    jc["beta_a"] = cpg.beta_a;
    jc["alpha_b"] = cpg.alpha_b;
    jc["beta_b"] = cpg.beta_b;
    j["cpg"] = jc;

    nlohmann::json jt;
    jt["gamma"] = train.gamma;
    jt["batch"] = train.batch;
    jt["lr"] = train.lr;
    jt["babble_steps"] = train.babble_steps;
    jt["update_every"] = train.update_every;
    jt["policy_delay"] = train.policy_delay;
    jt["tau_c"] = train.tau_c;
    jt["tau_o"] = train.tau_o;
    jt["sigma_explore"] = train.sigma_explore;
    jt["sigma_target"] = train.sigma_target;
    jt["noise_clip"] = train.noise_clip;
    jt["rho"] = train.rho;
    jt["buffer_capacity"] = train.buffer_capacity;
    jt["total_steps"] = train.total_steps;
    jt["clip_norm"] = train.clip_norm;
    jt["discounted_window"] = train.discounted_window;
    jt["eval_every"] = train.eval_every;
    jt["eval_episodes"] = train.eval_episodes;
    jt["checkpoint_every"] = train.checkpoint_every;
    jt["algo"] = train.algo;
    j["train"] = jt;

    nlohmann::json jn;
    jn["trunk1"] = net.trunk1;
    jn["trunk2"] = net.trunk2;
    jn["head_hidden"] = net.head_hidden;
    jn["critic"] = net.critic;
    jn["actor"] = net.actor;
    j["net"] = jn;

    nlohmann::json jm;
    jm["n_mod"] = modular.n_mod;
    jm["routine"] = modular.routine;
    jm["source_checkpoint"] = modular.source_checkpoint;
    j["modular"] = jm;
    return j;
}

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    if (!j.is_object()) throw config_error("config root must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "seed") c.seed = value.get<uint64_t>();
        else if (key == "out_dir") c.out_dir = value.get<std::string>();
        else if (key == "env" || key == "cpg" || key == "train" || key == "net" ||
                 key == "modular") continue;
        else throw config_error("unknown top-level key \"" + key + "\"");
    }

    detail::read_section(j, "env", [&](const std::string& k, const nlohmann::json& v) {
        auto& e = c.env;
        if (k == "legs") e.legs = v.get<int>();
        else if (k == "modules") e.modules = v.get<int>();
        else if (k == "dt") e.dt = v.get<double>();
        else if (k == "kp") e.kp = v.get<double>();
        else if (k == "kd") e.kd = v.get<double>();
        else if (k == "tau_max") e.tau_max = v.get<double>();
        else if (k == "s_max") e.s_max = v.get<double>();
        else if (k == "stride_gain") e.stride_gain = v.get<double>();
        else if (k == "yaw_gain") e.yaw_gain = v.get<double>();
        else if (k == "z_gain") e.z_gain = v.get<double>();
        else if (k == "knee_contact_threshold") e.knee_contact_threshold = v.get<double>();
        else if (k == "z_limit") e.z_limit = v.get<double>();
        else if (k == "terrain_jitter") e.terrain_jitter = v.get<double>();
        else if (k == "episode_len") e.episode_len = v.get<int>();
        else if (k == "fault_joints") e.fault_joints = v.get<std::vector<int>>();
        else if (k == "goal_mode") e.goal.mode = detail::goal_mode_from(v.get<std::string>());
        else if (k == "waypoints") {
            e.goal.waypoints.clear();
            for (const auto& p : v) {
                if (!p.is_array() || p.size() != 2)
                    throw config_error("env.waypoints entries must be [x, y] pairs");
                e.goal.waypoints.emplace_back(p[0].get<double>(), p[1].get<double>());
            }
        }
        else if (k == "switch_period") e.goal.switch_period = v.get<int>();
        else if (k == "goal_distance") e.goal.goal_distance = v.get<double>();
        else if (k == "c_v") e.reward.c_v = v.get<double>();
        else if (k == "c_b") e.reward.c_b = v.get<double>();
        else if (k == "c_theta") e.reward.c_theta = v.get<double>();
        else if (k == "c_z") e.reward.c_z = v.get<double>();
        else if (k == "c_j") e.reward.c_j = v.get<double>();
        else if (k == "c_e") e.reward.c_e = v.get<double>();
        else return false;
        return true;
    });

    detail::read_section(j, "cpg", [&](const std::string& k, const nlohmann::json& v) {
        auto& m = c.cpg;
        if (k == "alpha_w") m.alpha_w = v.get<double>();
        else if (k == "alpha_phi") m.alpha_phi = v.get<double>();
        else if (k == "alpha_omega") m.alpha_omega = v.get<double>();
        else if (k == "alpha_A") m.alpha_A = v.get<double>();
        else if (k == "alpha_B") m.alpha_B = v.get<double>();
        else if (k == "alpha_a") m.alpha_a = v.get<double>();
        else if (k == "beta_a") m.beta_a = v.get<double>();
        else if (k == "alpha_b") m.alpha_b = v.get<double>();
        else if (k == "beta_b") m.beta_b = v.get<double>();
        else return false;
        return true;
    });

    detail::read_section(j, "train", [&](const std::string& k, const nlohmann::json& v) {
        auto& t = c.train;
        if (k == "gamma") t.gamma = v.get<double>();
        else if (k == "batch") t.batch = v.get<int>();
        else if (k == "lr") t.lr = v.get<double>();
        else if (k == "babble_steps") t.babble_steps = v.get<long>();
        else if (k == "update_every") t.update_every = v.get<int>();
        else if (k == "policy_delay") t.policy_delay = v.get<int>();
        else if (k == "tau_c") t.tau_c = v.get<int>();
        else if (k == "tau_o") t.tau_o = v.get<int>();
        else if (k == "sigma_explore") t.sigma_explore = v.get<double>();
        else if (k == "sigma_target") t.sigma_target = v.get<double>();
        else if (k == "noise_clip") t.noise_clip = v.get<double>();
        else if (k == "rho") t.rho = v.get<double>();
        else if (k == "buffer_capacity") t.buffer_capacity = v.get<long>();
        else if (k == "total_steps") t.total_steps = v.get<long>();
        else if (k == "clip_norm") t.clip_norm = v.get<double>();
        else if (k == "discounted_window") t.discounted_window = v.get<bool>();
        else if (k == "eval_every") t.eval_every = v.get<long>();
        else if (k == "eval_episodes") t.eval_episodes = v.get<int>();
        else if (k == "checkpoint_every") t.checkpoint_every = v.get<long>();
        else if (k == "algo") t.algo = v.get<std::string>();
        else return false;
        return true;
    });

    detail::read_section(j, "net", [&](const std::string& k, const nlohmann::json& v) {
        auto& n = c.net;
        if (k == "trunk1") n.trunk1 = v.get<int>();
        else if (k == "trunk2") n.trunk2 = v.get<int>();
        else if (k == "head_hidden") n.head_hidden = v.get<int>();
        else if (k == "critic") {
            if (!v.is_array() || v.size() != 4)
                throw config_error("net.critic must be an array of 4 widths");
            for (int i = 0; i < 4; ++i) n.critic[i] = v[i].get<int>();
        }
        else if (k == "actor") n.actor = v.get<std::string>();
        else return false;
        return true;
    });

    detail::read_section(j, "modular", [&](const std::string& k, const nlohmann::json& v) {
        auto& m = c.modular;
        if (k == "n_mod") m.n_mod = v.get<int>();
        else if (k == "routine") m.routine = v.get<int>();
        else if (k == "source_checkpoint") m.source_checkpoint = v.get<std::string>();
        else return false;
        return true;
    });

    c.validate();
    return c;
}

}  // namespace cpgrl
