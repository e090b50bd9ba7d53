#pragma once

#include <utility>
#include <vector>

#include "cpgrl/common.hpp"

namespace cpgrl {

// Reward coefficients shared by all three reward functions.
struct RewardCoeffs {
    double c_v = 2.0;
    double c_b = 4.0;
    double c_theta = 0.5;
    double c_z = 5.0;
    double c_j = 1e-3;
    double c_e = 5.0;
};

enum class GoalMode { free_locomotion, goto_goal, x_axis };

struct GoalSpec {
    GoalMode mode = GoalMode::free_locomotion;
    std::vector<std::pair<double, double>> waypoints;  // consumed cyclically when nonempty
    int switch_period = 100;
    double goal_distance = 10.0;  // random per-episode goal radius when no waypoint list
};

struct EnvConfig {
    int legs = 4;            // per module
    int modules = 1;         // rigidly joined segments sharing one body
    double dt = 0.01;
    double kp = 4.0;
    double kd = 0.2;
    double tau_max = 10.0;
    double s_max = 1.0;      // rad
    double stride_gain = 2.5;   // m per rad of stance hip sweep
    double yaw_gain = 0.3;      // rad per rad of left/right stance asymmetry
    double z_gain = 0.1;        // height proxy per rad of mean knee angle
    double knee_contact_threshold = 0.05;
    double z_limit = 0.09;      // tip-over bound on |z|
    double terrain_jitter = 0.1;  // per-episode stride-gain jitter fraction
    int episode_len = 2000;
    std::vector<int> fault_joints;  // frozen joint indices
    GoalSpec goal;
    RewardCoeffs reward;

    int joints() const { return 2 * legs * modules; }
    // Joint layout: per leg (hip, knee); legs ordered module-major, even legs
    // on the left side, odd on the right.
    int hip_index(int leg) const { return 2 * leg; }
    int knee_index(int leg) const { return 2 * leg + 1; }
    int total_legs() const { return legs * modules; }
};

struct CrawlerState {
    double x = 0.0, y = 0.0;
    double heading = 0.0;
    double vx = 0.0, vy = 0.0;   // world frame
    double yaw_rate = 0.0;
    double z = 0.0;              // height deviation proxy
    Vec joints, joint_rates;
    std::vector<bool> contact;   // per leg
    std::vector<bool> fault;     // per joint
    long step = 0;
    double stride_scale = 1.0;   // per-episode terrain factor

    explicit CrawlerState(const EnvConfig& cfg = EnvConfig{})
        : joints(Vec::Zero(cfg.joints())), joint_rates(Vec::Zero(cfg.joints())),
          contact(cfg.total_legs(), false), fault(cfg.joints(), false) {
        for (int j : cfg.fault_joints) {
            require(j >= 0 && j < cfg.joints(), "CrawlerState: fault joint index out of range");
            fault[j] = true;
        }
    }
};

struct StepOutcome {
    CrawlerState state;
    Vec torque;
    Vec joint_delta;
    bool done = false;
};

// One actuation step: PD torques under first-order actuator dynamics, then
// the stance-kinematics body update. A leg in contact (knee beyond the
// threshold) converts backward hip sweep into forward displacement; forward
// hip sweep in stance slips freely (contributions clamped at zero). Yaw
// follows left/right stance asymmetry; the height proxy follows mean knee
// angle. Frozen joints ignore torque and never move.
inline StepOutcome env_step(const CrawlerState& s, const Vec& g_j, const EnvConfig& cfg) {
    const int nj = cfg.joints();
    require(static_cast<int>(g_j.size()) == nj, "env_step: joint goal size mismatch");
    if (!g_j.allFinite()) throw numeric_error("env_step: non-finite joint goals");

    StepOutcome out;
    out.state = s;
    CrawlerState& ns = out.state;
    out.torque = Vec::Zero(nj);
    out.joint_delta = Vec::Zero(nj);

    for (int j = 0; j < nj; ++j) {
        if (s.fault[j]) continue;
        const double goal = clamp(g_j[j], -cfg.s_max, cfg.s_max);
        const double tau = clamp(cfg.kp * (goal - s.joints[j]) - cfg.kd * s.joint_rates[j],
                                 -cfg.tau_max, cfg.tau_max);
        double rate = tau;  // unit viscous coefficient
        double angle = clamp(s.joints[j] + rate * cfg.dt, -cfg.s_max, cfg.s_max);
        rate = (angle - s.joints[j]) / cfg.dt;  // reflect limit clamping in the rate
        out.torque[j] = tau;
        out.joint_delta[j] = angle - s.joints[j];
        ns.joints[j] = angle;
        ns.joint_rates[j] = rate;
    }

    // Stance contributions per module, ratcheted at zero.
    double stance_sum = 0.0, asym_sum = 0.0;
    for (int m = 0; m < cfg.modules; ++m) {
        for (int l = 0; l < cfg.legs; ++l) {
            const int leg = m * cfg.legs + l;
            const bool in_contact = ns.joints[cfg.knee_index(leg)] > cfg.knee_contact_threshold;
            ns.contact[leg] = in_contact;
            double contrib = 0.0;
            if (in_contact) contrib = std::max(-out.joint_delta[cfg.hip_index(leg)], 0.0);
            stance_sum += contrib;
            asym_sum += (l % 2 == 0) ? contrib : -contrib;
        }
    }
    const double inv_modules = 1.0 / cfg.modules;
    const double forward = cfg.stride_gain * s.stride_scale * stance_sum * inv_modules;
    ns.yaw_rate = cfg.yaw_gain * asym_sum * inv_modules / cfg.dt;
    const double dx = forward * std::cos(s.heading);
    const double dy = forward * std::sin(s.heading);
    ns.x = s.x + dx;
    ns.y = s.y + dy;
    ns.vx = dx / cfg.dt;
    ns.vy = dy / cfg.dt;
    ns.heading = s.heading + ns.yaw_rate * cfg.dt;

    double knee_mean = 0.0;
    for (int leg = 0; leg < cfg.total_legs(); ++leg) knee_mean += ns.joints[cfg.knee_index(leg)];
    knee_mean /= cfg.total_legs();
    ns.z = cfg.z_gain * knee_mean;

    ns.step = s.step + 1;
    out.done = ns.step >= cfg.episode_len || std::abs(ns.z) > cfg.z_limit;
    return out;
}

inline double reward_intrinsic(const CrawlerState& s, const RewardCoeffs& c) {
    return c.c_v * std::hypot(s.vx, s.vy) - c.c_theta * std::abs(s.yaw_rate) -
           c.c_z * std::abs(s.z) - c.c_j * s.joints.norm() + c.c_b;
}

inline double reward_goto(const CrawlerState& s, double gx, double gy, const RewardCoeffs& c) {
    const double dx = gx - s.x, dy = gy - s.y;
    const double dist = std::hypot(dx, dy);
    double align = 0.0;
    if (dist > 1e-9) align = (s.vx * dx + s.vy * dy) / dist;
    return c.c_e * align + reward_intrinsic(s, c);
}

inline double reward_xaxis(const CrawlerState& s, const RewardCoeffs& c) {
    return c.c_v * std::abs(s.vx) - c.c_theta * std::abs(s.yaw_rate) - c.c_z * std::abs(s.z) -
           c.c_j * s.joints.norm() + c.c_b;
}

// Proprioceptive observation: joint angles, joint rates, body-frame linear
// velocity, yaw rate; goal modes append the goal direction in the body frame.
inline int obs_dim(const EnvConfig& cfg) { return 2 * cfg.joints() + 3; }
inline int goal_dim() { return 2; }

inline Vec observe(const CrawlerState& s, const EnvConfig& cfg) {
    Vec o(obs_dim(cfg));
    const int nj = cfg.joints();
    o.segment(0, nj) = s.joints;
    o.segment(nj, nj) = s.joint_rates;
    const double c = std::cos(s.heading), sn = std::sin(s.heading);
    o[2 * nj] = c * s.vx + sn * s.vy;        // forward
    o[2 * nj + 1] = -sn * s.vx + c * s.vy;   // lateral
    o[2 * nj + 2] = s.yaw_rate;
    return o;
}

// Goal direction (unit vector) rotated into the body frame; zero when the
// goal is degenerate or the mode carries no goal.
inline Vec goal_vector(const CrawlerState& s, const EnvConfig& cfg, double gx, double gy) {
    Vec g = Vec::Zero(goal_dim());
    if (cfg.goal.mode != GoalMode::goto_goal) return g;
    const double dx = gx - s.x, dy = gy - s.y;
    const double dist = std::hypot(dx, dy);
    if (dist <= 1e-9) return g;
    const double c = std::cos(s.heading), sn = std::sin(s.heading);
    g[0] = (c * dx + sn * dy) / dist;
    g[1] = (-sn * dx + c * dy) / dist;
    return g;
}

inline Vec observe_with_goal(const CrawlerState& s, const EnvConfig& cfg, double gx, double gy) {
    if (cfg.goal.mode != GoalMode::goto_goal) return observe(s, cfg);
    Vec o(obs_dim(cfg) + goal_dim());
    o.segment(0, obs_dim(cfg)) = observe(s, cfg);
    o.segment(obs_dim(cfg), goal_dim()) = goal_vector(s, cfg, gx, gy);
    return o;
}

// Total and per-joint work: sum of |torque x joint displacement|.
struct EnergyReport {
    double total = 0.0;
    Vec per_joint;
};

inline EnergyReport energy_audit(const std::vector<Vec>& torques, const std::vector<Vec>& deltas) {
    require(torques.size() == deltas.size(), "energy_audit: torque/delta length mismatch");
    EnergyReport rep;
    if (torques.empty()) return rep;
    const int nj = static_cast<int>(torques.front().size());
    rep.per_joint = Vec::Zero(nj);
    for (size_t t = 0; t < torques.size(); ++t) {
        require(torques[t].size() == nj && deltas[t].size() == nj,
                "energy_audit: inconsistent joint count");
        rep.per_joint += torques[t].cwiseProduct(deltas[t]).cwiseAbs();
    }
    rep.total = rep.per_joint.sum();
    return rep;
}

// Stateful wrapper owning episode lifecycle, goal placement, and terrain
// jitter. Reward selection follows the goal mode.
class CrawlerEnv {
  public:
    explicit CrawlerEnv(const EnvConfig& cfg = EnvConfig{}, uint64_t seed = 0)
        : cfg_(cfg), rng_(seed), state_(cfg) {
        reset();
    }

    const EnvConfig& config() const { return cfg_; }
    const CrawlerState& state() const { return state_; }
    double goal_x() const { return gx_; }
    double goal_y() const { return gy_; }

    // Checkpoint support: exact resume needs the internal RNG and goal state.
    Rng& rng() { return rng_; }
    const Rng& rng() const { return rng_; }
    int waypoint_index() const { return waypoint_idx_; }
    void restore(const CrawlerState& s, double gx, double gy, int waypoint_idx) {
        state_ = s;
        gx_ = gx;
        gy_ = gy;
        waypoint_idx_ = waypoint_idx;
    }

    void reset() {
        state_ = CrawlerState(cfg_);
        state_.stride_scale = 1.0 + uniform(rng_, -cfg_.terrain_jitter, cfg_.terrain_jitter);
        waypoint_idx_ = 0;
        place_goal();
    }

    // Returns (observation, reward, done, torque, joint delta).
    struct Result {
        Vec obs;
        Vec goal;
        double reward = 0.0;
        bool done = false;
        Vec torque;
        Vec joint_delta;
    };

    Result step(const Vec& g_j) {
        StepOutcome oc = env_step(state_, g_j, cfg_);
        state_ = oc.state;
        advance_goal();
        Result r;
        r.obs = observe(state_, cfg_);
        r.goal = goal_vector(state_, cfg_, gx_, gy_);
        r.reward = reward_for(state_);
        r.done = oc.done;
        r.torque = oc.torque;
        r.joint_delta = oc.joint_delta;
        return r;
    }

    Vec current_obs() const { return observe(state_, cfg_); }
    Vec current_goal() const { return goal_vector(state_, cfg_, gx_, gy_); }

    double reward_for(const CrawlerState& s) const {
        switch (cfg_.goal.mode) {
            case GoalMode::goto_goal: return reward_goto(s, gx_, gy_, cfg_.reward);
            case GoalMode::x_axis: return reward_xaxis(s, cfg_.reward);
            default: return reward_intrinsic(s, cfg_.reward);
        }
    }

  private:
    void place_goal() {
        gx_ = gy_ = 0.0;
        if (cfg_.goal.mode != GoalMode::goto_goal) return;
        if (!cfg_.goal.waypoints.empty()) {
            gx_ = cfg_.goal.waypoints[waypoint_idx_].first;
            gy_ = cfg_.goal.waypoints[waypoint_idx_].second;
        } else {
            const double ang = uniform(rng_, 0.0, 2.0 * 3.14159265358979323846);
            gx_ = state_.x + cfg_.goal.goal_distance * std::cos(ang);
            gy_ = state_.y + cfg_.goal.goal_distance * std::sin(ang);
        }
    }

    void advance_goal() {
        if (cfg_.goal.mode != GoalMode::goto_goal || cfg_.goal.waypoints.empty()) return;
        if (state_.step > 0 && state_.step % cfg_.goal.switch_period == 0) {
            waypoint_idx_ = (waypoint_idx_ + 1) % static_cast<int>(cfg_.goal.waypoints.size());
            gx_ = cfg_.goal.waypoints[waypoint_idx_].first;
            gy_ = cfg_.goal.waypoints[waypoint_idx_].second;
        }
    }

    EnvConfig cfg_;
    Rng rng_;
    CrawlerState state_;
    double gx_ = 0.0, gy_ = 0.0;
    int waypoint_idx_ = 0;
};

}  // namespace cpgrl
