#pragma once

#include <vector>

#include "cpgrl/env/crawler.hpp"
#include "cpgrl/nn/actor.hpp"
#include "cpgrl/nn/normalizer.hpp"

namespace cpgrl {

// Observation geometry for one modular agent. A module's private slice holds
// its own joint angles and rates plus the shared body-motion tail; the shared
// slice exposes the other modules' joint angles only. With n_mod == 1 there
// is no slicing: the agent sees the whole observation.
struct ModuleSlices {
    int joint_offset = 0;  // first joint driven by this module
    int joints = 0;        // joints (= oscillators) this module drives
    std::vector<int> own_rows;     // rows of the full observation
    std::vector<int> shared_rows;  // other modules' joint-angle rows
};

inline ModuleSlices module_slices(const EnvConfig& env, int n_mod, int m) {
    require(n_mod >= 1 && m >= 0 && m < n_mod, "module_slices: bad module index");
    const int nj = env.joints();
    ModuleSlices s;
    if (n_mod == 1) {
        s.joint_offset = 0;
        s.joints = nj;
        for (int i = 0; i < 2 * nj + 3; ++i) s.own_rows.push_back(i);
        return s;
    }
    require(n_mod == env.modules, "module_slices: n_mod must match env.modules");
    const int per = nj / n_mod;
    s.joint_offset = m * per;
    s.joints = per;
    for (int i = 0; i < per; ++i) s.own_rows.push_back(s.joint_offset + i);            // angles
    for (int i = 0; i < per; ++i) s.own_rows.push_back(nj + s.joint_offset + i);       // rates
    for (int i = 0; i < 3; ++i) s.own_rows.push_back(2 * nj + i);                      // body tail
    for (int k = 0; k < n_mod; ++k) {
        if (k == m) continue;
        for (int i = 0; i < per; ++i) s.shared_rows.push_back(k * per + i);
    }
    return s;
}

inline int module_actor_input_dim(const EnvConfig& env, int n_mod, int tau_o) {
    const ModuleSlices s = module_slices(env, n_mod, 0);
    const int own = static_cast<int>(s.own_rows.size());
    if (n_mod == 1) return own * tau_o + goal_dim();
    return own * tau_o + goal_dim() + 2 + static_cast<int>(s.shared_rows.size());
}

inline int critic_input_dim(const EnvConfig& env, int tau_o, int tau_c) {
    return obs_dim(env) * tau_o + goal_dim() + env.joints() * tau_c;
}

// Global context: the body-frame velocity direction taken from the newest raw
// observation (Module-1's frame is the shared body frame). Zero when at rest.
inline Vec global_context(const Mat& raw_window, const EnvConfig& env) {
    const int nj = env.joints();
    const double vf = raw_window(2 * nj, raw_window.cols() - 1);
    const double vl = raw_window(2 * nj + 1, raw_window.cols() - 1);
    Vec g = Vec::Zero(2);
    const double speed = std::hypot(vf, vl);
    if (speed > 1e-9) {
        g[0] = vf / speed;
        g[1] = vl / speed;
    }
    return g;
}

// Assembles one module's actor input from a raw observation window. Layout:
// [normalized own window (oldest first) | goal | o_g | shared joint angles].
// The leading block matches a single-module actor's input exactly, which is
// what makes block-copy weight transfer possible.
inline Vec module_actor_input(const Mat& raw_window, const Vec& goal, const Normalizer& norm,
                              const EnvConfig& env, int n_mod, int m, int tau_o) {
    require(raw_window.rows() == obs_dim(env) && raw_window.cols() == tau_o,
            "module_actor_input: window shape mismatch");
    require(goal.size() == goal_dim(), "module_actor_input: goal size mismatch");
    const ModuleSlices s = module_slices(env, n_mod, m);
    const int own = static_cast<int>(s.own_rows.size());

    Vec out(module_actor_input_dim(env, n_mod, tau_o));
    int pos = 0;
    for (int c = 0; c < tau_o; ++c) {
        const Vec normed = norm.apply(raw_window.col(c));
        for (int r = 0; r < own; ++r) out[pos++] = normed[s.own_rows[r]];
    }
    out.segment(pos, goal_dim()) = goal;
    pos += goal_dim();
    if (n_mod > 1) {
        out.segment(pos, 2) = global_context(raw_window, env);
        pos += 2;
        const Vec newest = raw_window.col(tau_o - 1);
        for (int r : s.shared_rows) out[pos++] = newest[r];
    }
    return out;
}

// Copies an actor trained on a narrower input into a wider one: overlapping
// leading input columns (and all deeper layers, which keep their shapes) are
// copied; the new trailing input columns get a fresh small-uniform init.
inline void init_actor_from_source(ActorNet& dst, const ActorNet& src, Rng& rng) {
    require(dst.n == src.n, "actor transfer: oscillator count mismatch");
    require(dst.input_dim >= src.input_dim, "actor transfer: target input narrower than source");
    require(dst.trunk1.W.rows() == src.trunk1.W.rows(), "actor transfer: trunk width mismatch");

    dst.trunk1.b = src.trunk1.b;
    dst.trunk1.W.leftCols(src.input_dim) = src.trunk1.W;
    const int grown = dst.input_dim - src.input_dim;
    if (grown > 0) {
        const double r = 1e-3;
        for (int i = 0; i < dst.trunk1.W.rows(); ++i)
            for (int j = src.input_dim; j < dst.input_dim; ++j)
                dst.trunk1.W(i, j) = uniform(rng, -r, r);
    }

    auto copy_same = [](Dense& d, const Dense& s) {
        require(d.W.rows() == s.W.rows() && d.W.cols() == s.W.cols(),
                "actor transfer: layer shape mismatch");
        d.W = s.W;
        d.b = s.b;
    };
    copy_same(dst.trunk2, src.trunk2);
    for (int h = 0; h < 5; ++h) {
        copy_same(dst.head_hidden[h], src.head_hidden[h]);
        copy_same(dst.head_out[h], src.head_out[h]);
    }
}

}  // namespace cpgrl
