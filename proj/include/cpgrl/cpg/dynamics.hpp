#pragma once

#include <string>

#include "cpgrl/cpg/params.hpp"
#include "cpgrl/cpg/state.hpp"

namespace cpgrl {

// One explicit Euler step of the discrete oscillator network. Rates lag the
// positions: new rates/accelerations are evaluated on the previous state
// while positions advance with the previous rates. Returns the new state;
// the step output is the new state's output().
inline CpgState cpg_step(const CpgParams& p, const Modulation& mod, const CpgState& s) {
    const int n = s.size();
    require(p.n == n, "cpg_step: params/state size mismatch");
    const double dt = s.dt;

    CpgState ns(n, dt);
    ns.step = s.step + 1;

    for (int i = 0; i < n; ++i) {
        double coupling = 0.0;
        for (int k = 0; k < n; ++k) {
            if (k == i) continue;
            const double z = s.phase[k] - s.phase[i] - mod.alpha_phi * p.phi_bias(i, k);
            coupling += s.amp[k] * mod.alpha_w * p.w(i, k) * std::sin(z);
        }
        ns.phase_rate[i] = mod.alpha_omega * p.omega[i] + coupling;
        ns.amp_accel[i] = mod.alpha_a * (mod.beta_a * (mod.alpha_A * p.amp[i] - s.amp[i]) - s.amp_rate[i]);
        ns.offset_accel[i] =
            mod.alpha_b * (mod.beta_b * (mod.alpha_B * p.offset[i] - s.offset[i]) - s.offset_rate[i]);
    }
    ns.phase = s.phase + s.phase_rate * dt;
    ns.amp = s.amp + s.amp_rate * dt;
    ns.amp_rate = s.amp_rate + s.amp_accel * dt;
    ns.offset = s.offset + s.offset_rate * dt;
    ns.offset_rate = s.offset_rate + s.offset_accel * dt;

    for (const Vec* v : {&ns.phase, &ns.phase_rate, &ns.amp, &ns.amp_rate, &ns.amp_accel,
                         &ns.offset, &ns.offset_rate, &ns.offset_accel})
        if (!v->allFinite())
            throw numeric_error("cpg_step: non-finite state at step " + std::to_string(ns.step));
    return ns;
}

// steps x n matrix of outputs; row t holds the joint goals after step t+1.
inline std::pair<CpgState, Mat> cpg_rollout(const CpgParams& p, const Modulation& mod,
                                            const CpgState& state, int steps) {
    require(steps >= 1, "cpg_rollout: steps must be >= 1");
    Mat outputs(steps, state.size());
    CpgState s = state;
    for (int t = 0; t < steps; ++t) {
        s = cpg_step(p, mod, s);
        outputs.row(t) = s.output().transpose();
    }
    return {std::move(s), std::move(outputs)};
}

// State-dependent per-step output change bound: |y(t+1) - y(t)| is at most
// dt * (|offset_rate| + |amp_rate| + amp * |phase_rate|) evaluated at t.
inline Vec smoothness_bound(const CpgState& s) {
    return s.dt * (s.offset_rate.cwiseAbs() + s.amp_rate.cwiseAbs() +
                   s.amp.cwiseAbs().cwiseProduct(s.phase_rate.cwiseAbs()));
}

}  // namespace cpgrl
