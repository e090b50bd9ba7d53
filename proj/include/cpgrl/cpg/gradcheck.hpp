#pragma once

#include <algorithm>
#include <vector>

#include "cpgrl/cpg/backward.hpp"

namespace cpgrl {

// Finite-difference validation of the analytic adjoint on random rollouts.
// Couplings are sampled within the integrator's stable regime: at the
// default modulation the lagged scheme diverges exponentially once
// amp * alpha_w * w * dt products pass ~1, where finite differences are
// ill-conditioned for any correct gradient.
struct GradcheckSpec {
    std::vector<int> sizes{2, 4, 8};
    std::vector<int> steps{5, 20};
    int seeds = 10;
    double eps = 1e-5;
    double rel_tol = 1e-4;
    double abs_floor = 1e-7;
    double w_hi = 0.05;  // pre-modulation coupling cap for sampling
    double dt = 0.01;
};

struct GradcheckReport {
    int cases = 0;
    double worst_rel = 0.0;
    int worst_n = 0, worst_steps = 0;
    uint64_t worst_seed = 0;
    bool pass = true;
};

namespace detail {
inline CpgParams sample_params(Rng& rng, int n, double w_hi) {
    const int m = pair_count(n);
    Vec flat(packed_size(n));
    for (int i = 0; i < m; ++i) flat[i] = uniform(rng, 0.0, w_hi);
    for (int i = 0; i < m; ++i) flat[m + i] = uniform(rng, -1.0, 1.0);
    for (int i = 0; i < n; ++i) flat[2 * m + i] = uniform(rng, 0.0, 1.0);
    for (int i = 0; i < n; ++i) flat[2 * m + n + i] = uniform(rng, 0.0, 1.0);
    for (int i = 0; i < n; ++i) flat[2 * m + 2 * n + i] = uniform(rng, -1.0, 1.0);
    return params_from_packed(flat, n);
}

inline CpgState sample_state(Rng& rng, int n, double dt) {
    CpgState s(n, dt);
    for (int i = 0; i < n; ++i) {
        s.phase[i] = uniform(rng, 0.0, 2.0 * 3.14159265358979323846);
        s.phase_rate[i] = uniform(rng, 0.0, 20.0);
        s.amp[i] = uniform(rng, 0.0, 0.8);
        s.amp_rate[i] = uniform(rng, -0.5, 0.5);
        s.amp_accel[i] = uniform(rng, -2.0, 2.0);
        s.offset[i] = uniform(rng, -0.2, 0.2);
        s.offset_rate[i] = uniform(rng, -0.2, 0.2);
        s.offset_accel[i] = uniform(rng, -2.0, 2.0);
    }
    return s;
}

inline double loss_value(const Vec& flat, int n, const Modulation& mod, const CpgState& s0,
                         int steps, const Mat& coeff) {
    auto [st, ys] = cpg_rollout(params_from_packed(flat, n), mod, s0, steps);
    (void)st;
    return (coeff.array() * ys.array()).sum();
}
}  // namespace detail

// Worst relative error between the analytic packed gradient and central
// finite differences of a random linear functional of the outputs.
inline double gradcheck_case(int n, int steps, uint64_t seed, const GradcheckSpec& spec,
                             const Modulation& mod = Modulation{}) {
    Rng rng(seed);
    const CpgParams params = detail::sample_params(rng, n, spec.w_hi);
    const CpgState s0 = detail::sample_state(rng, n, spec.dt);
    Mat coeff(steps, n);
    for (int t = 0; t < steps; ++t)
        for (int i = 0; i < n; ++i) coeff(t, i) = uniform(rng, -1.0, 1.0);

    auto [st, ys, tape] = rollout_with_tape(params, mod, s0, steps);
    (void)st;
    (void)ys;
    const Vec analytic = backward(tape, coeff).packed();

    const Vec flat = pack_params(params);
    double worst = 0.0;
    for (int k = 0; k < flat.size(); ++k) {
        Vec fp = flat, fm = flat;
        fp[k] += spec.eps;
        fm[k] -= spec.eps;
        const double fd = (detail::loss_value(fp, n, mod, s0, steps, coeff) -
                           detail::loss_value(fm, n, mod, s0, steps, coeff)) /
                          (2.0 * spec.eps);
        const double scale = std::max({std::abs(analytic[k]), std::abs(fd), spec.abs_floor});
        worst = std::max(worst, std::abs(analytic[k] - fd) / scale);
    }
    return worst;
}

inline GradcheckReport run_gradcheck(const GradcheckSpec& spec = GradcheckSpec{},
                                     const Modulation& mod = Modulation{}) {
    GradcheckReport rep;
    for (int n : spec.sizes)
        for (int steps : spec.steps)
            for (int s = 0; s < spec.seeds; ++s) {
                const uint64_t seed = 1000ull * n + 10ull * steps + s;
                const double rel = gradcheck_case(n, steps, seed, spec, mod);
                ++rep.cases;
                if (rel > rep.worst_rel) {
                    rep.worst_rel = rel;
                    rep.worst_n = n;
                    rep.worst_steps = steps;
                    rep.worst_seed = seed;
                }
            }
    rep.pass = rep.worst_rel < spec.rel_tol;
    return rep;
}

// Direct-recurrence agreement on decoupled networks: compares the literal
// per-parameter recurrences with the matching entries of the full adjoint
// for a single-output loss L = y_target at the final step.
inline double direct_agreement_case(uint64_t seed) {
    Rng rng(seed);
    const int n = 2 + static_cast<int>(rng() % 4);
    const int steps = 1 + static_cast<int>(rng() % 14);
    CpgParams params = detail::sample_params(rng, n, 0.5);
    params.w.setZero();
    const Modulation mod;
    const CpgState s0 = detail::sample_state(rng, n, 0.01);
    const int target = static_cast<int>(rng() % n);

    auto [st, ys, tape] = rollout_with_tape(params, mod, s0, steps);
    (void)ys;
    Mat coeff = Mat::Zero(steps, n);
    coeff(steps - 1, target) = 1.0;
    const CpgGradients g = backward(tape, coeff);
    const DirectPathGradients d = direct_path_gradients(tape, target, steps);

    const double chain_phase = st.amp[target] * std::cos(st.phase[target]);
    const double chain_amp = std::sin(st.phase[target]);
    double worst = 0.0;
    int idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++idx) {
            double expect_w = 0.0, expect_pb = 0.0;
            if (i == target) {
                expect_w = chain_phase * d.dphi_dw[j];
                expect_pb = chain_phase * d.dphi_dphi_bias[j];
            } else if (j == target) {
                expect_w = chain_phase * d.dphi_dw[i];
                expect_pb = -chain_phase * d.dphi_dphi_bias[i];
            }
            worst = std::max(worst, std::abs(g.w[idx] - expect_w));
            worst = std::max(worst, std::abs(g.phi_bias[idx] - expect_pb));
        }
    for (int i = 0; i < n; ++i) {
        const double eo = i == target ? chain_phase * d.dphi_domega : 0.0;
        const double ea = i == target ? chain_amp * d.damp_dA : 0.0;
        const double eb = i == target ? d.doffset_dB : 0.0;
        worst = std::max(worst, std::abs(g.omega[i] - eo));
        worst = std::max(worst, std::abs(g.amp[i] - ea));
        worst = std::max(worst, std::abs(g.offset[i] - eb));
    }
    return worst;
}

}  // namespace cpgrl
