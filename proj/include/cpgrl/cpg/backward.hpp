#pragma once

#include <utility>
#include <vector>

#include "cpgrl/cpg/tape.hpp"

namespace cpgrl {

// Loss gradients with respect to the pre-modulation parameters, in the same
// packed layout the actor heads produce. Pair gradients respect the packing:
// the w entry for pair (i,j) accumulates both ordered directions, the
// phi_bias entry accumulates the skew difference.
struct CpgGradients {
    int n = 0;
    Vec w;         // pair_count(n)
    Vec phi_bias;  // pair_count(n)
    Vec omega, amp, offset;

    explicit CpgGradients(int n_ = 0)
        : n(n_), w(Vec::Zero(pair_count(n_))), phi_bias(Vec::Zero(pair_count(n_))),
          omega(Vec::Zero(n_)), amp(Vec::Zero(n_)), offset(Vec::Zero(n_)) {}

    Vec packed() const {
        Vec out(packed_size(n));
        const int m = pair_count(n);
        out.segment(0, m) = w;
        out.segment(m, m) = phi_bias;
        out.segment(2 * m, n) = omega;
        out.segment(2 * m + n, n) = amp;
        out.segment(2 * m + 2 * n, n) = offset;
        return out;
    }

    bool all_finite() const { return packed().allFinite(); }
};

namespace detail {
// Adjoints of one CpgState's components.
struct StateAdjoint {
    Vec phase, phase_rate, amp, amp_rate, amp_accel, offset, offset_rate, offset_accel;
    explicit StateAdjoint(int n)
        : phase(Vec::Zero(n)), phase_rate(Vec::Zero(n)), amp(Vec::Zero(n)),
          amp_rate(Vec::Zero(n)), amp_accel(Vec::Zero(n)), offset(Vec::Zero(n)),
          offset_rate(Vec::Zero(n)), offset_accel(Vec::Zero(n)) {}
};
}  // namespace detail

// Full reverse-mode accumulation of dL/d(pre-modulation params) through the
// recorded rollout, given dL/dy per step. This is the total derivative over
// the unrolled graph, including the cross-parameter paths through neighbor
// amplitudes entering the phase coupling.
inline CpgGradients backward(const CpgTape& tape, const Mat& output_grads) {
    const int n = tape.size();
    const int steps = tape.steps();
    require(output_grads.rows() == steps && output_grads.cols() == n,
            "backward: output_grads shape mismatch");

    const CpgParams& p = tape.params;
    const Modulation& mod = tape.mod;
    const double dt = tape.states.front().dt;

    detail::StateAdjoint lam(n);
    Mat gw = Mat::Zero(n, n);   // ordered-pair accumulators, row i = receiving oscillator
    Mat gpb = Mat::Zero(n, n);
    CpgGradients g(n);

    for (int t = steps; t >= 1; --t) {
        const CpgState& st = tape.states[t];
        const CpgState& sp = tape.states[t - 1];

        // y_i^t = offset_i + amp_i sin(phase_i), all at t.
        for (int i = 0; i < n; ++i) {
            const double gy = output_grads(t - 1, i);
            lam.offset[i] += gy;
            lam.amp[i] += gy * std::sin(st.phase[i]);
            lam.phase[i] += gy * st.amp[i] * std::cos(st.phase[i]);
        }

        detail::StateAdjoint prev(n);
        // Linear position/rate advances (old rates, old accelerations).
        prev.phase = lam.phase;
        prev.phase_rate = lam.phase * dt;
        prev.amp = lam.amp;
        prev.amp_rate = lam.amp * dt + lam.amp_rate;
        prev.amp_accel = lam.amp_rate * dt;
        prev.offset = lam.offset;
        prev.offset_rate = lam.offset * dt + lam.offset_rate;
        prev.offset_accel = lam.offset_rate * dt;

        // New phase rate, evaluated on the previous state.
        for (int i = 0; i < n; ++i) {
            const double lr = lam.phase_rate[i];
            if (lr == 0.0) continue;
            g.omega[i] += mod.alpha_omega * lr;
            for (int k = 0; k < n; ++k) {
                if (k == i) continue;
                const double z = sp.phase[k] - sp.phase[i] - mod.alpha_phi * p.phi_bias(i, k);
                const double sz = std::sin(z), cz = std::cos(z);
                const double coupled = sp.amp[k] * mod.alpha_w * p.w(i, k);
                gw(i, k) += lr * sp.amp[k] * mod.alpha_w * sz;
                gpb(i, k) += lr * coupled * cz * (-mod.alpha_phi);
                prev.phase[k] += lr * coupled * cz;
                prev.phase[i] -= lr * coupled * cz;
                prev.amp[k] += lr * mod.alpha_w * p.w(i, k) * sz;
            }
        }
        // New accelerations, evaluated on the previous state.
        for (int i = 0; i < n; ++i) {
            const double la = lam.amp_accel[i];
            if (la != 0.0) {
                prev.amp[i] -= mod.alpha_a * mod.beta_a * la;
                prev.amp_rate[i] -= mod.alpha_a * la;
                g.amp[i] += mod.alpha_a * mod.beta_a * mod.alpha_A * la;
            }
            const double lb = lam.offset_accel[i];
            if (lb != 0.0) {
                prev.offset[i] -= mod.alpha_b * mod.beta_b * lb;
                prev.offset_rate[i] -= mod.alpha_b * lb;
                g.offset[i] += mod.alpha_b * mod.beta_b * mod.alpha_B * lb;
            }
        }
        lam = prev;
    }

    int idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++idx) {
            g.w[idx] = gw(i, j) + gw(j, i);
            g.phi_bias[idx] = gpb(i, j) - gpb(j, i);
        }
    return g;
}

// Partial derivatives of one oscillator's trajectory by the literal
// recurrences of the direct dependency path: each parameter influences its
// own oscillator's chain only, ignoring the cross paths through neighbor
// states. Mirrors the forward scheme in first-order form with zero base
// case; pre-modulation scaling included.
struct DirectPathGradients {
    Vec dphi_dphi_bias;  // per neighbor j: d phase_i^t / d phi_bias_ij
    Vec dphi_dw;         // per neighbor j: d phase_i^t / d w_ij
    double dphi_domega = 0.0;
    double damp_dA = 0.0;
    double doffset_dB = 0.0;
};

inline DirectPathGradients direct_path_gradients(const CpgTape& tape, int target, int step) {
    const int n = tape.size();
    require(target >= 0 && target < n, "direct_path_gradients: oscillator index out of range");
    require(step >= 0 && step <= tape.steps(), "direct_path_gradients: step out of range");

    const CpgParams& p = tape.params;
    const Modulation& mod = tape.mod;
    const double dt = tape.states.front().dt;
    const int i = target;

    Vec dphi_pb = Vec::Zero(n), dphidot_pb = Vec::Zero(n);
    Vec dphi_w = Vec::Zero(n), dphidot_w = Vec::Zero(n);
    double dphi_om = 0.0, dphidot_om = 0.0;
    double da = 0.0, dad = 0.0, daacc = 0.0;
    double db = 0.0, dbd = 0.0, dbacc = 0.0;

    for (int t = 1; t <= step; ++t) {
        const CpgState& sp = tape.states[t - 1];

        const Vec nphi_pb = dphi_pb + dphidot_pb * dt;
        const Vec nphi_w = dphi_w + dphidot_w * dt;
        const double nphi_om = dphi_om + dphidot_om * dt;
        const double na = da + dad * dt, nad = dad + daacc * dt;
        const double nb = db + dbd * dt, nbd = dbd + dbacc * dt;

        Vec ndphidot_pb = Vec::Zero(n), ndphidot_w = Vec::Zero(n);
        double coupling_phi_i = 0.0;  // d(coupling)/d phase_i, shared by the omega chain
        for (int k = 0; k < n; ++k) {
            if (k == i) continue;
            const double z = sp.phase[k] - sp.phase[i] - mod.alpha_phi * p.phi_bias(i, k);
            const double coupled = sp.amp[k] * mod.alpha_w * p.w(i, k);
            ndphidot_pb[k] = coupled * std::cos(z) * (-dphi_pb[k] - mod.alpha_phi);
            ndphidot_w[k] = sp.amp[k] * mod.alpha_w * std::sin(z) + coupled * std::cos(z) * (-dphi_w[k]);
            coupling_phi_i -= coupled * std::cos(z);
        }
        const double ndphidot_om = mod.alpha_omega + coupling_phi_i * dphi_om;
        const double ndaacc = mod.alpha_a * (mod.beta_a * (mod.alpha_A - da) - dad);
        const double ndbacc = mod.alpha_b * (mod.beta_b * (mod.alpha_B - db) - dbd);

        dphi_pb = nphi_pb; dphidot_pb = ndphidot_pb;
        dphi_w = nphi_w; dphidot_w = ndphidot_w;
        dphi_om = nphi_om; dphidot_om = ndphidot_om;
        da = na; dad = nad; daacc = ndaacc;
        db = nb; dbd = nbd; dbacc = ndbacc;
    }

    DirectPathGradients out;
    out.dphi_dphi_bias = dphi_pb;
    out.dphi_dw = dphi_w;
    out.dphi_domega = dphi_om;
    out.damp_dA = da;
    out.doffset_dB = db;
    return out;
}

}  // namespace cpgrl
