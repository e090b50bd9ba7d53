#pragma once

#include <utility>

#include "cpgrl/common.hpp"

namespace cpgrl {

// External modulation constants scaling the network parameters, plus the
// second-order dynamics constants of the amplitude/offset subsystems.
struct Modulation {
    double alpha_w = 600.0;
    double alpha_phi = 3.14159265358979323846;
    double alpha_omega = 20.0;
    double alpha_A = 0.8;
    double alpha_B = 0.2;
    double alpha_a = 20.0;
    double beta_a = 5.0;
    double alpha_b = 20.0;
    double beta_b = 5.0;

    void validate() const {
        require(alpha_w >= 0 && alpha_phi >= 0 && alpha_omega >= 0 && alpha_A >= 0 && alpha_B >= 0,
                "Modulation: alpha constants must be nonnegative");
        require(alpha_A + alpha_B <= 1.0 + 1e-12, "Modulation: alpha_A + alpha_B must not exceed 1");
        require(alpha_a > 0 && beta_a > 0 && alpha_b > 0 && beta_b > 0,
                "Modulation: second-order dynamics constants must be positive");
    }
};

inline int pair_count(int n) { return n * (n - 1) / 2; }

// Oscillator-network parameter set, stored pre-modulation: the quantity the
// actor heads emit after the bounding affine map. w symmetric zero-diagonal,
// phi_bias skew-symmetric; both materialized from packed upper triangles.
struct CpgParams {
    int n = 0;
    Mat w;         // n x n, entries in [0, 1]
    Mat phi_bias;  // n x n, entries in [-1, 1]
    Vec omega;     // [0, 1]
    Vec amp;       // [0, 1]
    Vec offset;    // [-1, 1]

    explicit CpgParams(int n_ = 0)
        : n(n_), w(Mat::Zero(n_, n_)), phi_bias(Mat::Zero(n_, n_)),
          omega(Vec::Zero(n_)), amp(Vec::Zero(n_)), offset(Vec::Zero(n_)) {}

    void validate() const {
        require(n >= 1, "CpgParams: need at least one oscillator");
        for (int i = 0; i < n; ++i) {
            require(w(i, i) == 0.0 && phi_bias(i, i) == 0.0, "CpgParams: diagonals must be zero");
            for (int j = 0; j < n; ++j) {
                require(w(i, j) == w(j, i), "CpgParams: w must be symmetric");
                require(phi_bias(i, j) == -phi_bias(j, i), "CpgParams: phi_bias must be skew-symmetric");
                require(w(i, j) >= 0.0 && w(i, j) <= 1.0, "CpgParams: w out of [0,1]");
                require(phi_bias(i, j) >= -1.0 && phi_bias(i, j) <= 1.0, "CpgParams: phi_bias out of [-1,1]");
            }
            require(omega[i] >= 0.0 && omega[i] <= 1.0, "CpgParams: omega out of [0,1]");
            require(amp[i] >= 0.0 && amp[i] <= 1.0, "CpgParams: amp out of [0,1]");
            require(offset[i] >= -1.0 && offset[i] <= 1.0, "CpgParams: offset out of [-1,1]");
        }
    }
};

// Bounds of each packed head after the affine map, in head order
// {w, phi_bias, omega, amp, offset}.
struct HeadBounds {
    double lo, hi;
};
inline constexpr HeadBounds kHeadBounds[5] = {
    {0.0, 1.0}, {-1.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}, {-1.0, 1.0}};

inline int packed_size(int n) { return 2 * pair_count(n) + 3 * n; }

// x in [-1,1] -> [lo, hi].
inline double affine_bound(double x, HeadBounds b) {
    return 0.5 * (x * (b.hi - b.lo) + (b.hi + b.lo));
}
inline double affine_bound_slope(HeadBounds b) { return 0.5 * (b.hi - b.lo); }

inline int head_size(int n, int head) { return head < 2 ? pair_count(n) : n; }

// Assembles CpgParams from five raw head vectors in [-1,1] of sizes
// {n(n-1)/2, n(n-1)/2, n, n, n}. Pair entries fill the upper triangle
// (offset 1) row-major, mirrored symmetrically for w and negated into the
// lower triangle for phi_bias.
inline CpgParams unpack_params(const std::vector<Vec>& heads, int n) {
    require(heads.size() == 5, "unpack_params: expected five head vectors");
    for (int h = 0; h < 5; ++h)
        require(static_cast<int>(heads[h].size()) == head_size(n, h),
                "unpack_params: head size mismatch");
    CpgParams p(n);
    int idx = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j, ++idx) {
            const double wv = affine_bound(heads[0][idx], kHeadBounds[0]);
            const double pv = affine_bound(heads[1][idx], kHeadBounds[1]);
            p.w(i, j) = p.w(j, i) = wv;
            p.phi_bias(i, j) = pv;
            p.phi_bias(j, i) = -pv;
        }
    }
    for (int i = 0; i < n; ++i) {
        p.omega[i] = affine_bound(heads[2][i], kHeadBounds[2]);
        p.amp[i] = affine_bound(heads[3][i], kHeadBounds[3]);
        p.offset[i] = affine_bound(heads[4][i], kHeadBounds[4]);
    }
    return p;
}

// Flat packed view (post-affine values), order {w pairs, phi pairs, omega, amp, offset}.
inline Vec pack_params(const CpgParams& p) {
    Vec out(packed_size(p.n));
    int idx = 0;
    for (int i = 0; i < p.n; ++i)
        for (int j = i + 1; j < p.n; ++j, ++idx) {
            out[idx] = p.w(i, j);
            out[pair_count(p.n) + idx] = p.phi_bias(i, j);
        }
    const int m = pair_count(p.n);
    out.segment(2 * m, p.n) = p.omega;
    out.segment(2 * m + p.n, p.n) = p.amp;
    out.segment(2 * m + 2 * p.n, p.n) = p.offset;
    return out;
}

inline CpgParams params_from_packed(const Vec& flat, int n) {
    require(static_cast<int>(flat.size()) == packed_size(n), "params_from_packed: size mismatch");
    CpgParams p(n);
    const int m = pair_count(n);
    int idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++idx) {
            p.w(i, j) = p.w(j, i) = flat[idx];
            p.phi_bias(i, j) = flat[m + idx];
            p.phi_bias(j, i) = -flat[m + idx];
        }
    p.omega = flat.segment(2 * m, n);
    p.amp = flat.segment(2 * m + n, n);
    p.offset = flat.segment(2 * m + 2 * n, n);
    return p;
}

// Uniform draw over the packed parameter box; used by the babbling phase.
inline CpgParams random_params(Rng& rng, int n) {
    const int m = pair_count(n);
    Vec flat(packed_size(n));
    for (int i = 0; i < m; ++i) flat[i] = uniform(rng, kHeadBounds[0].lo, kHeadBounds[0].hi);
    for (int i = 0; i < m; ++i) flat[m + i] = uniform(rng, kHeadBounds[1].lo, kHeadBounds[1].hi);
    for (int i = 0; i < n; ++i) flat[2 * m + i] = uniform(rng, kHeadBounds[2].lo, kHeadBounds[2].hi);
    for (int i = 0; i < n; ++i) flat[2 * m + n + i] = uniform(rng, kHeadBounds[3].lo, kHeadBounds[3].hi);
    for (int i = 0; i < n; ++i) flat[2 * m + 2 * n + i] = uniform(rng, kHeadBounds[4].lo, kHeadBounds[4].hi);
    return params_from_packed(flat, n);
}

}  // namespace cpgrl
