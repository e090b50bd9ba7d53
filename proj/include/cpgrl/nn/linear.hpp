#pragma once

#include <vector>

#include "cpgrl/common.hpp"

namespace cpgrl {

// Dense layer with explicit gradient buffers. Batched inputs are stored as
// columns so forward/backward reduce to GEMM.
struct Dense {
    Mat W;
    Vec b;
    Mat gW;
    Vec gb;

    Dense() = default;
    Dense(int out, int in) : W(Mat::Zero(out, in)), b(Vec::Zero(out)),
                             gW(Mat::Zero(out, in)), gb(Vec::Zero(out)) {}

    int fan_in() const { return static_cast<int>(W.cols()); }
    int fan_out() const { return static_cast<int>(W.rows()); }

    Mat forward(const Mat& X) const { return (W * X).colwise() + b; }

    // dY: upstream gradient (out x batch). Accumulates parameter gradients
    // unless frozen; returns dX.
    Mat backward(const Mat& X, const Mat& dY, bool frozen = false) {
        if (!frozen) {
            gW.noalias() += dY * X.transpose();
            gb += dY.rowwise().sum();
        }
        return W.transpose() * dY;
    }

    void zero_grad() {
        gW.setZero();
        gb.setZero();
    }

    void init_he(Rng& rng) {
        const double r = std::sqrt(6.0 / fan_in());
        for (int i = 0; i < W.rows(); ++i)
            for (int j = 0; j < W.cols(); ++j) W(i, j) = uniform(rng, -r, r);
        b.setZero();
    }

    void init_small(Rng& rng, double r = 1e-3) {
        for (int i = 0; i < W.rows(); ++i)
            for (int j = 0; j < W.cols(); ++j) W(i, j) = uniform(rng, -r, r);
        b.setZero();
    }
};

inline Mat relu(const Mat& X) { return X.cwiseMax(0.0); }

// Gradient of ReLU given its input preactivation.
inline Mat relu_backward(const Mat& pre, const Mat& dY) {
    return (pre.array() > 0.0).cast<double>().matrix().cwiseProduct(dY);
}

inline double global_grad_norm(const std::vector<Dense*>& layers) {
    double sq = 0.0;
    for (const Dense* l : layers) sq += l->gW.squaredNorm() + l->gb.squaredNorm();
    return std::sqrt(sq);
}

inline void scale_grads(const std::vector<Dense*>& layers, double s) {
    for (Dense* l : layers) {
        l->gW *= s;
        l->gb *= s;
    }
}

inline void polyak_update(std::vector<Dense*> target, const std::vector<Dense*>& source, double rho) {
    require(target.size() == source.size(), "polyak_update: layer count mismatch");
    for (size_t i = 0; i < target.size(); ++i) {
        require(target[i]->W.rows() == source[i]->W.rows() && target[i]->W.cols() == source[i]->W.cols(),
                "polyak_update: shape mismatch");
        target[i]->W = rho * target[i]->W + (1.0 - rho) * source[i]->W;
        target[i]->b = rho * target[i]->b + (1.0 - rho) * source[i]->b;
    }
}

}  // namespace cpgrl
