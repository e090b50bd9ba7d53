#pragma once

#include <array>
#include <vector>

#include "cpgrl/cpg/params.hpp"
#include "cpgrl/nn/linear.hpp"

namespace cpgrl {

// Multi-head bounded policy network: shared rectified trunk, five rectified
// head branches, each ending in a tanh-bounded linear output sized for the
// packed parameter layout {w, phi_bias, omega, amp, offset}.
struct ActorNet {
    int n = 0;           // oscillator count
    int input_dim = 0;   // tau_o * obs_dim + goal_dim
    Dense trunk1, trunk2;
    std::array<Dense, 5> head_hidden;
    std::array<Dense, 5> head_out;

    struct Cache {
        Mat X, z1, h1, z2, h2;
        std::array<Mat, 5> zh, hh, zo, out;  // out = tanh(zo)
    };

    ActorNet() = default;
    ActorNet(int n_, int input_dim_, int trunk1_w, int trunk2_w, int head_w, Rng& rng)
        : n(n_), input_dim(input_dim_),
          trunk1(trunk1_w, input_dim_), trunk2(trunk2_w, trunk1_w) {
        trunk1.init_he(rng);
        trunk2.init_he(rng);
        for (int h = 0; h < 5; ++h) {
            head_hidden[h] = Dense(head_w, trunk2_w);
            head_hidden[h].init_he(rng);
            head_out[h] = Dense(head_size(n, h), head_w);
            head_out[h].init_small(rng);
        }
    }

    std::vector<Dense*> layers() {
        std::vector<Dense*> ls{&trunk1, &trunk2};
        for (int h = 0; h < 5; ++h) ls.push_back(&head_hidden[h]);
        for (int h = 0; h < 5; ++h) ls.push_back(&head_out[h]);
        return ls;
    }

    Cache forward(const Mat& X) const {
        require(X.rows() == input_dim, "ActorNet: input width mismatch");
        Cache c;
        c.X = X;
        c.z1 = trunk1.forward(X);
        c.h1 = relu(c.z1);
        c.z2 = trunk2.forward(c.h1);
        c.h2 = relu(c.z2);
        for (int h = 0; h < 5; ++h) {
            c.zh[h] = head_hidden[h].forward(c.h2);
            c.hh[h] = relu(c.zh[h]);
            c.zo[h] = head_out[h].forward(c.hh[h]);
            c.out[h] = c.zo[h].array().tanh().matrix();
        }
        return c;
    }

    // Raw tanh head outputs for one input vector, ready for unpack_params.
    std::vector<Vec> heads(const Vec& x) const {
        Cache c = forward(x);
        std::vector<Vec> hs(5);
        for (int h = 0; h < 5; ++h) hs[h] = c.out[h].col(0);
        return hs;
    }

    CpgParams act(const Vec& x) const { return unpack_params(heads(x), n); }

    // dHeads: dL/d(post-tanh outputs). Accumulates parameter gradients.
    void backward(const Cache& c, const std::array<Mat, 5>& dHeads) {
        Mat dh2 = Mat::Zero(c.h2.rows(), c.h2.cols());
        for (int h = 0; h < 5; ++h) {
            const Mat dzo = dHeads[h].cwiseProduct(
                (1.0 - c.out[h].array().square()).matrix());
            const Mat dhh = head_out[h].backward(c.hh[h], dzo);
            const Mat dzh = relu_backward(c.zh[h], dhh);
            dh2 += head_hidden[h].backward(c.h2, dzh);
        }
        const Mat dz2 = relu_backward(c.z2, dh2);
        const Mat dh1 = trunk2.backward(c.h1, dz2);
        const Mat dz1 = relu_backward(c.z1, dh1);
        trunk1.backward(c.X, dz1);
    }

    void zero_grad() {
        for (Dense* l : layers()) l->zero_grad();
    }
};

// Feed-forward baseline: identical trunk, single tanh-bounded output of the
// joint count; outputs are joint goals in units of the joint limit.
struct FfActor {
    int n = 0;
    int input_dim = 0;
    Dense trunk1, trunk2, out;

    struct Cache {
        Mat X, z1, h1, z2, h2, zo, y;
    };

    FfActor() = default;
    FfActor(int n_, int input_dim_, int trunk1_w, int trunk2_w, Rng& rng)
        : n(n_), input_dim(input_dim_),
          trunk1(trunk1_w, input_dim_), trunk2(trunk2_w, trunk1_w), out(n_, trunk2_w) {
        trunk1.init_he(rng);
        trunk2.init_he(rng);
        out.init_small(rng);
    }

    std::vector<Dense*> layers() { return {&trunk1, &trunk2, &out}; }

    Cache forward(const Mat& X) const {
        require(X.rows() == input_dim, "FfActor: input width mismatch");
        Cache c;
        c.X = X;
        c.z1 = trunk1.forward(X);
        c.h1 = relu(c.z1);
        c.z2 = trunk2.forward(c.h1);
        c.h2 = relu(c.z2);
        c.zo = out.forward(c.h2);
        c.y = c.zo.array().tanh().matrix();
        return c;
    }

    Vec act(const Vec& x) const { return forward(x).y.col(0); }

    void backward(const Cache& c, const Mat& dY) {
        const Mat dzo = dY.cwiseProduct((1.0 - c.y.array().square()).matrix());
        const Mat dh2 = out.backward(c.h2, dzo);
        const Mat dz2 = relu_backward(c.z2, dh2);
        const Mat dh1 = trunk2.backward(c.h1, dz2);
        const Mat dz1 = relu_backward(c.z1, dh1);
        trunk1.backward(c.X, dz1);
    }

    void zero_grad() {
        for (Dense* l : layers()) l->zero_grad();
    }
};

// Q-network over (observation window, goal, flattened action window):
// three rectified layers, one linear layer, scalar output.
struct CriticNet {
    int input_dim = 0;
    Dense c1, c2, c3, c4, out;

    struct Cache {
        Mat X, z1, h1, z2, h2, z3, h3, h4, q;  // h4 linear, q 1 x batch
    };

    CriticNet() = default;
    CriticNet(int input_dim_, int w1, int w2, int w3, int w4, Rng& rng)
        : input_dim(input_dim_), c1(w1, input_dim_), c2(w2, w1), c3(w3, w2), c4(w4, w3),
          out(1, w4) {
        c1.init_he(rng);
        c2.init_he(rng);
        c3.init_he(rng);
        c4.init_he(rng);
        out.init_he(rng);
    }

    std::vector<Dense*> layers() { return {&c1, &c2, &c3, &c4, &out}; }

    Cache forward(const Mat& X) const {
        require(X.rows() == input_dim, "CriticNet: input width mismatch");
        Cache c;
        c.X = X;
        c.z1 = c1.forward(X);
        c.h1 = relu(c.z1);
        c.z2 = c2.forward(c.h1);
        c.h2 = relu(c.z2);
        c.z3 = c3.forward(c.h2);
        c.h3 = relu(c.z3);
        c.h4 = c4.forward(c.h3);
        c.q = out.forward(c.h4);
        return c;
    }

    double value(const Vec& x) const { return forward(x).q(0, 0); }

    // dQ: 1 x batch. Returns dX; frozen skips parameter accumulation (used
    // when only the action gradient is needed).
    Mat backward(const Cache& c, const Mat& dQ, bool frozen = false) {
        const Mat dh4 = out.backward(c.h4, dQ, frozen);
        const Mat dh3 = c4.backward(c.h3, dh4, frozen);
        const Mat dz3 = relu_backward(c.z3, dh3);
        const Mat dh2 = c3.backward(c.h2, dz3, frozen);
        const Mat dz2 = relu_backward(c.z2, dh2);
        const Mat dh1 = c2.backward(c.h1, dz2, frozen);
        const Mat dz1 = relu_backward(c.z1, dh1);
        return c1.backward(c.X, dz1, frozen);
    }

    void zero_grad() {
        for (Dense* l : layers()) l->zero_grad();
    }
};

}  // namespace cpgrl
