#pragma once

#include <vector>

#include "cpgrl/nn/linear.hpp"

namespace cpgrl {

// Adam over a fixed set of dense layers, with global gradient-norm clipping
// applied before the moment updates.
struct Adam {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 2.0;  // <= 0 disables clipping
    long step_count = 0;
    std::vector<Mat> mW, vW;
    std::vector<Vec> mb, vb;

    void attach(const std::vector<Dense*>& layers) {
        mW.clear(); vW.clear(); mb.clear(); vb.clear();
        for (const Dense* l : layers) {
            mW.push_back(Mat::Zero(l->W.rows(), l->W.cols()));
            vW.push_back(Mat::Zero(l->W.rows(), l->W.cols()));
            mb.push_back(Vec::Zero(l->b.size()));
            vb.push_back(Vec::Zero(l->b.size()));
        }
    }

    void step(const std::vector<Dense*>& layers) {
        require(layers.size() == mW.size(), "Adam: not attached to this layer set");
        double norm = global_grad_norm(layers);
        if (!std::isfinite(norm)) throw numeric_error("Adam: non-finite gradient norm");
        if (clip_norm > 0.0 && norm > clip_norm) scale_grads(layers, clip_norm / norm);
        ++step_count;
        const double bc1 = 1.0 - std::pow(beta1, step_count);
        const double bc2 = 1.0 - std::pow(beta2, step_count);
        for (size_t i = 0; i < layers.size(); ++i) {
            Dense& l = *layers[i];
            mW[i] = beta1 * mW[i] + (1.0 - beta1) * l.gW;
            vW[i] = beta2 * vW[i] + (1.0 - beta2) * l.gW.cwiseProduct(l.gW);
            mb[i] = beta1 * mb[i] + (1.0 - beta1) * l.gb;
            vb[i] = beta2 * vb[i] + (1.0 - beta2) * l.gb.cwiseProduct(l.gb);
            l.W -= lr * (mW[i] / bc1).cwiseQuotient(((vW[i] / bc2).cwiseSqrt().array() + eps).matrix());
            l.b -= lr * (mb[i] / bc1).cwiseQuotient(((vb[i] / bc2).cwiseSqrt().array() + eps).matrix());
        }
    }
};

}  // namespace cpgrl
