#pragma once

#include "cpgrl/common.hpp"

namespace cpgrl {

// Running mean/variance observation normalizer (Welford). Statistics update
// during the babbling phase only, then freeze for the rest of training and
// deployment.
struct Normalizer {
    Vec mean, m2;
    long count = 0;
    bool frozen = false;

    explicit Normalizer(int dim = 0) : mean(Vec::Zero(dim)), m2(Vec::Zero(dim)) {}

    void update(const Vec& x) {
        if (frozen) return;
        ++count;
        const Vec delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta.cwiseProduct(x - mean);
    }

    Vec variance() const {
        if (count < 2) return Vec::Ones(mean.size());
        return m2 / static_cast<double>(count);
    }

    Vec apply(const Vec& x) const {
        if (count < 2) return x;
        return (x - mean).cwiseQuotient((variance().array() + 1e-8).sqrt().matrix());
    }
};

}  // namespace cpgrl
