#pragma once

#include "cpgrl/common.hpp"

namespace cpgrl {

// Recurrent hidden state of the oscillator network. Rates and accelerations
// are state: the integration scheme advances positions with the rates
// computed one step earlier.
struct CpgState {
    Vec phase, phase_rate;
    Vec amp, amp_rate, amp_accel;
    Vec offset, offset_rate, offset_accel;
    long step = 0;
    double dt = 0.01;

    explicit CpgState(int n = 0, double dt_ = 0.01)
        : phase(Vec::Zero(n)), phase_rate(Vec::Zero(n)),
          amp(Vec::Zero(n)), amp_rate(Vec::Zero(n)), amp_accel(Vec::Zero(n)),
          offset(Vec::Zero(n)), offset_rate(Vec::Zero(n)), offset_accel(Vec::Zero(n)),
          dt(dt_) {}

    int size() const { return static_cast<int>(phase.size()); }

    // Output of Eq 13 for the current state.
    Vec output() const { return offset + amp.cwiseProduct(phase.array().sin().matrix()); }

    void validate() const {
        require(dt > 0.0, "CpgState: dt must be positive");
        for (const Vec* v : {&phase, &phase_rate, &amp, &amp_rate, &amp_accel,
                             &offset, &offset_rate, &offset_accel})
            require(v->size() == phase.size(), "CpgState: field length mismatch");
        for (const Vec* v : {&phase, &phase_rate, &amp, &amp_rate, &amp_accel,
                             &offset, &offset_rate, &offset_accel})
            if (!v->allFinite()) throw numeric_error("CpgState: non-finite entry");
    }

    // Fresh state with uniformly random phases and everything else zero.
    static CpgState initial(Rng& rng, int n, double dt) {
        CpgState s(n, dt);
        for (int i = 0; i < n; ++i) s.phase[i] = uniform(rng, 0.0, 2.0 * 3.14159265358979323846);
        return s;
    }
};

}  // namespace cpgrl
