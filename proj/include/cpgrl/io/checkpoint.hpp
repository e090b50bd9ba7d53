#pragma once

#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cpgrl/common.hpp"
#include "cpgrl/cpg/state.hpp"
#include "cpgrl/nn/actor.hpp"
#include "cpgrl/nn/adam.hpp"
#include "cpgrl/nn/normalizer.hpp"
#include "cpgrl/rl/replay.hpp"

namespace cpgrl {

// Binary checkpoint primitives. Host-endian fixed-width fields; doubles are
// written bit-exact, so load-then-save reproduces the file byte-for-byte.

inline constexpr char kCkptMagic[4] = {'C', 'P', 'G', 'R'};
inline constexpr uint8_t kCkptVersion = 1;

struct BinWriter {
    std::ostream& os;

    void raw(const void* p, size_t n) {
        os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!os) throw io_error("checkpoint write failure");
    }
    void u8(uint8_t v) { raw(&v, 1); }
    void i32(int32_t v) { raw(&v, 4); }
    void i64(int64_t v) { raw(&v, 8); }
    void u64(uint64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }
    void str(const std::string& s) {
        u64(s.size());
        if (!s.empty()) raw(s.data(), s.size());
    }
    void vec(const Vec& v) {
        u64(static_cast<uint64_t>(v.size()));
        if (v.size()) raw(v.data(), sizeof(double) * v.size());
    }
    void mat(const Mat& m) {
        u64(static_cast<uint64_t>(m.rows()));
        u64(static_cast<uint64_t>(m.cols()));
        if (m.size()) raw(m.data(), sizeof(double) * m.size());
    }
};

struct BinReader {
    std::istream& is;

    void raw(void* p, size_t n) {
        is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(is.gcount()) != n) throw io_error("checkpoint truncated");
    }
    uint8_t u8() { uint8_t v; raw(&v, 1); return v; }
    int32_t i32() { int32_t v; raw(&v, 4); return v; }
    int64_t i64() { int64_t v; raw(&v, 8); return v; }
    uint64_t u64() { uint64_t v; raw(&v, 8); return v; }
    double f64() { double v; raw(&v, 8); return v; }
    std::string str() {
        const uint64_t n = u64();
        if (n > (1ull << 32)) throw io_error("checkpoint string length implausible");
        std::string s(n, '\0');
        if (n) raw(s.data(), n);
        return s;
    }
    Vec vec() {
        const uint64_t n = u64();
        if (n > (1ull << 30)) throw io_error("checkpoint vector length implausible");
        Vec v(static_cast<int>(n));
        if (n) raw(v.data(), sizeof(double) * n);
        return v;
    }
    Mat mat() {
        const uint64_t r = u64(), c = u64();
        if (r > (1u << 20) || c > (1u << 20)) throw io_error("checkpoint matrix shape implausible");
        Mat m(static_cast<int>(r), static_cast<int>(c));
        if (m.size()) raw(m.data(), sizeof(double) * m.size());
        return m;
    }
};

inline void write_header(BinWriter& w, const std::string& config_json) {
    w.raw(kCkptMagic, 4);
    w.u8(kCkptVersion);
    w.str(config_json);
}

inline std::string read_header(BinReader& r) {
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kCkptMagic, 4) != 0) throw io_error("not a checkpoint file");
    const uint8_t version = r.u8();
    if (version != kCkptVersion) throw io_error("unsupported checkpoint version");
    return r.str();
}

// Mersenne-twister streams round-trip exactly through their text form.
inline void write_rng(BinWriter& w, const Rng& rng) {
    std::ostringstream ss;
    ss << rng;
    w.str(ss.str());
}

inline void read_rng(BinReader& r, Rng& rng) {
    std::istringstream ss(r.str());
    ss >> rng;
    if (ss.fail()) throw io_error("checkpoint RNG state corrupt");
}

inline void write_dense(BinWriter& w, const Dense& d) {
    w.mat(d.W);
    w.vec(d.b);
}

inline void read_dense(BinReader& r, Dense& d) {
    const Mat W = r.mat();
    const Vec b = r.vec();
    require(W.rows() == d.W.rows() && W.cols() == d.W.cols() && b.size() == d.b.size(),
            "checkpoint layer shape mismatch");
    d.W = W;
    d.b = b;
}

inline void write_adam(BinWriter& w, const Adam& a) {
    w.i64(a.step_count);
    w.u64(a.mW.size());
    for (size_t i = 0; i < a.mW.size(); ++i) {
        w.mat(a.mW[i]);
        w.mat(a.vW[i]);
        w.vec(a.mb[i]);
        w.vec(a.vb[i]);
    }
}

inline void read_adam(BinReader& r, Adam& a) {
    a.step_count = r.i64();
    const uint64_t n = r.u64();
    require(n == a.mW.size(), "checkpoint optimizer layer count mismatch");
    for (size_t i = 0; i < n; ++i) {
        a.mW[i] = r.mat();
        a.vW[i] = r.mat();
        a.mb[i] = r.vec();
        a.vb[i] = r.vec();
    }
}

inline void write_normalizer(BinWriter& w, const Normalizer& n) {
    w.vec(n.mean);
    w.vec(n.m2);
    w.i64(n.count);
    w.u8(n.frozen ? 1 : 0);
}

inline void read_normalizer(BinReader& r, Normalizer& n) {
    n.mean = r.vec();
    n.m2 = r.vec();
    n.count = r.i64();
    n.frozen = r.u8() != 0;
}

inline void write_cpg_state(BinWriter& w, const CpgState& s) {
    w.vec(s.phase);
    w.vec(s.phase_rate);
    w.vec(s.amp);
    w.vec(s.amp_rate);
    w.vec(s.amp_accel);
    w.vec(s.offset);
    w.vec(s.offset_rate);
    w.vec(s.offset_accel);
    w.i64(s.step);
    w.f64(s.dt);
}

inline CpgState read_cpg_state(BinReader& r) {
    CpgState s;
    s.phase = r.vec();
    s.phase_rate = r.vec();
    s.amp = r.vec();
    s.amp_rate = r.vec();
    s.amp_accel = r.vec();
    s.offset = r.vec();
    s.offset_rate = r.vec();
    s.offset_accel = r.vec();
    s.step = r.i64();
    s.dt = r.f64();
    return s;
}

inline void write_transition(BinWriter& w, const Transition& t) {
    w.vec(t.s);
    w.vec(t.g_j);
    w.vec(t.s_next);
    w.f64(t.r);
    w.u8(t.done ? 1 : 0);
    w.u64(t.h.size());
    for (const CpgState& h : t.h) write_cpg_state(w, h);
    for (const CpgState& h : t.h_next) write_cpg_state(w, h);
    w.u64(t.g_cpg.size());
    for (const Vec& g : t.g_cpg) w.vec(g);
    w.vec(t.goal);
    w.vec(t.goal_next);
}

inline Transition read_transition(BinReader& r) {
    Transition t;
    t.s = r.vec();
    t.g_j = r.vec();
    t.s_next = r.vec();
    t.r = r.f64();
    t.done = r.u8() != 0;
    const uint64_t nmod = r.u64();
    if (nmod > 64) throw io_error("checkpoint transition module count implausible");
    t.h.reserve(nmod);
    t.h_next.reserve(nmod);
    for (uint64_t i = 0; i < nmod; ++i) t.h.push_back(read_cpg_state(r));
    for (uint64_t i = 0; i < nmod; ++i) t.h_next.push_back(read_cpg_state(r));
    const uint64_t ng = r.u64();
    if (ng > 64) throw io_error("checkpoint transition param count implausible");
    t.g_cpg.reserve(ng);
    for (uint64_t i = 0; i < ng; ++i) t.g_cpg.push_back(r.vec());
    t.goal = r.vec();
    t.goal_next = r.vec();
    return t;
}

inline void write_buffer(BinWriter& w, const ReplayBuffer& b) {
    w.i64(b.total_pushed());
    w.i64(b.episode_start_abs());
    w.i64(b.size());
    b.for_each_slot([&](const Transition& t, long ep_start, long seg_start, int seg_len,
                        int offset) {
        write_transition(w, t);
        w.i64(ep_start);
        w.i64(seg_start);
        w.i32(seg_len);
        w.i32(offset);
    });
}

inline void read_buffer(BinReader& r, ReplayBuffer& b) {
    const long next_abs = r.i64();
    const long episode_start = r.i64();
    const long count = r.i64();
    require(count <= b.capacity() && count <= next_abs, "checkpoint buffer size inconsistent");
    b.set_counters(next_abs - count, 0);
    for (long i = 0; i < count; ++i) {
        const Transition t = read_transition(r);
        const long ep_start = r.i64();
        const long seg_start = r.i64();
        const int seg_len = r.i32();
        const int offset = r.i32();
        b.restore_slot(t, ep_start, seg_start, seg_len, offset, next_abs - count + i);
    }
    b.set_counters(next_abs, episode_start);
}

}  // namespace cpgrl
