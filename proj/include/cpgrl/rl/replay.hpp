#pragma once

#include <optional>
#include <vector>

#include "cpgrl/common.hpp"
#include "cpgrl/cpg/state.hpp"

namespace cpgrl {

// One environment step. CPG snapshots and packed parameter vectors are held
// per module; single-agent runs use size-1 vectors. h_next equals h advanced
// by exactly one cpg_step.
struct Transition {
    Vec s, g_j, s_next;
    double r = 0.0;
    bool done = false;
    std::vector<CpgState> h, h_next;
    std::vector<Vec> g_cpg;
    Vec goal, goal_next;
};

// A sampled decision window: tau_o stacked observations on each side of a
// tau_c-step action segment sharing one set of CPG parameters. Short
// (terminal-truncated) segments keep their length in len; the action window
// is right-padded with its last column.
struct SegmentSample {
    Mat obs_window;       // obs_dim x tau_o, oldest column first
    Mat next_obs_window;  // window ending at the state after the segment
    Vec goal, goal_next;
    Mat action_window;    // joints x tau_c
    Vec rewards;          // length len, undiscounted per-step rewards
    double done = 0.0;
    std::vector<CpgState> h_start;  // per module, at the decision point
    std::vector<CpgState> h_end;    // per module, after the segment
    std::vector<Vec> g_cpg;
    int len = 0;
};

// FIFO ring of per-step transitions grouped into decision segments. Sampled
// windows never span an episode boundary or a decision boundary: segments are
// pushed whole, eviction removes oldest-first, and observation lookback
// clamps at the episode start (padding by repetition).
class ReplayBuffer {
  public:
    ReplayBuffer(long capacity, int tau_c, int tau_o)
        : cap_(capacity), tau_c_(tau_c), tau_o_(tau_o) {
        require(capacity > 0 && tau_c > 0 && tau_o > 0, "ReplayBuffer: invalid shape");
        ring_.reserve(std::min<long>(cap_, 1024));
    }

    long capacity() const { return cap_; }
    int tau_c() const { return tau_c_; }
    int tau_o() const { return tau_o_; }
    long size() const { return std::min(next_abs_, cap_); }
    long total_pushed() const { return next_abs_; }

    void begin_episode() { episode_start_abs_ = next_abs_; }

    // Pushes one decision segment (1..tau_c transitions, same episode).
    void push_segment(const std::vector<Transition>& seg) {
        const int len = static_cast<int>(seg.size());
        require(len >= 1 && len <= tau_c_, "ReplayBuffer: segment length out of range");
        for (int i = 0; i + 1 < len; ++i)
            require(!seg[i].done, "ReplayBuffer: terminal transition inside a segment");
        const long seg_start = next_abs_;
        for (int i = 0; i < len; ++i) {
            Slot& slot = at(next_abs_);
            slot.t = seg[i];
            slot.ep_start = episode_start_abs_;
            slot.seg_start = seg_start;
            slot.seg_len = len;
            slot.offset = i;
            ++next_abs_;
        }
    }

    // Conservative readiness bound: enough room for `batch` full segments.
    bool ready(int batch) const { return size() >= static_cast<long>(batch) * tau_c_; }

    SegmentSample sample(Rng& rng) const {
        require(size() > 0, "ReplayBuffer: sample from empty buffer");
        const long oldest = next_abs_ - size();
        std::uniform_int_distribution<long> pick(oldest, next_abs_ - 1);
        for (int attempt = 0; attempt < 256; ++attempt) {
            const long idx = pick(rng);
            const Slot& head = at(idx);
            if (head.offset != 0) continue;
            // FIFO eviction truncates oldest-first, so an alive segment head
            // implies the whole segment is alive.
            return assemble(idx);
        }
        throw structural_error("ReplayBuffer: no sampleable segment found");
    }

    // Direct access for serialization (oldest to newest).
    template <typename Fn>
    void for_each_slot(Fn&& fn) const {
        const long oldest = next_abs_ - size();
        for (long i = oldest; i < next_abs_; ++i) {
            const Slot& s = at(i);
            fn(s.t, s.ep_start, s.seg_start, s.seg_len, s.offset);
        }
    }

    // Restores one slot during deserialization; must be called in the same
    // oldest-to-newest order with the original bookkeeping values.
    void restore_slot(const Transition& t, long ep_start, long seg_start, int seg_len,
                      int offset, long abs_index) {
        require(abs_index == next_abs_, "ReplayBuffer: out-of-order restore");
        Slot& slot = at(next_abs_);
        slot.t = t;
        slot.ep_start = ep_start;
        slot.seg_start = seg_start;
        slot.seg_len = seg_len;
        slot.offset = offset;
        ++next_abs_;
        episode_start_abs_ = ep_start;
    }

    void set_counters(long next_abs, long episode_start_abs) {
        next_abs_ = next_abs;
        episode_start_abs_ = episode_start_abs;
    }
    long episode_start_abs() const { return episode_start_abs_; }

  private:
    struct Slot {
        Transition t;
        long ep_start = 0;
        long seg_start = 0;
        int seg_len = 0;
        int offset = 0;
    };

    // The ring grows lazily up to capacity; writes arrive in abs order, so a
    // first-pass position is always either existing or one past the end.
    Slot& at(long abs) {
        const size_t pos = static_cast<size_t>(abs % cap_);
        if (pos >= ring_.size()) {
            require(pos == ring_.size(), "ReplayBuffer: non-sequential first-pass write");
            ring_.emplace_back();
        }
        return ring_[pos];
    }
    const Slot& at(long abs) const { return ring_[static_cast<size_t>(abs % cap_)]; }

    // Observation at "state index" i of a segment ending at seg_last: s of
    // transition i while i <= seg_last, and the stored next observation one
    // past the end.
    const Vec& obs_at(long i, long seg_last) const {
        return i <= seg_last ? at(i).t.s : at(seg_last).t.s_next;
    }

    Mat window_ending_at(long state_abs, long ep_start, long seg_last) const {
        const long oldest = next_abs_ - size();
        const long lo = std::max(ep_start, oldest);
        const int dim = static_cast<int>(at(seg_last).t.s.size());
        Mat w(dim, tau_o_);
        for (int k = 0; k < tau_o_; ++k) {
            const long i = std::max(state_abs - (tau_o_ - 1) + k, lo);
            w.col(k) = obs_at(i, seg_last);
        }
        return w;
    }

    SegmentSample assemble(long seg_start) const {
        const Slot& head = at(seg_start);
        const int len = head.seg_len;
        const long seg_last = seg_start + len - 1;
        const Slot& tail = at(seg_last);

        SegmentSample out;
        out.len = len;
        out.obs_window = window_ending_at(seg_start, head.ep_start, seg_last);
        out.next_obs_window = window_ending_at(seg_start + len, head.ep_start, seg_last);
        out.goal = head.t.goal;
        out.goal_next = tail.t.goal_next;
        out.done = tail.t.done ? 1.0 : 0.0;
        out.h_start = head.t.h;
        out.h_end = tail.t.h_next;
        out.g_cpg = head.t.g_cpg;

        const int nj = static_cast<int>(head.t.g_j.size());
        out.action_window = Mat(nj, tau_c_);
        out.rewards = Vec(len);
        for (int i = 0; i < len; ++i) {
            out.action_window.col(i) = at(seg_start + i).t.g_j;
            out.rewards[i] = at(seg_start + i).t.r;
        }
        for (int i = len; i < tau_c_; ++i) out.action_window.col(i) = tail.t.g_j;
        return out;
    }

    std::vector<Slot> ring_;
    long cap_;
    int tau_c_, tau_o_;
    long next_abs_ = 0;
    long episode_start_abs_ = 0;
};

}  // namespace cpgrl
