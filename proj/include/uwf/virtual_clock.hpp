#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "uwf/vtime.hpp"

namespace uwf {

// Single-threaded discrete-event clock. Events with equal timestamps fire in
// scheduling order (monotonic sequence tiebreak); time never moves backwards.
class VirtualClock {
public:
    using Action = std::function<void()>;

    VTime now() const { return now_; }

    void schedule(VTime at, Action action);
    void schedule_in(VTime delay, Action action) { schedule(now_ + delay, std::move(action)); }

    bool empty() const { return heap_.empty(); }

    // Processes events until the heap drains; returns elapsed virtual time.
    // Throws LivelockGuard once more than `max_events` have fired.
    VTime run_until_idle(std::uint64_t max_events = 10'000'000);

    // Processes events with time <= t, then sets now to t.
    void advance_to(VTime t, std::uint64_t max_events = 10'000'000);

private:
    struct Entry {
        VTime time;
        std::uint64_t seq;
        Action action;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    void fire_next();

    VTime now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
};

}  // namespace uwf
