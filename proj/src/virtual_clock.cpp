#include "uwf/virtual_clock.hpp"

#include <utility>

#include "uwf/errors.hpp"

namespace uwf {

void VirtualClock::schedule(VTime at, Action action) {
    if (at < now_) at = now_;
    heap_.push(Entry{at, next_seq_++, std::move(action)});
}

void VirtualClock::fire_next() {
    // Moving the action out before popping lets the action schedule freely.
    Entry e = std::move(const_cast<Entry&>(heap_.top()));
    heap_.pop();
    now_ = e.time;
    e.action();
}

VTime VirtualClock::run_until_idle(std::uint64_t max_events) {
    VTime start = now_;
    std::uint64_t fired = 0;
    while (!heap_.empty()) {
        if (++fired > max_events)
            throw Error(Err::LivelockGuard,
                        "event budget exhausted after " + std::to_string(max_events));
        fire_next();
    }
    return now_ - start;
}

void VirtualClock::advance_to(VTime t, std::uint64_t max_events) {
    std::uint64_t fired = 0;
    while (!heap_.empty() && heap_.top().time <= t) {
        if (++fired > max_events)
            throw Error(Err::LivelockGuard,
                        "event budget exhausted after " + std::to_string(max_events));
        fire_next();
    }
    if (t > now_) now_ = t;
}

}  // namespace uwf
