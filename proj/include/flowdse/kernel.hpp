#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <random>
#include <string_view>
#include <vector>

#include "flowdse/error.hpp"

namespace flowdse {

using Seconds = double;

enum class EventKind : std::uint8_t {
    Arrival,   // next fillet emitted by an origin lane
    Enter,     // fillet reaches a plant module
    Recompute, // controller strategy recalculation
    User,      // free for tests and extensions
};

struct Event {
    Seconds time = 0.0;
    std::uint64_t sequence = 0; // assigned by the calendar
    std::uint32_t target = 0;   // module index or lane index, depending on kind
    EventKind kind = EventKind::User;
    std::uint32_t entity = 0;   // fillet index for Enter events
};

/// Min-ordering on (time, sequence).
struct EventLater {
    bool operator()(const Event& a, const Event& b) const noexcept {
        if (a.time != b.time) return a.time > b.time;
        return a.sequence > b.sequence;
    }
};

/**
 * Single-threaded discrete-event kernel: a virtual clock and a calendar
 * ordered by (time, insertion sequence).
 *
 * One instance per replication; instances share nothing.
 */
class Kernel {
public:
    Seconds now() const noexcept { return now_; }
    std::size_t pending() const noexcept { return calendar_.size(); }
    std::uint64_t executed() const noexcept { return executed_; }

    /// Throws SimulationError when event.time < now().
    void schedule(Event event);

    void schedule_at(Seconds time, EventKind kind, std::uint32_t target, std::uint32_t entity = 0) {
        schedule(Event{time, 0, target, kind, entity});
    }

    /// Executes every event with time <= until in (time, sequence) order and
    /// returns how many ran. Afterwards now() == until when until is finite.
    template <typename Handler>
    std::uint64_t run(Seconds until, Handler&& handler) {
        std::uint64_t count = 0;
        while (!calendar_.empty() && calendar_.top().time <= until) {
            Event ev = calendar_.top();
            calendar_.pop();
            now_ = ev.time;
            ++count;
            ++executed_;
            handler(ev);
        }
        if (until != std::numeric_limits<Seconds>::infinity() && until > now_) now_ = until;
        return count;
    }

private:
    std::priority_queue<Event, std::vector<Event>, EventLater> calendar_;
    Seconds now_ = 0.0;
    std::uint64_t next_sequence_ = 0;
    std::uint64_t executed_ = 0;
};

/// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stable 64-bit hash of a label (FNV-1a), independent of std::hash.
std::uint64_t hash_label(std::string_view label) noexcept;

/**
 * Independent pseudo-random stream identified by (seed, label). Identical
 * pairs give identical draw sequences in every process and thread.
 */
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::string_view label);

    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal(double mean, double stddev);
    double exponential(double rate);
    std::size_t index(std::size_t n);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace flowdse
