#include "flowdse/kernel.hpp"

#include <string>

namespace flowdse {

void Kernel::schedule(Event event) {
    if (!(event.time >= now_)) {
        throw SimulationError("event scheduled in the past: t=" + std::to_string(event.time) +
                              " < now=" + std::to_string(now_));
    }
    event.sequence = next_sequence_++;
    calendar_.push(event);
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_label(std::string_view label) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RandomStream::RandomStream(std::uint64_t seed, std::string_view label)
    : seed_(seed), engine_(mix64(seed ^ mix64(hash_label(label)))) {}

double RandomStream::uniform() {
    // 53 random mantissa bits; avoids implementation-defined distributions.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::normal(double mean, double stddev) {
    std::normal_distribution<double> dist(mean, stddev);
    return dist(engine_);
}

double RandomStream::exponential(double rate) {
    std::exponential_distribution<double> dist(rate);
    return dist(engine_);
}

std::size_t RandomStream::index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
}

} // namespace flowdse
