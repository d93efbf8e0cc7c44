#pragma once

#include <cmath>
#include <cstdint>

namespace mzmesh::rng {

// SplitMix64 finalizer. Used both to advance sequential streams and as the
// mixing stage of the counter-based streams below.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based stream: a key plus a counter fully determine every draw, so
// results are identical under any evaluation order or parallel schedule.
// Sub-streams are derived by forking with a label.
class Stream {
  public:
    Stream() = default;
    explicit Stream(std::uint64_t seed) : state_(mix64(seed ^ 0x6d7a7e6b5c3f2a1dULL)) {}

    Stream fork(std::uint64_t label) const {
        Stream s;
        s.state_ = mix64(state_ ^ mix64(label + 0x71c9b3f0e48a5d27ULL));
        return s;
    }

    std::uint64_t bits(std::uint64_t counter) const { return mix64(state_ ^ mix64(counter)); }

    // Uniform in [0, 1).
    double uniform(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1]; safe as the log argument in Box-Muller.
    double uniform_open(std::uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal draw; counter i consumes uniforms 2i and 2i+1.
    double gaussian(std::uint64_t counter) const {
        const double u1 = uniform_open(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    std::uint64_t raw_state() const { return state_; }

  private:
    std::uint64_t state_ = 0;
};

// Sequential generator for dataset synthesis and shuffling.
class Sequence {
  public:
    explicit Sequence(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform_open() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

    double gaussian() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  private:
    std::uint64_t state_;
};

}  // namespace mzmesh::rng
