#pragma once

#include <cmath>
#include <cstdint>

namespace unmix {

// Counter-based random generator (splitmix64 finalizer). Every draw is a pure
// function of (stream, counter), so generators can be split into independent
// child streams without any shared mutable state. All downstream sampling
// (noise, fields, weight init, VCA directions) goes through this class, which
// keeps runs bit-reproducible for a fixed seed on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : stream_(mix(seed ^ kPhi)) {}

    // Independent child stream; children with distinct tags never collide.
    Rng split(std::uint64_t tag) const {
        return Rng(from_stream{}, mix(stream_ + mix(tag ^ kPhi)));
    }

    std::uint64_t next_u64() {
        counter_ += kPhi;
        return mix(stream_ ^ counter_);
    }

    // Uniform in [0,1), 24 bits of mantissa.
    float uniform() {
        return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
    }

    float uniform(float lo, float hi) {
        return lo + (hi - lo) * uniform();
    }

    // Index in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        return next_u64() % n;
    }

    // Standard normal via Box-Muller; consumes two draws per call.
    float gaussian() {
        const double u1 = 1.0 - static_cast<double>(next_u64() >> 11) * 0x1.0p-53;  // (0,1]
        const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;        // [0,1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        return static_cast<float>(r * std::cos(2.0 * 3.14159265358979323846 * u2));
    }

private:
    struct from_stream {};
    Rng(from_stream, std::uint64_t stream) : stream_(stream) {}

    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    static constexpr std::uint64_t kPhi = 0x9E3779B97F4A7C15ull;

    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace unmix
