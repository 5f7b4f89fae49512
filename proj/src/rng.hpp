#ifndef SNDIFF_RNG_HPP
#define SNDIFF_RNG_HPP

#include <cmath>
#include <cstdint>

namespace sndiff {

// Frozen, portable generator: splitmix64 counters feeding a Box-Muller
// transform. Identifier recorded in every output file.
inline constexpr const char* kRngId = "splitmix64-boxmuller-v1";

struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in (0, 1): top 53 bits, offset by half an ulp to exclude 0.
    double uniform01() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }
};

// Derived stream seed for ensemble member `index` under master `seed`;
// reproducible independent of execution order.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 s(seed ^ (0xD1B54A32D192ED03ULL * (index + 1)));
    s.next();
    return s.next();
}

struct GaussianStream {
    SplitMix64 gen;
    bool has_cached = false;
    double cached = 0.0;

    explicit GaussianStream(std::uint64_t seed) : gen(seed) {}

    double normal() {
        if (has_cached) {
            has_cached = false;
            return cached;
        }
        const double u1 = gen.uniform01();
        const double u2 = gen.uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached = r * std::sin(a);
        has_cached = true;
        return r * std::cos(a);
    }
};

} // namespace sndiff

#endif
