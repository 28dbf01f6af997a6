#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace zss {

// splitmix64 stream. Used everywhere randomness is needed so that runs are
// reproducible bit-for-bit across platforms (no std::*_distribution, whose
// output is implementation-defined).
class Prng {
public:
    explicit Prng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // standard normal via Box-Muller; one value per call (spare discarded
    // to keep the stream position independent of call pairing)
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    std::uint64_t state_;
};

// FNV-1a, used to derive independent substreams from (seed, tag, counters).
inline std::uint64_t hash_combine(std::uint64_t seed, std::string_view tag,
                                  std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(seed);
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    mix(a);
    mix(b);
    return h;
}

inline Prng substream(std::uint64_t seed, std::string_view tag,
                      std::uint64_t a = 0, std::uint64_t b = 0) {
    return Prng(hash_combine(seed, tag, a, b));
}

} // namespace zss
