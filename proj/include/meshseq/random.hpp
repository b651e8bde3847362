#pragma once

// Seeded randomness with results that do not depend on the standard library
// vendor. std::mt19937_64 is fully specified by the standard; the
// distributions are not, so the mapping to doubles and indices lives here.

#include <cstdint>
#include <random>
#include <string_view>

namespace meshseq {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a, used to turn mesh ids into seed material.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Independent sub-seed for a (base seed, purpose) pair.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) noexcept {
    return splitmix64(base ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) noexcept {
    return derive_seed(base, fnv1a(tag));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased uniform integer in [0, n). n must be positive.
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace meshseq
