#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "privsvm/errors.hpp"

namespace privsvm {

/// Name and version of the pinned generator, recorded in key files. A key is
/// only valid together with the generator that produced its transform, so
/// loaders reject any other name.
inline constexpr const char* kPrngName = "splitmix64-v1";

/// splitmix64 (Vigna, public domain). The state is a plain counter advanced
/// by the golden-ratio increment and the output is a mix of it, which makes
/// every value a pure function of (seed, draw index). The standard library
/// engines are avoided on purpose: their distributions are not specified
/// bit-exactly, and key regeneration must give identical matrices everywhere.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Unbiased draw in [0, n) by rejection on the top of the range.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw InvalidArgument("next_below: bound must be positive");
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    /// Uniform double in [0, 1), 53 significant bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller. Consumes two uniforms per draw; the
    /// sine partner is discarded so the draw count per value is fixed.
    double next_normal() {
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Fisher-Yates shuffle of 0..d-1, high index down.
    std::vector<std::size_t> permutation(std::size_t d) {
        std::vector<std::size_t> p(d);
        for (std::size_t i = 0; i < d; ++i) p[i] = i;
        for (std::size_t i = d; i-- > 1;) {
            std::size_t j = static_cast<std::size_t>(next_below(i + 1));
            std::swap(p[i], p[j]);
        }
        return p;
    }

private:
    std::uint64_t state_;
};

}  // namespace privsvm
