#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mmpir/errors.hpp"

namespace mmpir {

/// Deterministic random source keyed by a 64-bit seed. All protocol
/// randomness flows through this class so that transcripts are reproducible
/// for a given seed. Bounded draws use rejection sampling instead of
/// std::uniform_int_distribution, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform draw from [0, bound).
    std::uint32_t uniform(std::uint32_t bound) {
        if (bound == 0) throw UsageError("Rng::uniform: bound must be positive");
        const std::uint64_t span = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= span);
        return static_cast<std::uint32_t>(r % bound);
    }

    /// Uniformly random permutation of 0..n-1 (Fisher-Yates).
    std::vector<std::uint32_t> permutation(std::uint32_t n) {
        std::vector<std::uint32_t> p(n);
        for (std::uint32_t i = 0; i < n; ++i) p[i] = i;
        for (std::uint32_t i = n; i > 1; --i) {
            std::uint32_t j = uniform(i);
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace mmpir
