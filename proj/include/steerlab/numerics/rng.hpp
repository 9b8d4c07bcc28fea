#pragma once

#include <cstdint>

namespace steerlab {

/**
 * Counter-based random stream.
 *
 * Draw k of a stream is a pure function of (seed, k): the generator is the
 * SplitMix64 finalizer applied to seed + (k + 1) * golden-ratio increment.
 * Child streams obtained with derive() are independent of how many draws the
 * parent has made, so per-layer or per-column streams stay reproducible under
 * any scheduling order.
 */
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t counter = 0) noexcept : seed_(seed), counter_(counter) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t nextU64() noexcept;
    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform01() noexcept;
    double uniform(double lo, double hi) noexcept;
    /// Uniform integer on [0, n). Requires n > 0.
    std::uint64_t below(std::uint64_t n) noexcept;
    /// Standard normal via Box-Muller; consumes exactly two draws.
    double normal() noexcept;

    RngStream derive(std::uint64_t index) const noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace steerlab
