#include "steerlab/numerics/rng.hpp"

#include <cmath>
#include <numbers>

namespace steerlab {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t RngStream::nextU64() noexcept {
    ++counter_;
    return splitmix64(seed_ + counter_ * kGolden);
}

double RngStream::uniform01() noexcept { return static_cast<double>(nextU64() >> 11) * 0x1.0p-53; }

double RngStream::uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
    // Rejection on the biased tail keeps the result exactly uniform.
    const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
    std::uint64_t x = nextU64();
    while (x >= limit) x = nextU64();
    return x % n;
}

double RngStream::normal() noexcept {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::derive(std::uint64_t index) const noexcept {
    return RngStream(splitmix64(seed_ ^ splitmix64(index * kGolden + 0x2545F4914F6CDD1DULL)));
}

}  // namespace steerlab
