#pragma once

#include <cstddef>
#include <cstdint>

#include "steerlab/numerics/errors.hpp"
#include "steerlab/numerics/rng.hpp"
#include "steerlab/numerics/tensor.hpp"

namespace steerlab {

/// Evenly spaced values from start to stop inclusive. count == 1 yields [start].
/// The result is bitwise antisymmetric: reverse(linspace(a,b,n)) == -linspace(-b,-a,n).
Tensor linspace(double start, double stop, std::size_t count);

struct EigenDecomposition {
    Tensor values;   // (m), descending
    Tensor vectors;  // (m, m), column j is the eigenvector of values[j]
};

/**
 * Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.
 *
 * The input is symmetrized as (A + A^T) / 2. Work is done in double precision.
 * Each eigenvector is sign-normalized so its largest-magnitude entry is
 * positive, which makes the result deterministic for distinct eigenvalues.
 */
EigenDecomposition symEig(const Tensor& a);

/// Gaussian KDE resampling with Scott's rule bandwidth sigma * k^(-1/5).
Tensor kdeSample(const Tensor& samples, std::size_t n, RngStream& rng);
/// Scott's-rule bandwidth used by kdeSample (sample std with k-1 denominator).
double scottBandwidth(const Tensor& samples);

Tensor gaussianSample(double mean, double variance, std::size_t n, RngStream& rng);

/// Numerator of the Kaiming uniform bound sqrt(kKaimingNumerator / fanIn).
inline constexpr double kKaimingNumerator = 6.0;
double kaimingBound(std::size_t fanIn);
Tensor kaimingUniform(std::size_t fanIn, std::size_t n, RngStream& rng);

}  // namespace steerlab
