#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "steerlab/filterbank/basis.hpp"
#include "steerlab/numerics/rng.hpp"
#include "steerlab/numerics/tensor.hpp"

namespace steerlab {

enum class InitMethod { Ones, DCT2, UnchangedRandom, UnchangedGuide, GHaar, Psine, GuidedSteer };

std::string toString(InitMethod method);
/// Accepts the names produced by toString, case-insensitively. Throws ConfigError.
InitMethod parseInitMethod(const std::string& name);
bool requiresGuide(InitMethod method);

struct FilterSpec {
    InitMethod method = InitMethod::Ones;
    std::size_t h = 3;
    std::size_t w = 3;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    /// (count, h, w) for UnchangedGuide, (rows, h*w) or (rows, h, w) for GuidedSteer.
    std::optional<Tensor> guide;
    /// Kaiming fan-in for UnchangedRandom (input channels per group * h * w).
    std::size_t fanIn = 0;

    /// Throws ConfigError when the guide's presence does not match the method.
    void validate() const;
};

Tensor onesFilters(const FilterSpec& spec);
Tensor dct2Filters(const FilterSpec& spec, const Basis& basis, RngStream& rng);

/// cos(f * x) with x = linspace(0, pi, m).
Tensor ghaarVector(double frequency, std::size_t m);

/// Three-term GHaar kernel a*g1^T, g2*a^T, g3*g3^T with a the constant vector,
/// unnormalized. Frequencies and weights are taken verbatim.
Tensor ghaarKernel(std::size_t m, const double (&frequencies)[3], const double (&weights)[3]);
Tensor ghaarFilters(const FilterSpec& spec, RngStream& rng);

struct PsineTerm {
    double rowFrequency;
    double colFrequency;
    int power;
    double weight;
};

/// Sum of weight * (g_row g_col^T)^power (elementwise power), then whitened to
/// zero mean and unit Frobenius norm. Throws NumericError if the sum is constant.
Tensor psineKernel(std::size_t m, const std::vector<PsineTerm>& terms);
/// Random term list: P ~ U{1,2,3}, 2P+1 terms, powers in 1..P with both parities when P >= 2.
std::vector<PsineTerm> samplePsineTerms(RngStream& rng);
Tensor psineFilters(const FilterSpec& spec, RngStream& rng);

struct GuidedSteerOptions {
    bool normalFit = false;
    bool centered = false;
};

/**
 * Layer-wise GuidedSteer.
 *
 * counts[l] filters of length m are produced for layer l; guides[l] is (c_l, m).
 * The basis is the eigenvector matrix of G^T G over all guide rows. For each
 * layer and basis column, a 1-D density of the guide's coefficients is fit and
 * resampled. Layer l draws from rng.derive(l), column i of that from a further
 * derive(i), so results do not depend on layer evaluation order.
 */
std::vector<Tensor> guidedSteerFilters(const std::vector<std::size_t>& counts, const std::vector<Tensor>& guides,
                                       const RngStream& rng, const GuidedSteerOptions& options = {});

Tensor unchangedFilters(const FilterSpec& spec, RngStream& rng);

/// Single-layer dispatch for every method. GuidedSteer uses spec.guide as its
/// only layer guide. The RNG is seeded from spec.seed.
Tensor generateFilters(const FilterSpec& spec, const GuidedSteerOptions& options = {});

}  // namespace steerlab
