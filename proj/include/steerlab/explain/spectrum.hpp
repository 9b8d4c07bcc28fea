#pragma once

#include <optional>
#include <string>
#include <vector>

#include "steerlab/filterbank/basis.hpp"
#include "steerlab/numerics/tensor.hpp"

namespace steerlab {

/// eD_i = sum_j w_j |f_j . b_i| for kernels F (n, m) and basis rows b_i.
/// eD is indexed like the basis rows (natural (kh, kw) order).
Tensor spectrumED(const Tensor& kernels, const Basis& basis, const std::vector<double>& weights);

/// Uniform weights 1/n.
std::vector<double> uniformWeights(std::size_t n);

/// e1 of length h + w: slots [0, h) are vertical frequencies, [h, h + w)
/// horizontal ones. Each eD_i with factors (a, b) adds eD_i^(1/2) to slot a
/// and to slot h + b.
Tensor backprojectE1(const Tensor& eD, const Basis& basis);

/// Mean of e1 reshaped to (d, h). Throws DomainError for h != w.
Tensor reduceE0(const Tensor& e1, std::size_t d, std::size_t h, std::size_t w);

struct EnergySpectrum {
    std::string layerId;
    std::size_t h = 0;
    std::size_t w = 0;
    std::size_t kernels = 0;
    Tensor eD;
    Tensor e1;
    std::optional<Tensor> e0;
    std::string basisRef = "dct2";
    bool salient = false;

    /// eD rearranged by increasing frequency rank.
    std::vector<double> eDByRank(const Basis& basis) const;
};

EnergySpectrum makeSpectrum(const std::string& layerId, const Tensor& kernels, const Basis& basis,
                            const std::vector<double>& weights, bool salient);

}  // namespace steerlab
