#include "steerlab/explain/spectrum.hpp"

#include <cmath>

#include "steerlab/numerics/errors.hpp"

namespace steerlab {

Tensor spectrumED(const Tensor& kernels, const Basis& basis, const std::vector<double>& weights) {
    const std::size_t m = basis.size();
    if (kernels.rank() != 2 || kernels.dim(1) != m)
        throw DimensionError("spectrumED: kernels " + shapeString(kernels.shape()) + " do not match a " +
                             std::to_string(basis.h) + "x" + std::to_string(basis.w) + " basis");
    const std::size_t n = kernels.dim(0);
    if (weights.size() != n) throw DimensionError("spectrumED: one weight per kernel required");
    for (double v : weights)
        if (!(v >= 0) || !std::isfinite(v)) throw DomainError("spectrumED: weights must be finite and non-negative");
    std::vector<double> acc(m, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (weights[j] == 0.0) continue;
        const float* f = kernels.data().data() + j * m;
        for (std::size_t i = 0; i < m; ++i) {
            const float* b = basis.matrix.data().data() + i * m;
            double dot = 0;
            for (std::size_t k = 0; k < m; ++k) dot += double(f[k]) * b[k];
            acc[i] += weights[j] * std::abs(dot);
        }
    }
    Tensor eD({m});
    for (std::size_t i = 0; i < m; ++i) eD[i] = static_cast<float>(acc[i]);
    return eD;
}

std::vector<double> uniformWeights(std::size_t n) { return std::vector<double>(n, n ? 1.0 / double(n) : 0.0); }

Tensor backprojectE1(const Tensor& eD, const Basis& basis) {
    if (eD.size() != basis.size() || basis.factorIndex.size() != basis.size())
        throw DimensionError("backprojectE1: basis lacks a factor index for every row");
    Tensor e1({basis.h + basis.w});
    for (std::size_t i = 0; i < eD.size(); ++i) {
        if (eD[i] < 0) throw DomainError("backprojectE1: negative energy");
        const float root = std::sqrt(eD[i]);
        const auto [a, b] = basis.factorIndex[i];
        e1[a] += root;
        e1[basis.h + b] += root;
    }
    return e1;
}

Tensor reduceE0(const Tensor& e1, std::size_t d, std::size_t h, std::size_t w) {
    if (h != w) throw DomainError("reduceE0: e0 is only defined for square kernels");
    if (e1.size() != d * h) throw DimensionError("reduceE0: e1 length is not d * h");
    Tensor e0({h});
    for (std::size_t k = 0; k < h; ++k) {
        double s = 0;
        for (std::size_t r = 0; r < d; ++r) s += e1[r * h + k];
        e0[k] = static_cast<float>(s / double(d));
    }
    return e0;
}

std::vector<double> EnergySpectrum::eDByRank(const Basis& basis) const {
    std::vector<double> out(eD.size());
    for (std::size_t i = 0; i < eD.size(); ++i) out[basis.order[i]] = eD[i];
    return out;
}

EnergySpectrum makeSpectrum(const std::string& layerId, const Tensor& kernels, const Basis& basis,
                            const std::vector<double>& weights, bool salient) {
    EnergySpectrum s;
    s.layerId = layerId;
    s.h = basis.h;
    s.w = basis.w;
    s.kernels = kernels.dim(0);
    s.eD = spectrumED(kernels, basis, weights);
    s.e1 = backprojectE1(s.eD, basis);
    if (basis.h == basis.w) s.e0 = reduceE0(s.e1, 2, basis.h, basis.w);
    s.salient = salient;
    return s;
}

}  // namespace steerlab
