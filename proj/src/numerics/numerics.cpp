#include "steerlab/numerics/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace steerlab {

Tensor linspace(double start, double stop, std::size_t count) {
    if (count == 0) throw DomainError("linspace: count must be >= 1");
    Tensor out({count});
    if (count == 1) {
        out[0] = static_cast<float>(start);
        return out;
    }
    const double step = (stop - start) / double(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t fromEnd = count - 1 - i;
        double v;
        if (2 * i == count - 1) {
            v = 0.5 * (start + stop);
        } else if (i < fromEnd) {
            v = start + double(i) * step;
        } else {
            v = stop - double(fromEnd) * step;
        }
        out[i] = static_cast<float>(v);
    }
    return out;
}

EigenDecomposition symEig(const Tensor& a) {
    if (a.rank() != 2 || a.dim(0) != a.dim(1)) {
        throw DimensionError("symEig: expected a square matrix, got " + shapeString(a.shape()));
    }
    const std::size_t m = a.dim(0);
    std::vector<double> s(m * m), v(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        v[i * m + i] = 1.0;
        for (std::size_t j = 0; j < m; ++j) s[i * m + j] = 0.5 * (double(a.at(i, j)) + double(a.at(j, i)));
    }

    auto offDiagonal = [&] {
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) sum += s[i * m + j] * s[i * m + j];
        return sum;
    };
    double scale = 0.0;
    for (double x : s) scale += x * x;

    for (int sweep = 0; sweep < 100 && offDiagonal() > 1e-30 * std::max(scale, 1e-300); ++sweep) {
        for (std::size_t p = 0; p < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                const double apq = s[p * m + q];
                if (apq == 0.0) continue;
                const double app = s[p * m + p], aqq = s[q * m + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < m; ++k) {
                    const double skp = s[k * m + p], skq = s[k * m + q];
                    s[k * m + p] = c * skp - sn * skq;
                    s[k * m + q] = sn * skp + c * skq;
                }
                for (std::size_t k = 0; k < m; ++k) {
                    const double spk = s[p * m + k], sqk = s[q * m + k];
                    s[p * m + k] = c * spk - sn * sqk;
                    s[q * m + k] = sn * spk + c * sqk;
                }
                for (std::size_t k = 0; k < m; ++k) {
                    const double vkp = v[k * m + p], vkq = v[k * m + q];
                    v[k * m + p] = c * vkp - sn * vkq;
                    v[k * m + q] = sn * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return s[x * m + x] > s[y * m + y]; });

    EigenDecomposition out{Tensor({m}), Tensor({m, m})};
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t src = order[j];
        out.values[j] = static_cast<float>(s[src * m + src]);
        std::size_t peak = 0;
        for (std::size_t k = 1; k < m; ++k)
            if (std::abs(v[k * m + src]) > std::abs(v[peak * m + src])) peak = k;
        const double sign = v[peak * m + src] < 0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < m; ++k) out.vectors[k * m + j] = static_cast<float>(sign * v[k * m + src]);
    }
    return out;
}

double scottBandwidth(const Tensor& samples) {
    const std::size_t k = samples.size();
    if (k < 2) return 0.0;
    double mean = 0.0;
    for (float x : samples.data()) mean += x;
    mean /= double(k);
    double ss = 0.0;
    for (float x : samples.data()) ss += (x - mean) * (x - mean);
    const double sigma = std::sqrt(ss / double(k - 1));
    return sigma * std::pow(double(k), -0.2);
}

Tensor kdeSample(const Tensor& samples, std::size_t n, RngStream& rng) {
    if (samples.empty()) throw DomainError("kdeSample: no samples to fit");
    const double bandwidth = scottBandwidth(samples);
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i) {
        const double center = samples[rng.below(samples.size())];
        out[i] = static_cast<float>(center + bandwidth * rng.normal());
    }
    return out;
}

Tensor gaussianSample(double mean, double variance, std::size_t n, RngStream& rng) {
    if (variance < 0.0) throw DomainError("gaussianSample: negative variance");
    const double sd = std::sqrt(variance);
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(mean + sd * rng.normal());
    return out;
}

double kaimingBound(std::size_t fanIn) {
    if (fanIn == 0) throw DomainError("kaimingBound: fanIn must be >= 1");
    return std::sqrt(kKaimingNumerator / double(fanIn));
}

Tensor kaimingUniform(std::size_t fanIn, std::size_t n, RngStream& rng) {
    const double bound = kaimingBound(fanIn);
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(rng.uniform(-bound, bound));
    return out;
}

}  // namespace steerlab
