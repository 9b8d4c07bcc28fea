#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>

#include "steerlab/engine/engine.hpp"
#include "steerlab/numerics/rng.hpp"

namespace steerlab::oracle {

struct GradCheckResult {
    double maxRelError = 0.0;
    std::size_t probes = 0;
};

inline double relativeError(double analytic, double numeric, double floor = 1e-3) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central difference of f in the float slot x with step h, where the step
/// is the float difference actually applied.
inline double centralDifference(float& x, float h, const std::function<double()>& f) {
    const float orig = x;
    x = orig + h;
    const float up = x;
    const double lp = f();
    x = orig - h;
    const float down = x;
    const double lm = f();
    x = orig;
    return (lp - lm) / (double(up) - double(down));
}

/// Richardson-extrapolated central difference, O(h^4) truncation error.
inline double richardson(float& x, float step, const std::function<double()>& f) {
    const float h = step * std::max(1.0f, std::abs(x));
    const double coarse = centralDifference(x, h, f);
    const double fine = centralDifference(x, 0.5f * h, f);
    return (4.0 * fine - coarse) / 3.0;
}

/// Central differences of L = sum(c * y) for a random projection c, probing
/// params and input entries round-robin. The step is the float difference
/// actually applied, so rounding of the perturbed value does not bias the estimate.
inline GradCheckResult gradCheckGraph(NetworkGraph net, Tensor input, bool training, std::size_t probes,
                                      std::uint64_t seed, float step = 4e-2f) {
    Engine engine(net);
    const ForwardOptions opts{training, false};
    const Tensor y0 = engine.forward(input, opts);
    RngStream rng(seed);
    Tensor c(y0.shape());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = static_cast<float>(rng.normal());
    const GradientTape tape = engine.backward(c, {}, true);

    auto objective = [&]() {
        const Tensor& y = engine.forward(input, opts);
        double s = 0;
        for (std::size_t i = 0; i < y.size(); ++i) s += double(c[i]) * y[i];
        return s;
    };

    std::vector<long> targets{-1};
    for (std::size_t i = 0; i < net.params.size(); ++i)
        if (!net.params[i].buffer) targets.push_back(long(i));

    GradCheckResult r;
    for (std::size_t p = 0; p < probes; ++p) {
        const long target = targets[p % targets.size()];
        Tensor& t = target < 0 ? input : net.params[std::size_t(target)].tensor;
        const Tensor& g = target < 0 ? tape.input : tape.params[std::size_t(target)];
        const std::size_t k = rng.below(t.size());
        const double numeric = richardson(t[k], step, objective);
        r.maxRelError = std::max(r.maxRelError, relativeError(g[k], numeric));
        ++r.probes;
    }
    return r;
}

/// Directional variant for deep graphs: each probe moves a whole param tensor
/// (or the input) along d, the normalized sum of a random unit vector and the
/// unit analytic gradient, and compares the
/// Richardson-extrapolated slope of L = sum(c * y) with sum(grad * d).
inline GradCheckResult gradCheckDirectional(NetworkGraph net, Tensor input, bool training, std::size_t probes,
                                            std::uint64_t seed, double step = 4e-2) {
    Engine engine(net);
    const ForwardOptions opts{training, false};
    const Tensor y0 = engine.forward(input, opts);
    RngStream rng(seed);
    Tensor c(y0.shape());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = static_cast<float>(rng.normal());
    const GradientTape tape = engine.backward(c, {}, true);

    std::vector<long> targets{-1};
    for (std::size_t i = 0; i < net.params.size(); ++i)
        if (!net.params[i].buffer) targets.push_back(long(i));

    GradCheckResult r;
    for (std::size_t p = 0; p < probes; ++p) {
        const long target = targets[p % targets.size()];
        Tensor& t = target < 0 ? input : net.params[std::size_t(target)].tensor;
        const Tensor& g = target < 0 ? tape.input : tape.params[std::size_t(target)];
        const Tensor base = t;
        std::vector<double> d(t.size());
        double rnorm = 0, gnorm = 0, scale = 0;
        for (std::size_t k = 0; k < d.size(); ++k) {
            d[k] = rng.normal();
            rnorm += d[k] * d[k];
            gnorm += double(g[k]) * g[k];
            scale += double(base[k]) * base[k];
        }
        rnorm = std::sqrt(rnorm);
        gnorm = std::sqrt(gnorm);
        double norm = 0;
        for (std::size_t k = 0; k < d.size(); ++k) {
            d[k] = d[k] / rnorm + (gnorm > 0 ? g[k] / gnorm : 0.0);
            norm += d[k] * d[k];
        }
        norm = std::sqrt(norm);
        double analytic = 0;
        for (std::size_t k = 0; k < d.size(); ++k) analytic += double(g[k]) * (d[k] /= norm);
        const double h = step * std::max(1.0, std::sqrt(scale / double(d.size())));
        auto at = [&](double s) {
            for (std::size_t k = 0; k < d.size(); ++k) t[k] = static_cast<float>(base[k] + s * d[k]);
            const Tensor& y = engine.forward(input, opts);
            double v = 0;
            for (std::size_t i = 0; i < y.size(); ++i) v += double(c[i]) * y[i];
            return v;
        };
        const double coarse = (at(h) - at(-h)) / (2 * h), fine = (at(h / 2) - at(-h / 2)) / h;
        t = base;
        r.maxRelError = std::max(r.maxRelError, relativeError(analytic, (4.0 * fine - coarse) / 3.0));
        ++r.probes;
    }
    return r;
}

/// Central differences of a scalar loss of a float tensor against its analytic gradient.
inline GradCheckResult gradCheckLoss(Tensor x, const std::function<double(const Tensor&)>& loss, const Tensor& grad,
                                     std::size_t probes, std::uint64_t seed, float step = 1e-3f) {
    RngStream rng(seed);
    GradCheckResult r;
    for (std::size_t p = 0; p < probes; ++p) {
        const std::size_t k = rng.below(x.size());
        const double numeric = richardson(x[k], step, [&] { return loss(x); });
        r.maxRelError = std::max(r.maxRelError, relativeError(grad[k], numeric));
        ++r.probes;
    }
    return r;
}

}  // namespace steerlab::oracle
