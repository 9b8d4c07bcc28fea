#include "steerlab/explain/saliency.hpp"

#include <cmath>
#include <numeric>

#include "steerlab/engine/engine.hpp"
#include "steerlab/numerics/errors.hpp"
#include "steerlab/numerics/rng.hpp"

namespace steerlab {

std::size_t SaliencyScores::kernelCount() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.scores.size();
    return n;
}

std::vector<double> SaliencyScores::weights(std::size_t layer) const {
    const Tensor& s = layers.at(layer).scores;
    return std::vector<double>(s.data().begin(), s.data().end());
}

const SaliencyScores::Layer* SaliencyScores::find(const std::string& owner) const {
    for (const auto& l : layers)
        if (l.owner == owner) return &l;
    return nullptr;
}

Tensor saliencyObjectiveGradient(const Tensor& logits, const Tensor& targets, const Tensor* mask, double eps) {
    if (logits.shape() != targets.shape()) throw DimensionError("saliency: output and target shapes differ");
    Tensor g(logits.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (mask && (*mask)[i] == 0.0f) continue;
        const double s = 1.0 / (1.0 + std::exp(-double(logits[i])));
        g[i] = static_cast<float>(targets[i] * s * (1.0 - s) / (s + eps));
    }
    return g;
}

SaliencyScores saliency(const NetworkGraph& net, const Dataset& data, const SaliencyConfig& config) {
    if (data.targets.empty() || data.size() == 0) throw DomainError("saliency: labeled batches are required");
    data.validate();
    if (config.batches == 0 || config.batchSize == 0) throw ConfigError("saliency: batches and batch size must be positive");

    NetworkGraph work = net;
    Engine engine(work);
    SaliencyScores out;
    std::vector<bool> want(work.params.size(), false);
    for (std::size_t i : work.spatialParams()) {
        want[i] = true;
        const Shape& s = work.params[i].tensor.shape();
        out.layers.push_back({i, work.params[i].owner, Tensor({s[0], s[1]})});
    }
    if (out.layers.empty()) throw DomainError("saliency: network has no spatial layers");

    // Minibatches walk a shuffled order, reshuffling whenever it runs out.
    const RngStream master(config.seed);
    std::vector<std::size_t> order(data.size());
    std::size_t cursor = order.size(), pass = 0;
    auto refill = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        RngStream rng = master.derive(pass++);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        cursor = 0;
    };

    for (std::size_t m = 0; m < config.batches; ++m) {
        std::vector<std::size_t> rows;
        while (rows.size() < config.batchSize) {
            if (cursor == order.size()) refill();
            rows.push_back(order[cursor++]);
        }
        const Dataset batch = data.subset(rows);
        const Tensor& y = engine.forward(batch.inputs, {false, false});
        const Tensor g = saliencyObjectiveGradient(y, batch.targets, batch.mask ? &*batch.mask : nullptr, config.eps);
        const GradientTape tape = engine.backward(g, want);
        for (auto& layer : out.layers) {
            const Tensor& grad = tape.params[layer.paramIndex];
            const Tensor& f = work.params[layer.paramIndex].tensor;
            const Shape& s = f.shape();
            const std::size_t k = s[2] * s[3];
            for (std::size_t j = 0; j < layer.scores.size(); ++j) {
                double acc = 0;
                for (std::size_t e = 0; e < k; ++e) {
                    const std::size_t idx = j * k + e;
                    acc += std::abs(double(grad[idx]) * (config.gradOnly ? 1.0 : double(f[idx])));
                }
                layer.scores[j] += static_cast<float>(acc);
            }
        }
    }
    for (const auto& layer : out.layers)
        if (!layer.scores.allFinite()) throw NumericError("saliency: non-finite score in " + layer.owner);
    return out;
}

}  // namespace steerlab
