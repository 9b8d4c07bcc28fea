#include "steerlab/engine/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "steerlab/engine/engine.hpp"
#include "steerlab/engine/optim.hpp"
#include "steerlab/numerics/errors.hpp"
#include "steerlab/numerics/rng.hpp"

namespace steerlab {

Tensor gatherRows(const Tensor& t, const std::vector<std::size_t>& rows) {
    Shape shape = t.shape();
    const std::size_t rowSize = t.size() / shape.at(0);
    shape[0] = rows.size();
    Tensor out(shape);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy_n(t.data().begin() + long(rows[i] * rowSize), rowSize, out.data().begin() + long(i * rowSize));
    return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
    Dataset d{gatherRows(inputs, rows), gatherRows(targets, rows), std::nullopt};
    if (mask) d.mask = gatherRows(*mask, rows);
    return d;
}

void Dataset::validate() const {
    if (inputs.rank() != 4 || inputs.dim(0) == 0) throw DimensionError("dataset: inputs must be (N,C,H,W) with N >= 1");
    if (targets.empty() || targets.dim(0) != inputs.dim(0)) throw DimensionError("dataset: target rows differ from inputs");
    if (mask && mask->shape() != targets.shape()) throw DimensionError("dataset: mask shape differs from targets");
    for (float v : targets.data())
        if (!(v >= 0.0f && v <= 1.0f)) throw DomainError("dataset: targets must lie in [0,1]");
}

std::string toString(LossKind kind) { return kind == LossKind::PixelwiseBCE ? "pixel-bce" : "focal-bce"; }

LossKind parseLossKind(const std::string& name) {
    if (name == "pixel-bce") return LossKind::PixelwiseBCE;
    if (name == "focal-bce") return LossKind::FocalMultiLabel;
    throw ConfigError("unknown loss '" + name + "' (expected pixel-bce or focal-bce)");
}

double diceScore(const Tensor& logits, const Tensor& targets) {
    if (logits.size() != targets.size()) throw DimensionError("diceScore: size mismatch");
    double inter = 0, pred = 0, truth = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const bool p = logits[i] > 0.0f, t = targets[i] > 0.5f;
        inter += p && t;
        pred += p;
        truth += t;
    }
    return pred + truth == 0 ? 1.0 : 2.0 * inter / (pred + truth);
}

double meanRocAuc(const Tensor& scores, const Tensor& targets, const Tensor* mask) {
    if (scores.rank() != 2 || scores.shape() != targets.shape()) throw DimensionError("meanRocAuc: expected matching (N,T)");
    const std::size_t n = scores.dim(0), t = scores.dim(1);
    double sum = 0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < t; ++k) {
        std::vector<std::pair<float, bool>> v;
        for (std::size_t i = 0; i < n; ++i)
            if (!mask || (*mask)[i * t + k] != 0.0f) v.emplace_back(scores[i * t + k], targets[i * t + k] > 0.5f);
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        double pos = 0, neg = 0, rankSum = 0;
        for (std::size_t i = 0; i < v.size();) {
            std::size_t j = i;
            while (j < v.size() && v[j].first == v[i].first) ++j;
            const double midRank = 0.5 * double(i + 1 + j);
            for (std::size_t q = i; q < j; ++q) {
                if (v[q].second) {
                    rankSum += midRank;
                    ++pos;
                } else {
                    ++neg;
                }
            }
            i = j;
        }
        if (pos == 0 || neg == 0) continue;
        sum += (rankSum - pos * (pos + 1) / 2) / (pos * neg);
        ++used;
    }
    return used == 0 ? 0.0 : sum / double(used);
}

ClassCounts countClasses(const Dataset& data) {
    const Tensor& y = data.targets;
    if (y.rank() != 2) throw DimensionError("countClasses: expected (N,T) targets");
    const std::size_t n = y.dim(0), t = y.dim(1);
    ClassCounts c{std::vector<double>(t, 0.0), std::vector<double>(t, 0.0)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < t; ++k) {
            if (data.mask && (*data.mask)[i * t + k] == 0.0f) continue;
            (y[i * t + k] > 0.5f ? c.pos : c.neg)[k] += 1;
        }
    return c;
}

double evaluate(NetworkGraph& net, const Dataset& data, LossKind kind, std::size_t batchSize) {
    const Tensor out = predict(net, data.inputs, batchSize);
    if (kind == LossKind::PixelwiseBCE) return diceScore(out, data.targets);
    return meanRocAuc(out, data.targets, data.mask ? &*data.mask : nullptr);
}

TrainResult train(NetworkGraph net, const Dataset& data, const TrainConfig& config) {
    data.validate();
    if (!(config.lr >= 0) || !std::isfinite(config.lr)) throw ConfigError("train: learning rate must be >= 0");
    if (config.batchSize == 0) throw ConfigError("train: batch size must be positive");

    std::vector<std::pair<std::size_t, Tensor>> frozen;
    for (std::size_t i = 0; i < net.params.size(); ++i)
        if (net.params[i].fixed) frozen.emplace_back(i, net.params[i].tensor);

    ClassCounts counts = config.counts;
    const bool focal = config.loss == LossKind::FocalMultiLabel;
    if (focal && counts.pos.empty()) counts = countClasses(data);

    TrainResult result{std::move(net), {}};
    NetworkGraph& g = result.net;
    Engine engine(g);
    Adam adam(g, {config.lr});
    const std::vector<bool> want = Engine::trainableMask(g);
    const RngStream master(config.seed);
    std::vector<std::size_t> order(data.size());

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        RngStream rng = master.derive(epoch);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        const auto start = std::chrono::steady_clock::now();
        double lossSum = 0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < order.size(); b += config.batchSize) {
            const std::vector<std::size_t> rows(order.begin() + long(b),
                                                order.begin() + long(std::min(order.size(), b + config.batchSize)));
            const Dataset batch = data.subset(rows);
            const Tensor& out = engine.forward(batch.inputs, {true, true});
            const LossResult loss =
                focal ? focalMultiLabelBCE(out, batch.targets, batch.mask ? &*batch.mask : nullptr, counts,
                                           {config.focalGamma, false})
                      : pixelwiseBCEWithLogits(out, batch.targets);
            if (!std::isfinite(loss.value))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batches));
            adam.step(g, engine.backward(loss.grad, want));
            lossSum += loss.value;
            ++batches;
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        EpochMetrics m{epoch, lossSum / double(batches), 0.0, seconds};
        if (!config.skipMetric) m.metric = evaluate(g, config.validation ? *config.validation : data, config.loss);
        result.history.push_back(m);
        if (config.onEpoch) config.onEpoch(m);
    }

    for (const auto& [i, t] : frozen)
        if (!g.params[i].tensor.bitEqual(t))
            throw NumericError("train: fixed parameter " + g.params[i].owner + "." + g.params[i].name + " changed");
    return result;
}

}  // namespace steerlab
