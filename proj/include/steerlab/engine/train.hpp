#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "steerlab/engine/loss.hpp"
#include "steerlab/netgraph/graph.hpp"

namespace steerlab {

/// inputs (N,C,H,W); targets (N,1,H,W) masks for segmentation or (N,T) labels
/// for classification; optional mask of {0,1} shaped like targets.
struct Dataset {
    Tensor inputs;
    Tensor targets;
    std::optional<Tensor> mask;

    std::size_t size() const { return inputs.empty() ? 0 : inputs.dim(0); }
    Dataset subset(const std::vector<std::size_t>& rows) const;
    void validate() const;
};

/// Rows of a tensor's leading axis, in the given order.
Tensor gatherRows(const Tensor& t, const std::vector<std::size_t>& rows);

enum class LossKind { PixelwiseBCE, FocalMultiLabel };

std::string toString(LossKind kind);
LossKind parseLossKind(const std::string& name);

struct EpochMetrics {
    std::size_t epoch = 0;
    double loss = 0.0;
    /// Dice at threshold 0.5 for segmentation, mean ROC AUC for classification.
    double metric = 0.0;
    /// Wall-clock seconds of the optimization steps only.
    double seconds = 0.0;
};

struct TrainConfig {
    LossKind loss = LossKind::PixelwiseBCE;
    double lr = 1e-3;
    std::size_t epochs = 10;
    std::size_t batchSize = 16;
    std::uint64_t seed = 0;
    double focalGamma = 1.0;
    /// Focal class counts; computed from the training set when empty.
    ClassCounts counts;
    /// Metric is taken on this set when given, otherwise on the training set.
    const Dataset* validation = nullptr;
    /// Skip the per-epoch metric pass.
    bool skipMetric = false;
    std::function<void(const EpochMetrics&)> onEpoch;
};

struct TrainResult {
    NetworkGraph net;
    std::vector<EpochMetrics> history;
};

/// Adam training. Fixed params are asserted bit-identical at the end; a
/// non-finite loss aborts with NumericError.
TrainResult train(NetworkGraph net, const Dataset& data, const TrainConfig& config);

double evaluate(NetworkGraph& net, const Dataset& data, LossKind kind, std::size_t batchSize = 32);

/// Global Dice of (logits > 0) against targets > 0.5. Empty prediction and
/// empty target give 1.
double diceScore(const Tensor& logits, const Tensor& targets);
/// ROC AUC per task with ties counted half, averaged over tasks that have
/// both classes among unmasked rows.
double meanRocAuc(const Tensor& scores, const Tensor& targets, const Tensor* mask);

ClassCounts countClasses(const Dataset& data);

}  // namespace steerlab
