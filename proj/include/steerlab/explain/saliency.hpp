#pragma once

#include <cstdint>
#include <vector>

#include "steerlab/engine/train.hpp"
#include "steerlab/netgraph/graph.hpp"

namespace steerlab {

struct SaliencyConfig {
    std::size_t batches = 15;
    std::size_t batchSize = 4;
    /// Score |gradient| instead of |gradient * weight|.
    bool gradOnly = false;
    std::uint64_t seed = 0;
    double eps = 1e-8;
};

/// One score per spatial kernel. layers[l] covers params[paramIndex[l]] with
/// scores shaped (out, in/groups).
struct SaliencyScores {
    struct Layer {
        std::size_t paramIndex = 0;
        std::string owner;
        Tensor scores;
    };
    std::vector<Layer> layers;

    std::size_t kernelCount() const;
    /// Scores of a layer as one weight per kernel row of layerKernels().
    std::vector<double> weights(std::size_t layer) const;
    const Layer* find(const std::string& owner) const;
};

/// Gradient-times-weight saliency of every spatial kernel, accumulated over
/// M minibatches: w_j = sum_m sum |(sum_batch d(y . yhat / yhat')/d f_j) * f_j|
/// with yhat = sigmoid(output), yhat' a detached copy, and masked labels
/// dropped. BatchNorm runs in eval mode.
SaliencyScores saliency(const NetworkGraph& net, const Dataset& data, const SaliencyConfig& config = {});

/// Gradient of sum_i y_i * yhat_i / yhat'_i with respect to the logits.
Tensor saliencyObjectiveGradient(const Tensor& logits, const Tensor& targets, const Tensor* mask, double eps = 1e-8);

}  // namespace steerlab
