#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "steerlab/explain/saliency.hpp"
#include "steerlab/netgraph/graph.hpp"
#include "steerlab/numerics/rng.hpp"

namespace steerlab {

/// Per spatial layer, true where a kernel is entirely zero. Layers follow
/// spatialParams() order.
struct ZeroMask {
    struct Layer {
        std::string owner;
        std::size_t out = 0;
        std::size_t in = 0;  // input channels per group
        std::vector<bool> zero;
        bool at(std::size_t o, std::size_t i) const { return zero[o * in + i]; }
    };
    std::vector<Layer> layers;

    std::size_t zeroed() const;
    std::size_t total() const;
    const Layer* find(const std::string& owner) const;
};

ZeroMask zeroMaskOf(const NetworkGraph& net);

enum class ZeroOrder { LeastSalient, MostSalient };

struct ZeroResult {
    NetworkGraph net;
    ZeroMask mask;
};

/// Sets the floor(fraction * K) lowest-scored spatial kernels to exact zero,
/// ranking all K kernels of the network together. Ties break by
/// (layer, out, in). Throws ConfigError for a fraction outside [0, 1] and
/// DimensionError when the scores do not cover every spatial layer.
ZeroResult zeroLeastSalient(const NetworkGraph& net, const SaliencyScores& scores, double fraction);
/// Same, ranking from either end.
ZeroResult zeroKernels(const NetworkGraph& net, const SaliencyScores& scores, double fraction, ZeroOrder order);

struct LayerRemoval {
    std::string owner;
    std::vector<std::size_t> inputs;
    std::vector<std::size_t> outputs;
};

/// What pruneZeroChannels took out of the spatial layers, with enough of the
/// original graph to revisit the decision during repair.
struct RemovedChannels {
    std::vector<LayerRemoval> layers;
    ZeroMask mask;
    std::vector<LayerNode> originalNodes;
    std::vector<ParamTensor> originalParams;
};

struct ChannelPruneStep {
    NetworkGraph net;
    RemovedChannels removed;
    /// Usually not ok: neighbors still expect the old channel counts.
    GraphStatus status;
};

/// Removes output channels whose mask row is all true and input channels
/// whose column is all true from each spatial conv. A grouped conv only
/// loses whole groups whose kernels are all zero. Neighbors are left alone.
/// Throws DomainError if the mask marks a nonzero kernel.
ChannelPruneStep pruneZeroChannels(const NetworkGraph& net, const ZeroMask& mask);

struct PruneReport {
    struct Layer {
        std::string owner;
        LayerKind kind = LayerKind::Conv2d;
        bool spatial = false;
        std::vector<std::size_t> removedInputs;
        std::vector<std::size_t> removedOutputs;
        std::size_t paramsBefore = 0;
        std::size_t paramsAfter = 0;
    };

    std::size_t kernelsZeroed = 0;
    std::size_t kernelsTotal = 0;
    std::size_t paramsBefore = 0;
    std::size_t paramsAfter = 0;
    double fractionSpatialZeroed = 0;
    double fractionParamsPruned = 0;
    std::vector<Layer> layers;
    std::vector<std::string> affectedNeighbors;
    std::vector<std::string> deletedGroups;
    std::vector<std::string> warnings;

    std::size_t channelsRemoved() const;
};

struct RepairResult {
    NetworkGraph net;
    PruneReport report;
};

/**
 * Makes a channel removal consistent across the whole graph.
 *
 * Channels are followed through BatchNorm, activations, upsampling, pooling,
 * concat offsets and add/fusion joins in both directions. A channel goes when
 * every spatial conv producing it has an all-zero row, or every conv reading
 * it has an all-zero column; the decision is iterated to a fixed point.
 * Channels reaching a graph input or output stay. A join keeps a channel
 * unless it is removable on every input, with a warning when some inputs
 * disagree. Grouped convs keep a group unless all of its inputs and outputs
 * go. The result passes validateGraph.
 */
RepairResult repairGraph(const NetworkGraph& pruned, const RemovedChannels& removed);

struct FillZeroOptions {
    /// Statistics of partially zero kernels over nonzero entries only.
    bool nonzeroStats = false;
};

/// All-zero spatial kernels get Kaiming-uniform values; zero entries of
/// partially zero kernels get N(mean, var) of their kernel. Every spatial
/// tensor is marked fixed.
NetworkGraph fillZero(const NetworkGraph& net, const RngStream& rng, const FillZeroOptions& options = {});

/// Largest absolute output difference over the probe batch, both nets in
/// eval mode. Throws DimensionError when output shapes differ.
double pruneEquivalenceCheck(const NetworkGraph& zeroed, const NetworkGraph& pruned, const Tensor& probes);

struct PruneOptions {
    double fraction = 0.5;
    bool fillZero = false;
    FillZeroOptions fill;
    std::uint64_t seed = 0;
};

struct PruneOutcome {
    NetworkGraph zeroed;
    NetworkGraph pruned;
    PruneReport report;
};

/// Zero, remove zero channels, repair, and optionally FillZero.
PruneOutcome channelPrune(const NetworkGraph& net, const SaliencyScores& scores, const PruneOptions& options);

/// Default learning-rate multiplier when fine-tuning a pruned network.
inline constexpr double kPrunedLrMultiplier = 2.0;

/// Line-oriented "key value" text.
std::string toText(const PruneReport& report);

}  // namespace steerlab
