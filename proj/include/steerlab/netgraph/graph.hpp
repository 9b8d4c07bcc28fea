#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "steerlab/numerics/tensor.hpp"

namespace steerlab {

enum class LayerKind {
    Input,
    Conv2d,
    PointwiseConv,
    BatchNorm,
    Linear,
    Activation,
    Add,
    Concat,
    BilinearUpsample,
    GlobalAvgPool,
    ScalarFusion,
};

enum class ActivationKind { CELU, ReLU, Sigmoid };

std::string toString(LayerKind kind);
std::string toString(ActivationKind kind);
/// Throws GraphError(UnknownKind).
LayerKind parseLayerKind(const std::string& name);
ActivationKind parseActivationKind(const std::string& name);

/// Kind-specific attributes; fields a kind does not use stay at their defaults.
struct LayerAttrs {
    std::size_t inChannels = 0;
    std::size_t outChannels = 0;  // Input: channel count of the network input
    std::size_t kernelH = 1;
    std::size_t kernelW = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::size_t groups = 1;
    bool bias = false;
    ActivationKind activation = ActivationKind::ReLU;
    std::size_t scale = 2;          // BilinearUpsample
    std::size_t fusionScalars = 2;  // ScalarFusion

    bool operator==(const LayerAttrs&) const = default;
};

struct LayerNode {
    std::string id;
    LayerKind kind = LayerKind::Input;
    LayerAttrs attrs;
    /// Producer ids in argument order (order matters for Concat and ScalarFusion).
    std::vector<std::string> inputs;
};

struct ParamTensor {
    std::string owner;
    std::string name;
    Tensor tensor;
    bool fixed = false;
    /// Conv kernel with kernelH * kernelW > 1.
    bool spatial = false;
    /// Non-trainable state such as BatchNorm running statistics.
    bool buffer = false;
};

enum class GraphErrc {
    Ok,
    DuplicateId,
    UnknownNode,
    Cycle,
    ChannelMismatch,
    Dangling,
    BadAttrs,
    ArityMismatch,
    ParamMismatch,
    UnknownKind,
};

std::string toString(GraphErrc code);

class GraphError : public std::invalid_argument {
public:
    GraphError(GraphErrc code, const std::string& what) : std::invalid_argument(what), code_(code) {}
    GraphErrc code() const noexcept { return code_; }

private:
    GraphErrc code_;
};

struct GraphStatus {
    GraphErrc code = GraphErrc::Ok;
    std::string message;
    bool ok() const noexcept { return code == GraphErrc::Ok; }
};

/**
 * Directed acyclic network graph with named parameters.
 *
 * Nodes are kept in insertion order; topologicalOrder() is what execution
 * uses. The graph is a value type: transformations copy it and return the
 * modified copy.
 */
struct NetworkGraph {
    std::vector<LayerNode> nodes;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::vector<ParamTensor> params;
    std::vector<std::string> notes;

    const LayerNode& node(const std::string& id) const;
    LayerNode& node(const std::string& id);
    std::optional<std::size_t> findNode(const std::string& id) const;

    const ParamTensor& param(const std::string& owner, const std::string& name) const;
    ParamTensor& param(const std::string& owner, const std::string& name);
    ParamTensor* findParam(const std::string& owner, const std::string& name);
    const ParamTensor* findParam(const std::string& owner, const std::string& name) const;

    /// Ids of nodes that read the output of `id`, in node order.
    std::vector<std::string> consumers(const std::string& id) const;
    /// Node indices in a deterministic topological order. Throws GraphError(Cycle).
    std::vector<std::size_t> topologicalOrder() const;
    /// Output channel count of every node, by id. Throws GraphError on inconsistency.
    std::map<std::string, std::size_t> channelCounts() const;

    /// Indices into params of every spatial kernel tensor, in node order.
    std::vector<std::size_t> spatialParams() const;
};

GraphStatus validateGraph(const NetworkGraph& net);
void requireValidGraph(const NetworkGraph& net);

struct ParamCounts {
    std::size_t total = 0;    // trainable-or-fixed values, buffers excluded
    std::size_t spatial = 0;  // values in spatial kernels
    std::size_t fixed = 0;
    double spatialShare() const { return total == 0 ? 0.0 : double(spatial) / double(total); }
};

ParamCounts countParams(const NetworkGraph& net);
/// Counts grouped by node-id prefix before the first '.', in first-seen order.
std::vector<std::pair<std::string, ParamCounts>> paramBreakdown(const NetworkGraph& net);

/// Declared parameter shapes for a node: name -> (shape, buffer, spatial).
struct ParamDecl {
    std::string name;
    Shape shape;
    bool buffer = false;
    bool spatial = false;
};
std::vector<ParamDecl> declaredParams(const LayerNode& node);

}  // namespace steerlab
