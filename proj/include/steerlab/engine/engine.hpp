#pragma once

#include <string>
#include <vector>

#include "steerlab/engine/ops.hpp"
#include "steerlab/netgraph/graph.hpp"
#include "steerlab/numerics/tensor.hpp"

namespace steerlab {

struct ForwardOptions {
    bool training = false;
    /// BatchNorm running statistics move only when training and this is set.
    bool updateRunningStats = true;
};

/// Gradients aligned with NetworkGraph::params. Entries that were not
/// requested are empty tensors.
struct GradientTape {
    std::vector<Tensor> params;
    Tensor input;

    bool has(std::size_t i) const { return i < params.size() && !params[i].empty(); }
};

/// Executes a single-input, single-output NetworkGraph. Holds the activations
/// of the last forward pass, so one Engine serves one thread.
class Engine {
public:
    explicit Engine(NetworkGraph& net);

    const Tensor& forward(const Tensor& input, const ForwardOptions& options = {});

    /// Reverse pass for d(loss)/d(output) = gradOutput. wantParam selects which
    /// params get gradients (empty means every non-buffer param, fixed ones
    /// included). Work that no requested gradient depends on is skipped.
    GradientTape backward(const Tensor& gradOutput, std::vector<bool> wantParam = {}, bool wantInput = false);

    const Tensor& value(const std::string& id) const;
    const Tensor& output() const;
    NetworkGraph& net() { return net_; }

    /// Mask requesting gradients for trainable params only.
    static std::vector<bool> trainableMask(const NetworkGraph& net);

private:
    struct Slot {
        const LayerNode* node = nullptr;
        std::vector<std::size_t> inputs;   // slot indices
        std::vector<long> params;          // by declared order, -1 when absent
        ops::BatchNormCache bn;
    };

    NetworkGraph& net_;
    std::vector<Slot> slots_;  // topological order
    std::vector<Tensor> values_;
    std::size_t inputSlot_ = 0, outputSlot_ = 0;
    bool haveForward_ = false;

    const Tensor& paramTensor(const Slot& s, std::size_t k) const;
};

/// Forward in eval mode over the leading axis in chunks of batchSize.
Tensor predict(NetworkGraph& net, const Tensor& inputs, std::size_t batchSize = 32);

}  // namespace steerlab
