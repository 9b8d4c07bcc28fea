#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "steerlab/netgraph/graph.hpp"
#include "steerlab/numerics/rng.hpp"

namespace steerlab {

/**
 * Incremental graph construction with default parameter initialization.
 *
 * Conv and linear weights get Kaiming-uniform values with fanIn = inputs per
 * output unit; biases start at zero; BatchNorm starts as the identity with
 * unit running variance. Parameter k draws from RngStream(seed).derive(k).
 */
class GraphBuilder {
public:
    explicit GraphBuilder(std::uint64_t seed) : rng_(seed) {}

    std::string input(const std::string& id, std::size_t channels);
    std::string conv(const std::string& id, const std::string& from, std::size_t in, std::size_t out, std::size_t kernel,
                     std::size_t stride = 1, std::size_t padding = 0, std::size_t groups = 1, bool bias = false);
    std::string pointwise(const std::string& id, const std::string& from, std::size_t in, std::size_t out,
                          std::size_t stride = 1, bool bias = false);
    std::string batchNorm(const std::string& id, const std::string& from, std::size_t channels);
    std::string activation(const std::string& id, const std::string& from, ActivationKind kind);
    std::string add(const std::string& id, const std::vector<std::string>& from);
    std::string concat(const std::string& id, const std::vector<std::string>& from);
    std::string upsample(const std::string& id, const std::string& from, std::size_t scale = 2);
    std::string globalAvgPool(const std::string& id, const std::string& from);
    std::string linear(const std::string& id, const std::string& from, std::size_t in, std::size_t out, bool bias = true);
    std::string fusion(const std::string& id, const std::vector<std::string>& from, float init = 0.5f);

    void note(const std::string& text) { net_.notes.push_back(text); }
    NetworkGraph finish(const std::vector<std::string>& outputs);

private:
    std::string addNode(LayerNode node);

    NetworkGraph net_;
    RngStream rng_;
    std::uint64_t paramCounter_ = 0;
};

/// Default parameter values for a declared parameter (Kaiming weights, zero
/// bias, identity BatchNorm, 0.5 fusion scalars).
Tensor defaultParamValue(const LayerNode& node, const ParamDecl& decl, RngStream& rng);

struct UNetDConfig {
    std::array<std::size_t, 5> widths{3, 8, 16, 32, 64};
    std::size_t expansion = 6;
    std::size_t inChannels = 1;
};

/// Depthwise-separable encoder/decoder. Output: 1-channel logits at input resolution.
/// Input height and width must be divisible by 16.
NetworkGraph buildUNetD(const UNetDConfig& config = {}, std::uint64_t seed = 0);

/// Bottleneck residual network: stem conv, one bottleneck per stage, pooled linear head.
NetworkGraph buildTinyResNet(std::size_t stages, std::size_t width, std::size_t inChannels = 3,
                             std::size_t classes = 5, std::uint64_t seed = 0);

/// Single dense block: each layer appends `growth` channels via 1x1 -> 3x3 and concatenation.
NetworkGraph buildTinyDenseNet(std::size_t blocks, std::size_t growth, std::size_t inChannels = 3,
                               std::size_t classes = 5, std::uint64_t seed = 0);

/// Small segmentation net (3x3 conv stack with BN/ReLU and a 1x1 head) used by desk experiments.
NetworkGraph buildTinySegNet(std::size_t width, std::size_t depth, std::size_t inChannels = 1,
                             std::uint64_t seed = 0);

/// Builds by name: "unetd", "resnet", "densenet", "segnet" with integer arguments a and b.
NetworkGraph buildArchitecture(const std::string& name, std::size_t a, std::size_t b, std::size_t inChannels,
                               std::size_t classes, std::uint64_t seed);

}  // namespace steerlab
