#include "steerlab/netgraph/architectures.hpp"

#include "steerlab/numerics/errors.hpp"
#include "steerlab/numerics/numerics.hpp"

namespace steerlab {

Tensor defaultParamValue(const LayerNode& node, const ParamDecl& decl, RngStream& rng) {
    if (decl.name == "weight") {
        const Shape& s = decl.shape;
        const std::size_t fanIn = s.size() == 4 ? s[1] * s[2] * s[3] : s[1];
        return kaimingUniform(fanIn, shapeVolume(s), rng).reshaped(s);
    }
    if (decl.name == "gamma" || decl.name == "running_var") return Tensor(decl.shape, 1.0f);
    if (decl.name == "scalars") return Tensor(decl.shape, 0.5f);
    (void)node;
    return Tensor(decl.shape, 0.0f);
}

std::string GraphBuilder::addNode(LayerNode node) {
    for (const auto& decl : declaredParams(node)) {
        RngStream rng = rng_.derive(paramCounter_++);
        ParamTensor p;
        p.owner = node.id;
        p.name = decl.name;
        p.tensor = defaultParamValue(node, decl, rng);
        p.buffer = decl.buffer;
        p.spatial = decl.spatial;
        net_.params.push_back(std::move(p));
    }
    net_.nodes.push_back(std::move(node));
    return net_.nodes.back().id;
}

std::string GraphBuilder::input(const std::string& id, std::size_t channels) {
    LayerNode n{id, LayerKind::Input, {}, {}};
    n.attrs.outChannels = channels;
    net_.inputs.push_back(id);
    return addNode(std::move(n));
}

std::string GraphBuilder::conv(const std::string& id, const std::string& from, std::size_t in, std::size_t out,
                               std::size_t kernel, std::size_t stride, std::size_t padding, std::size_t groups,
                               bool bias) {
    LayerNode n{id, kernel == 1 ? LayerKind::PointwiseConv : LayerKind::Conv2d, {}, {from}};
    n.attrs.inChannels = in;
    n.attrs.outChannels = out;
    n.attrs.kernelH = n.attrs.kernelW = kernel;
    n.attrs.stride = stride;
    n.attrs.padding = padding;
    n.attrs.groups = groups;
    n.attrs.bias = bias;
    return addNode(std::move(n));
}

std::string GraphBuilder::pointwise(const std::string& id, const std::string& from, std::size_t in, std::size_t out,
                                    std::size_t stride, bool bias) {
    return conv(id, from, in, out, 1, stride, 0, 1, bias);
}

std::string GraphBuilder::batchNorm(const std::string& id, const std::string& from, std::size_t channels) {
    LayerNode n{id, LayerKind::BatchNorm, {}, {from}};
    n.attrs.inChannels = n.attrs.outChannels = channels;
    return addNode(std::move(n));
}

std::string GraphBuilder::activation(const std::string& id, const std::string& from, ActivationKind kind) {
    LayerNode n{id, LayerKind::Activation, {}, {from}};
    n.attrs.activation = kind;
    return addNode(std::move(n));
}

std::string GraphBuilder::add(const std::string& id, const std::vector<std::string>& from) {
    return addNode({id, LayerKind::Add, {}, from});
}

std::string GraphBuilder::concat(const std::string& id, const std::vector<std::string>& from) {
    return addNode({id, LayerKind::Concat, {}, from});
}

std::string GraphBuilder::upsample(const std::string& id, const std::string& from, std::size_t scale) {
    LayerNode n{id, LayerKind::BilinearUpsample, {}, {from}};
    n.attrs.scale = scale;
    return addNode(std::move(n));
}

std::string GraphBuilder::globalAvgPool(const std::string& id, const std::string& from) {
    return addNode({id, LayerKind::GlobalAvgPool, {}, {from}});
}

std::string GraphBuilder::linear(const std::string& id, const std::string& from, std::size_t in, std::size_t out,
                                 bool bias) {
    LayerNode n{id, LayerKind::Linear, {}, {from}};
    n.attrs.inChannels = in;
    n.attrs.outChannels = out;
    n.attrs.bias = bias;
    return addNode(std::move(n));
}

std::string GraphBuilder::fusion(const std::string& id, const std::vector<std::string>& from, float init) {
    LayerNode n{id, LayerKind::ScalarFusion, {}, from};
    n.attrs.fusionScalars = from.size();
    const std::string out = addNode(std::move(n));
    net_.params.back().tensor.fill(init);
    return out;
}

NetworkGraph GraphBuilder::finish(const std::vector<std::string>& outputs) {
    net_.outputs = outputs;
    requireValidGraph(net_);
    return net_;
}

namespace {

// pointwise expand -> CELU -> BN -> depthwise 3x3 -> CELU -> BN -> pointwise project
std::string unetdBlock(GraphBuilder& b, const std::string& name, const std::string& from, std::size_t in,
                       std::size_t out, std::size_t expansion, std::size_t stride) {
    const std::size_t mid = in * expansion;
    std::string x = b.pointwise(name + ".expand", from, in, mid);
    x = b.activation(name + ".expand_act", x, ActivationKind::CELU);
    x = b.batchNorm(name + ".expand_bn", x, mid);
    x = b.conv(name + ".spatial", x, mid, mid, 3, stride, 1, mid);
    x = b.activation(name + ".spatial_act", x, ActivationKind::CELU);
    x = b.batchNorm(name + ".spatial_bn", x, mid);
    return b.pointwise(name + ".project", x, mid, out);
}

}  // namespace

NetworkGraph buildUNetD(const UNetDConfig& config, std::uint64_t seed) {
    const auto& w = config.widths;
    GraphBuilder b(seed);
    b.note("block order: pointwise expand, CELU, BatchNorm, depthwise 3x3, CELU, BatchNorm, pointwise project");
    b.note("decoder: block, bilinear x2 upsample, then two-scalar fusion with the encoder skip");
    std::string x = b.input("input", config.inChannels);
    std::vector<std::string> skips;
    x = unetdBlock(b, "enc0", x, config.inChannels, w[0], config.expansion, 1);
    skips.push_back(x);
    for (std::size_t i = 1; i < 5; ++i) {
        x = unetdBlock(b, "enc" + std::to_string(i), x, w[i - 1], w[i], config.expansion, 2);
        skips.push_back(x);
    }
    for (std::size_t i = 4; i >= 1; --i) {
        const std::string name = "dec" + std::to_string(i);
        x = unetdBlock(b, name, x, w[i], w[i - 1], config.expansion, 1);
        x = b.upsample(name + ".up", x, 2);
        x = b.fusion(name + ".fuse", {x, skips[i - 1]});
    }
    x = b.conv("head.conv", x, w[0], 1, 3, 1, 1);
    return b.finish({x});
}

NetworkGraph buildTinyResNet(std::size_t stages, std::size_t width, std::size_t inChannels, std::size_t classes,
                             std::uint64_t seed) {
    if (stages == 0 || width == 0) throw DomainError("buildTinyResNet: stages and width must be >= 1");
    GraphBuilder b(seed);
    std::string x = b.input("input", inChannels);
    std::size_t ch = 4 * width;
    x = b.conv("stem.conv", x, inChannels, ch, 3, 1, 1);
    x = b.batchNorm("stem.bn", x, ch);
    x = b.activation("stem.relu", x, ActivationKind::ReLU);
    for (std::size_t s = 0; s < stages; ++s) {
        const std::string name = "stage" + std::to_string(s);
        const std::size_t mid = width << s, out = 4 * mid, stride = s == 0 ? 1 : 2;
        std::string y = b.pointwise(name + ".reduce", x, ch, mid);
        y = b.batchNorm(name + ".reduce_bn", y, mid);
        y = b.activation(name + ".reduce_relu", y, ActivationKind::ReLU);
        y = b.conv(name + ".spatial", y, mid, mid, 3, stride, 1);
        y = b.batchNorm(name + ".spatial_bn", y, mid);
        y = b.activation(name + ".spatial_relu", y, ActivationKind::ReLU);
        y = b.pointwise(name + ".expand", y, mid, out);
        y = b.batchNorm(name + ".expand_bn", y, out);
        std::string shortcut = x;
        if (s > 0 || ch != out) {
            shortcut = b.pointwise(name + ".shortcut", x, ch, out, stride);
            shortcut = b.batchNorm(name + ".shortcut_bn", shortcut, out);
        }
        x = b.add(name + ".add", {y, shortcut});
        x = b.activation(name + ".relu", x, ActivationKind::ReLU);
        ch = out;
    }
    x = b.globalAvgPool("head.pool", x);
    x = b.linear("head.fc", x, ch, classes);
    return b.finish({x});
}

NetworkGraph buildTinyDenseNet(std::size_t blocks, std::size_t growth, std::size_t inChannels, std::size_t classes,
                               std::uint64_t seed) {
    if (blocks == 0 || growth == 0) throw DomainError("buildTinyDenseNet: blocks and growth must be >= 1");
    GraphBuilder b(seed);
    std::string x = b.input("input", inChannels);
    std::size_t ch = 2 * growth;
    x = b.conv("stem.conv", x, inChannels, ch, 3, 1, 1);
    for (std::size_t k = 0; k < blocks; ++k) {
        const std::string name = "dense" + std::to_string(k);
        std::string y = b.batchNorm(name + ".bn_a", x, ch);
        y = b.activation(name + ".relu_a", y, ActivationKind::ReLU);
        y = b.pointwise(name + ".bottleneck", y, ch, 4 * growth);
        y = b.batchNorm(name + ".bn_b", y, 4 * growth);
        y = b.activation(name + ".relu_b", y, ActivationKind::ReLU);
        y = b.conv(name + ".spatial", y, 4 * growth, growth, 3, 1, 1);
        x = b.concat(name + ".concat", {x, y});
        ch += growth;
    }
    x = b.batchNorm("head.bn", x, ch);
    x = b.activation("head.relu", x, ActivationKind::ReLU);
    x = b.globalAvgPool("head.pool", x);
    x = b.linear("head.fc", x, ch, classes);
    return b.finish({x});
}

NetworkGraph buildTinySegNet(std::size_t width, std::size_t depth, std::size_t inChannels, std::uint64_t seed) {
    if (width == 0 || depth == 0) throw DomainError("buildTinySegNet: width and depth must be >= 1");
    GraphBuilder b(seed);
    std::string x = b.input("input", inChannels);
    std::size_t ch = inChannels;
    for (std::size_t i = 0; i < depth; ++i) {
        const std::string name = "layer" + std::to_string(i);
        x = b.conv(name + ".spatial", x, ch, width, 3, 1, 1);
        x = b.batchNorm(name + ".bn", x, width);
        x = b.activation(name + ".relu", x, ActivationKind::ReLU);
        ch = width;
    }
    x = b.pointwise("head.conv", x, ch, 1, 1, true);
    return b.finish({x});
}

NetworkGraph buildArchitecture(const std::string& name, std::size_t a, std::size_t b, std::size_t inChannels,
                               std::size_t classes, std::uint64_t seed) {
    if (name == "unetd") {
        UNetDConfig cfg;
        cfg.inChannels = inChannels;
        return buildUNetD(cfg, seed);
    }
    if (name == "resnet") return buildTinyResNet(a, b, inChannels, classes, seed);
    if (name == "densenet") return buildTinyDenseNet(a, b, inChannels, classes, seed);
    if (name == "segnet") return buildTinySegNet(a, b, inChannels, seed);
    throw ConfigError("unknown architecture '" + name + "'");
}

}  // namespace steerlab
