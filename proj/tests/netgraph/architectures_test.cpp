#include <gtest/gtest.h>

#include "steerlab/netgraph/architectures.hpp"

using namespace steerlab;

namespace {

// Independent closed-form parameter count for the depthwise-separable U-Net
// with the default block layout.
std::size_t unetdBlockParams(std::size_t in, std::size_t out, std::size_t e) {
    const std::size_t mid = in * e;
    return in * mid + 2 * mid + mid * 9 + 2 * mid + mid * out;
}

}  // namespace

TEST(UNetD, SpatialShareWithinReferenceBand) {
    const NetworkGraph g = buildUNetD();
    const ParamCounts c = countParams(g);
    EXPECT_GE(c.spatialShare(), 0.08);
    EXPECT_LE(c.spatialShare(), 0.14);
}

TEST(UNetD, ParameterCountMatchesClosedForm) {
    const std::size_t w[5] = {3, 8, 16, 32, 64};
    std::size_t expected = unetdBlockParams(1, w[0], 6);
    for (int i = 1; i < 5; ++i) expected += unetdBlockParams(w[i - 1], w[i], 6);
    for (int i = 4; i >= 1; --i) expected += unetdBlockParams(w[i], w[i - 1], 6) + 2;
    expected += 3 * 9;
    EXPECT_EQ(countParams(buildUNetD()).total, expected);
}

TEST(UNetD, BreakdownSumsToTotal) {
    const NetworkGraph g = buildUNetD();
    std::size_t sum = 0;
    for (const auto& [block, c] : paramBreakdown(g)) sum += c.total;
    EXPECT_EQ(sum, countParams(g).total);
    EXPECT_EQ(paramBreakdown(g).size(), 10u);  // 5 encoder, 4 decoder, head
}

TEST(UNetD, SpatialLayersAreDepthwise) {
    const NetworkGraph g = buildUNetD();
    for (std::size_t i : g.spatialParams()) {
        const LayerNode& n = g.node(g.params[i].owner);
        if (n.id == "head.conv") continue;
        EXPECT_EQ(n.attrs.groups, n.attrs.inChannels);
        EXPECT_EQ(n.attrs.kernelH, 3u);
        EXPECT_FALSE(n.attrs.bias);
    }
}

TEST(TinyResNet, ResidualAddsHaveEqualChannels) {
    const NetworkGraph g = buildTinyResNet(2, 8);
    const auto ch = g.channelCounts();
    int adds = 0;
    for (const auto& n : g.nodes) {
        if (n.kind != LayerKind::Add) continue;
        ++adds;
        EXPECT_EQ(ch.at(n.inputs[0]), ch.at(n.inputs[1]));
    }
    EXPECT_EQ(adds, 2);
    EXPECT_TRUE(validateGraph(g).ok());
}

TEST(TinyDenseNet, ConcatGrowth) {
    const std::size_t growth = 4;
    const NetworkGraph g = buildTinyDenseNet(2, growth);
    const auto ch = g.channelCounts();
    const std::size_t initial = ch.at("stem.conv");
    for (std::size_t k = 0; k < 2; ++k) {
        const std::string id = "dense" + std::to_string(k) + ".concat";
        EXPECT_EQ(ch.at(g.node(id).inputs[0]), initial + k * growth);
        EXPECT_EQ(ch.at(id), initial + (k + 1) * growth);
    }
    EXPECT_TRUE(validateGraph(g).ok());
}

TEST(Architectures, DeterministicInSeed) {
    const NetworkGraph a = buildTinyResNet(2, 4, 3, 5, 9), b = buildTinyResNet(2, 4, 3, 5, 9);
    const NetworkGraph c = buildTinyResNet(2, 4, 3, 5, 10);
    for (std::size_t i = 0; i < a.params.size(); ++i) EXPECT_TRUE(a.params[i].tensor.bitEqual(b.params[i].tensor));
    EXPECT_FALSE(a.params[0].tensor.bitEqual(c.params[0].tensor));
}
