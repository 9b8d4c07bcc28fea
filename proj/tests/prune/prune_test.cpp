#include <gtest/gtest.h>

#include <cmath>

#include "steerlab/engine/engine.hpp"
#include "steerlab/netgraph/architectures.hpp"
#include "steerlab/netgraph/initialize.hpp"
#include "steerlab/numerics/errors.hpp"
#include "steerlab/numerics/numerics.hpp"
#include "steerlab/prune/prune.hpp"

using namespace steerlab;

namespace {

SaliencyScores randomScores(const NetworkGraph& net, std::uint64_t seed) {
    RngStream rng(seed);
    SaliencyScores s;
    for (std::size_t pi : net.spatialParams()) {
        const Shape& sh = net.params[pi].tensor.shape();
        Tensor t({sh[0], sh[1]});
        for (float& v : t.data()) v = static_cast<float>(rng.uniform01());
        s.layers.push_back({pi, net.params[pi].owner, t});
    }
    return s;
}

Tensor randomInput(Shape shape, std::uint64_t seed) {
    RngStream rng(seed);
    Tensor t(std::move(shape));
    for (float& v : t.data()) v = static_cast<float>(rng.normal());
    return t;
}

void zeroKernel(NetworkGraph& net, const std::string& owner, std::size_t o, std::size_t i) {
    Tensor& w = net.param(owner, "weight").tensor;
    const std::size_t k = w.dim(2) * w.dim(3);
    for (std::size_t e = 0; e < k; ++e) w[(o * w.dim(1) + i) * k + e] = 0.0f;
}

RepairResult pruneByMask(const NetworkGraph& net) {
    const ChannelPruneStep step = pruneZeroChannels(net, zeroMaskOf(net));
    return repairGraph(step.net, step.removed);
}

// input(2) -> pointwise p -> 3x3 conv c (2 -> 2) -> pointwise q
NetworkGraph sandwich() {
    GraphBuilder b(3);
    b.input("x", 2);
    b.pointwise("p", "x", 2, 2);
    b.conv("c", "p", 2, 2, 3, 1, 1);
    b.pointwise("q", "c", 2, 1);
    return b.finish({"q"});
}

bool hasWarning(const PruneReport& r, const std::string& needle) {
    for (const auto& w : r.warnings)
        if (w.find(needle) != std::string::npos) return true;
    return false;
}

void expectReconciles(const PruneReport& r, const NetworkGraph& before, const NetworkGraph& after) {
    EXPECT_EQ(r.paramsBefore, countParams(before).total);
    EXPECT_EQ(r.paramsAfter, countParams(after).total);
    std::size_t removed = 0;
    for (const auto& l : r.layers) removed += l.paramsBefore - l.paramsAfter;
    EXPECT_EQ(removed, r.paramsBefore - r.paramsAfter);
    EXPECT_DOUBLE_EQ(r.fractionParamsPruned, double(r.paramsBefore - r.paramsAfter) / double(r.paramsBefore));
    EXPECT_DOUBLE_EQ(r.fractionSpatialZeroed, double(r.kernelsZeroed) / double(r.kernelsTotal));
    EXPECT_GE(r.fractionParamsPruned, 0.0);
    EXPECT_LE(r.fractionParamsPruned, 1.0);
}

}  // namespace

TEST(ZeroLeastSalient, FractionZeroAndOne) {
    const NetworkGraph net = buildTinyResNet(1, 4, 3, 5, 1);
    const SaliencyScores s = randomScores(net, 2);
    const ZeroResult none = zeroLeastSalient(net, s, 0.0);
    EXPECT_EQ(none.mask.zeroed(), 0u);
    for (std::size_t i = 0; i < net.params.size(); ++i) EXPECT_TRUE(none.net.params[i].tensor.bitEqual(net.params[i].tensor));
    const ZeroResult all = zeroLeastSalient(net, s, 1.0);
    EXPECT_EQ(all.mask.zeroed(), all.mask.total());
}

TEST(ZeroLeastSalient, HalfOfFourKernels) {
    GraphBuilder b(1);
    b.input("x", 2);
    b.conv("c", "x", 2, 2, 3);
    const NetworkGraph net = b.finish({"c"});
    SaliencyScores s;
    s.layers.push_back({net.spatialParams()[0], "c", Tensor({2, 2}, {3, 1, 4, 2})});
    const ZeroResult r = zeroLeastSalient(net, s, 0.5);
    const auto& m = r.mask.layers[0];
    EXPECT_TRUE(m.at(0, 1));
    EXPECT_TRUE(m.at(1, 1));
    EXPECT_FALSE(m.at(0, 0));
    EXPECT_FALSE(m.at(1, 0));
    const ZeroResult top = zeroKernels(net, s, 0.25, ZeroOrder::MostSalient);
    EXPECT_TRUE(top.mask.layers[0].at(1, 0));
    EXPECT_EQ(top.mask.zeroed(), 1u);
}

TEST(ZeroLeastSalient, TiesBreakByStructuralIndex) {
    GraphBuilder b(1);
    b.input("x", 1);
    b.conv("a", "x", 1, 2, 3);
    b.conv("b", "a", 2, 1, 3);
    const NetworkGraph net = b.finish({"b"});
    SaliencyScores s;
    s.layers.push_back({net.spatialParams()[0], "a", Tensor({2, 1}, 1.0f)});
    s.layers.push_back({net.spatialParams()[1], "b", Tensor({1, 2}, 1.0f)});
    const ZeroResult r = zeroLeastSalient(net, s, 0.75);
    EXPECT_TRUE(r.mask.layers[0].at(0, 0));
    EXPECT_TRUE(r.mask.layers[0].at(1, 0));
    EXPECT_TRUE(r.mask.layers[1].at(0, 0));
    EXPECT_FALSE(r.mask.layers[1].at(0, 1));
}

TEST(ZeroLeastSalient, Errors) {
    const NetworkGraph net = sandwich();
    const SaliencyScores s = randomScores(net, 1);
    EXPECT_THROW(zeroLeastSalient(net, s, 1.5), ConfigError);
    EXPECT_THROW(zeroLeastSalient(net, s, -0.1), ConfigError);
    EXPECT_THROW(zeroLeastSalient(net, SaliencyScores{}, 0.5), DimensionError);
}

TEST(PruneZeroChannels, RowAndColumnRule) {
    NetworkGraph net = sandwich();
    zeroKernel(net, "c", 0, 0);
    zeroKernel(net, "c", 0, 1);
    zeroKernel(net, "c", 1, 0);
    const ChannelPruneStep step = pruneZeroChannels(net, zeroMaskOf(net));
    EXPECT_EQ(step.net.node("c").attrs.inChannels, 1u);
    EXPECT_EQ(step.net.node("c").attrs.outChannels, 1u);
    EXPECT_EQ(step.net.param("c", "weight").tensor.shape(), (Shape{1, 1, 3, 3}));
    EXPECT_FALSE(step.status.ok());
    ASSERT_EQ(step.removed.layers.size(), 1u);
    EXPECT_EQ(step.removed.layers[0].inputs, std::vector<std::size_t>{0});
    EXPECT_EQ(step.removed.layers[0].outputs, std::vector<std::size_t>{0});

    const RepairResult r = repairGraph(step.net, step.removed);
    EXPECT_TRUE(validateGraph(r.net).ok());
    EXPECT_EQ(r.net.node("p").attrs.outChannels, 1u);
    EXPECT_EQ(r.net.node("q").attrs.inChannels, 1u);
    const Tensor& w = net.param("c", "weight").tensor;
    const Tensor& w2 = r.net.param("c", "weight").tensor;
    for (std::size_t e = 0; e < 9; ++e) EXPECT_EQ(w2[e], w[(1 * 2 + 1) * 9 + e]);
    EXPECT_EQ(r.net.param("q", "weight").tensor[0], net.param("q", "weight").tensor[1]);
    EXPECT_EQ(r.net.param("p", "weight").tensor[0], net.param("p", "weight").tensor[2]);
    expectReconciles(r.report, net, r.net);
}

TEST(PruneZeroChannels, MostlyZeroRowsStay) {
    NetworkGraph net = sandwich();
    zeroKernel(net, "c", 0, 0);
    zeroKernel(net, "c", 1, 1);
    const RepairResult r = pruneByMask(net);
    EXPECT_EQ(r.net.node("c").attrs.outChannels, 2u);
    EXPECT_EQ(r.net.node("c").attrs.inChannels, 2u);
    EXPECT_EQ(r.report.paramsAfter, r.report.paramsBefore);
    EXPECT_TRUE(r.report.layers.empty());
}

TEST(PruneZeroChannels, RejectsInconsistentMask) {
    const NetworkGraph net = sandwich();
    ZeroMask m = zeroMaskOf(net);
    m.layers[0].zero[0] = true;
    EXPECT_THROW(pruneZeroChannels(net, m), DomainError);
}

TEST(RepairGraph, BatchNormLosesSlot) {
    GraphBuilder b(2);
    b.input("x", 1);
    b.conv("c", "x", 1, 3, 3, 1, 1);
    b.batchNorm("bn", "c", 3);
    b.pointwise("q", "bn", 3, 1);
    NetworkGraph net = b.finish({"q"});
    for (const char* name : {"gamma", "beta", "running_mean", "running_var"}) {
        Tensor& t = net.param("bn", name).tensor;
        for (std::size_t i = 0; i < 3; ++i) t[i] = float(i + 1) * (name[0] == 'r' ? 0.5f : 1.0f);
    }
    zeroKernel(net, "c", 0, 0);
    const RepairResult r = pruneByMask(net);
    for (const char* name : {"gamma", "beta", "running_mean", "running_var"}) {
        const Tensor& t = r.net.param("bn", name).tensor;
        ASSERT_EQ(t.size(), 2u) << name;
        EXPECT_EQ(t[0], net.param("bn", name).tensor[1]);
        EXPECT_EQ(t[1], net.param("bn", name).tensor[2]);
    }
    EXPECT_EQ(r.net.node("bn").attrs.inChannels, 2u);
    ASSERT_EQ(r.report.affectedNeighbors.size(), 2u);
    EXPECT_EQ(r.report.affectedNeighbors[0], "bn");
}

TEST(RepairGraph, ConcatReindexesDownstream) {
    GraphBuilder b(4);
    b.input("x", 1);
    b.conv("a", "x", 1, 4, 3, 1, 1);
    b.conv("b", "x", 1, 4, 3, 1, 1);
    b.concat("cat", {"a", "b"});
    b.pointwise("d", "cat", 8, 2);
    NetworkGraph net = b.finish({"d"});
    zeroKernel(net, "a", 2, 0);
    const RepairResult r = pruneByMask(net);
    EXPECT_EQ(r.net.node("d").attrs.inChannels, 7u);
    const Tensor& before = net.param("d", "weight").tensor;
    const Tensor& after = r.net.param("d", "weight").tensor;
    const std::size_t kept[] = {0, 1, 3, 4, 5, 6, 7};
    for (std::size_t o = 0; o < 2; ++o)
        for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(after[o * 7 + j], before[o * 8 + kept[j]]);
    const Tensor x = randomInput({2, 1, 5, 5}, 5);
    EXPECT_LT(pruneEquivalenceCheck(net, r.net, x), 1e-6);
}

TEST(RepairGraph, AddJoinNeedsEveryBranch) {
    auto build = [] {
        GraphBuilder b(5);
        b.input("x", 1);
        b.conv("s1", "x", 1, 2, 3, 1, 1);
        b.conv("s2", "x", 1, 2, 3, 1, 1);
        b.add("sum", {"s1", "s2"});
        b.pointwise("q", "sum", 2, 1);
        return b.finish({"q"});
    };
    NetworkGraph one = build();
    zeroKernel(one, "s1", 0, 0);
    const RepairResult kept = pruneByMask(one);
    EXPECT_EQ(kept.net.node("s1").attrs.outChannels, 2u);
    EXPECT_TRUE(hasWarning(kept.report, "sum"));

    NetworkGraph both = build();
    zeroKernel(both, "s1", 0, 0);
    zeroKernel(both, "s2", 0, 0);
    const RepairResult gone = pruneByMask(both);
    EXPECT_EQ(gone.net.node("s1").attrs.outChannels, 1u);
    EXPECT_EQ(gone.net.node("s2").attrs.outChannels, 1u);
    EXPECT_EQ(gone.net.node("q").attrs.inChannels, 1u);
    EXPECT_TRUE(gone.report.warnings.empty());
}

TEST(RepairGraph, DepthwiseGroupDeleted) {
    GraphBuilder b(6);
    b.input("x", 1);
    b.pointwise("e", "x", 1, 4);
    b.conv("dw", "e", 4, 4, 3, 1, 1, 4);
    b.pointwise("p", "dw", 4, 1);
    NetworkGraph net = b.finish({"p"});
    zeroKernel(net, "dw", 1, 0);
    const RepairResult r = pruneByMask(net);
    EXPECT_EQ(r.net.node("dw").attrs.groups, 3u);
    EXPECT_EQ(r.net.node("dw").attrs.inChannels, 3u);
    EXPECT_EQ(r.net.node("e").attrs.outChannels, 3u);
    EXPECT_EQ(r.net.node("p").attrs.inChannels, 3u);
    ASSERT_EQ(r.report.deletedGroups.size(), 1u);
    EXPECT_EQ(r.report.deletedGroups[0], "dw 1");
    EXPECT_LT(pruneEquivalenceCheck(net, r.net, randomInput({3, 1, 6, 6}, 7)), 1e-6);
}

TEST(RepairGraph, PartialGroupKept) {
    GraphBuilder b(7);
    b.input("x", 1);
    b.pointwise("e", "x", 1, 4);
    b.conv("g", "e", 4, 4, 3, 1, 1, 2);
    b.pointwise("p", "g", 4, 1);
    NetworkGraph net = b.finish({"p"});
    zeroKernel(net, "g", 0, 0);
    zeroKernel(net, "g", 0, 1);
    const RepairResult r = pruneByMask(net);
    EXPECT_EQ(r.net.node("g").attrs.outChannels, 4u);
    EXPECT_EQ(r.net.node("g").attrs.groups, 2u);
    EXPECT_TRUE(hasWarning(r.report, "group 0"));
    EXPECT_TRUE(validateGraph(r.net).ok());
}

TEST(RepairGraph, ResNetBottleneckPartlyRemoved) {
    NetworkGraph net = buildTinyResNet(2, 4, 3, 5, 8);
    for (std::size_t o = 0; o < 3; ++o)
        for (std::size_t i = 0; i < 4; ++i) zeroKernel(net, "stage0.spatial", o, i);
    const RepairResult r = pruneByMask(net);
    EXPECT_TRUE(validateGraph(r.net).ok());
    EXPECT_EQ(r.net.node("stage0.spatial").attrs.outChannels, 1u);
    EXPECT_EQ(r.net.node("stage0.expand").attrs.inChannels, 1u);
    const Tensor x = randomInput({2, 3, 8, 8}, 9);
    EXPECT_LT(pruneEquivalenceCheck(net, r.net, x), 1e-6);
    expectReconciles(r.report, net, r.net);
}

TEST(RepairGraph, NeverEmptiesALayer) {
    NetworkGraph net = buildTinySegNet(4, 2, 1, 10);
    const ZeroResult z = zeroLeastSalient(net, randomScores(net, 11), 1.0);
    const RepairResult r = pruneByMask(z.net);
    EXPECT_TRUE(validateGraph(r.net).ok());
    for (const auto& n : r.net.nodes)
        if (n.kind == LayerKind::Conv2d) {
            EXPECT_GE(n.attrs.outChannels, 1u);
        }
    EXPECT_FALSE(r.report.warnings.empty());
}

TEST(RepairGraph, Idempotent) {
    for (std::uint64_t seed : {12u, 13u}) {
        const NetworkGraph base = seed == 12 ? buildTinyDenseNet(3, 4, 3, 5, seed) : buildUNetD({}, seed);
        const ZeroResult z = zeroLeastSalient(base, randomScores(base, seed), 0.7);
        const RepairResult once = pruneByMask(z.net);
        const RepairResult twice = pruneByMask(once.net);
        ASSERT_EQ(once.net.params.size(), twice.net.params.size());
        for (std::size_t i = 0; i < once.net.params.size(); ++i)
            EXPECT_TRUE(once.net.params[i].tensor.bitEqual(twice.net.params[i].tensor)) << once.net.params[i].owner;
        for (std::size_t i = 0; i < once.net.nodes.size(); ++i)
            EXPECT_EQ(once.net.nodes[i].attrs, twice.net.nodes[i].attrs);
        EXPECT_TRUE(twice.report.layers.empty());
    }
}

TEST(PruneEquivalence, RandomFixedNetworks) {
    const std::vector<std::pair<NetworkGraph, Shape>> cases = {
        {buildTinyResNet(2, 8, 3, 5, 20), {32, 3, 8, 8}},
        {buildTinyDenseNet(3, 4, 3, 5, 21), {32, 3, 8, 8}},
        {buildUNetD({}, 22), {32, 1, 16, 16}},
    };
    for (const auto& [base, shape] : cases) {
        const NetworkGraph fixed = markSpatialFixed(base, true);
        const ZeroResult z = zeroLeastSalient(fixed, randomScores(fixed, 23), 0.9);
        const RepairResult r = pruneByMask(z.net);
        EXPECT_LT(r.report.paramsAfter, r.report.paramsBefore);
        EXPECT_LT(pruneEquivalenceCheck(z.net, r.net, randomInput(shape, 24)), 1e-6);
        EXPECT_EQ(pruneEquivalenceCheck(z.net, r.net, Tensor(shape)), 0.0);
    }
}

TEST(PruneEquivalence, NonzeroShiftsShowUp) {
    NetworkGraph net = buildTinyResNet(1, 4, 3, 5, 25);
    net.param("stage0.spatial_bn", "beta").tensor.fill(0.3f);
    for (std::size_t i = 0; i < 4; ++i) zeroKernel(net, "stage0.spatial", 0, i);
    const RepairResult r = pruneByMask(net);
    EXPECT_GT(pruneEquivalenceCheck(net, r.net, randomInput({4, 3, 8, 8}, 26)), 1e-4);
}

TEST(PruneEquivalence, ShapeMismatch) {
    EXPECT_THROW(pruneEquivalenceCheck(buildTinyResNet(1, 4, 3, 5, 1), buildTinyResNet(1, 4, 3, 6, 1), Tensor({1, 3, 8, 8})),
                 DimensionError);
}

TEST(PruneAccounting, DenseNetZeroedVersusPruned) {
    const NetworkGraph net = buildTinyDenseNet(4, 4, 3, 5, 30);
    for (double fraction : {0.8, 0.9, 0.99}) {
        const PruneOutcome out = channelPrune(net, randomScores(net, 31), {fraction, false, {}, 0});
        const PruneReport& r = out.report;
        expectReconciles(r, net, out.pruned);
        EXPECT_GT(r.fractionParamsPruned, 0.0) << fraction;
        EXPECT_LT(r.fractionParamsPruned, r.fractionSpatialZeroed) << fraction;
        EXPECT_NEAR(r.fractionSpatialZeroed, fraction, 0.01);
    }
}

TEST(PruneAccounting, ReportText) {
    const NetworkGraph net = buildTinyResNet(1, 4, 3, 5, 32);
    const PruneOutcome out = channelPrune(net, randomScores(net, 33), {0.9, false, {}, 0});
    const std::string text = toText(out.report);
    EXPECT_EQ(text.rfind("steerlab-prune-report 1\n", 0), 0u);
    EXPECT_NE(text.find("params_before " + std::to_string(out.report.paramsBefore) + "\n"), std::string::npos);
    EXPECT_NE(text.find("params_after " + std::to_string(out.report.paramsAfter) + "\n"), std::string::npos);
    EXPECT_NE(text.find("percent_zeroed_vs_pruned "), std::string::npos);
    EXPECT_NE(text.find("layer stage0.spatial kind conv2d spatial"), std::string::npos);
}

TEST(ChannelPrune, FractionZeroKeepsWeights) {
    const NetworkGraph net = buildUNetD({}, 40);
    const PruneOutcome out = channelPrune(net, randomScores(net, 41), {0.0, false, {}, 0});
    ASSERT_EQ(out.pruned.params.size(), net.params.size());
    for (std::size_t i = 0; i < net.params.size(); ++i) EXPECT_TRUE(out.pruned.params[i].tensor.bitEqual(net.params[i].tensor));
    EXPECT_EQ(out.report.fractionParamsPruned, 0.0);
}

TEST(FillZero, AllZeroKernelGetsKaiming) {
    NetworkGraph net = sandwich();
    zeroKernel(net, "c", 1, 0);
    const NetworkGraph f = fillZero(net, RngStream(1));
    const Tensor& w = f.param("c", "weight").tensor;
    const double bound = kaimingBound(2 * 9);
    for (std::size_t e = 0; e < 9; ++e) {
        const float v = w[(1 * 2 + 0) * 9 + e];
        EXPECT_NE(v, 0.0f);
        EXPECT_LE(std::abs(v), bound);
    }
    for (std::size_t e = 0; e < 9; ++e) EXPECT_EQ(w[e], net.param("c", "weight").tensor[e]);
    EXPECT_TRUE(f.param("c", "weight").fixed);
}

TEST(FillZero, PartialKernelDrawsFromItsStatistics) {
    const std::vector<float> k = {0, 0.5f, -0.5f, 0.5f, -0.5f, 0.5f, -0.5f, 0.5f, -0.5f};
    double mean = 0, var = 0;
    for (float v : k) mean += v / 9.0;
    for (float v : k) var += (v - mean) * (v - mean) / 9.0;

    GraphBuilder b(1);
    b.input("x", 1);
    b.conv("c", "x", 1, 1, 3);
    NetworkGraph net = b.finish({"c"});
    std::copy(k.begin(), k.end(), net.param("c", "weight").tensor.data().begin());

    const std::size_t draws = 4000;
    double m1 = 0, m2 = 0;
    for (std::size_t t = 0; t < draws; ++t) {
        const NetworkGraph f = fillZero(net, RngStream(t));
        const Tensor& w = f.param("c", "weight").tensor;
        for (std::size_t e = 1; e < 9; ++e) ASSERT_EQ(w[e], k[e]);
        m1 += w[0] / double(draws);
        m2 += double(w[0]) * w[0] / double(draws);
    }
    EXPECT_NEAR(m1, mean, 4 * std::sqrt(var / draws));
    EXPECT_NEAR(m2 - m1 * m1, var, 0.1 * var);
}

TEST(FillZero, NonzeroStatisticsVariant) {
    GraphBuilder b(1);
    b.input("x", 1);
    b.conv("c", "x", 1, 1, 3);
    NetworkGraph net = b.finish({"c"});
    const std::vector<float> k = {0, 1, 1, 1, 1, 1, 1, 1, 1};
    std::copy(k.begin(), k.end(), net.param("c", "weight").tensor.data().begin());
    const NetworkGraph f = fillZero(net, RngStream(2), {true});
    const Tensor& w = f.param("c", "weight").tensor;
    EXPECT_EQ(w[0], 1.0f);
}

TEST(FillZero, FullKernelsUnchanged) {
    const NetworkGraph net = buildTinySegNet(4, 2, 1, 3);
    const NetworkGraph f = fillZero(net, RngStream(4));
    for (std::size_t i = 0; i < net.params.size(); ++i) EXPECT_TRUE(f.params[i].tensor.bitEqual(net.params[i].tensor));
    for (std::size_t pi : f.spatialParams()) EXPECT_TRUE(f.params[pi].fixed);
}
