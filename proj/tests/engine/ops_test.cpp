#include <gtest/gtest.h>

#include <cmath>

#include "steerlab/engine/engine.hpp"
#include "steerlab/engine/ops.hpp"
#include "steerlab/netgraph/architectures.hpp"
#include "steerlab/numerics/errors.hpp"
#include "steerlab/numerics/parallel.hpp"
#include "steerlab/numerics/rng.hpp"
#include "support/oracles.hpp"

using namespace steerlab;

namespace {

Tensor randomTensor(Shape shape, RngStream& rng) {
    Tensor t(std::move(shape));
    for (float& v : t.data()) v = static_cast<float>(rng.normal());
    return t;
}

struct ConvCase {
    std::size_t c, o, h, w, k, stride, pad, groups;
};

}  // namespace

TEST(Conv2d, OneByOneIdentity) {
    const Tensor x({1, 1, 1, 1}, {3.5f});
    const Tensor w({1, 1, 1, 1}, {1.0f});
    EXPECT_TRUE(ops::conv2d(x, w, nullptr, {}).bitEqual(x));
}

TEST(Conv2d, MatchesNestedLoopOracle) {
    RngStream rng(7);
    const ConvCase cases[] = {{1, 1, 5, 5, 3, 1, 1, 1}, {3, 4, 7, 6, 3, 2, 1, 1}, {4, 6, 8, 8, 3, 1, 1, 2},
                              {6, 6, 9, 9, 3, 1, 1, 6}, {2, 3, 6, 7, 5, 1, 2, 1}, {2, 2, 5, 5, 2, 2, 0, 1},
                              {4, 8, 4, 4, 1, 1, 0, 1}, {3, 3, 3, 3, 3, 3, 0, 3}};
    for (const ConvCase& cc : cases) {
        const Tensor x = randomTensor({2, cc.c, cc.h, cc.w}, rng);
        const Tensor w = randomTensor({cc.o, cc.c / cc.groups, cc.k, cc.k}, rng);
        const Tensor y = ops::conv2d(x, w, nullptr, {cc.stride, cc.pad, cc.groups});
        for (std::size_t n = 0; n < 2; ++n) {
            const auto plane = x.slice(n, n + 1);
            std::size_t oh, ow;
            const auto ref = oracle::bruteForceConv(plane.values(), cc.c, cc.h, cc.w, w.values(), cc.o, cc.k, cc.k,
                                                    cc.stride, cc.pad, cc.groups, oh, ow);
            ASSERT_EQ(y.shape(), (Shape{2, cc.o, oh, ow}));
            for (std::size_t i = 0; i < ref.size(); ++i)
                EXPECT_NEAR(y[n * ref.size() + i], ref[i], 1e-4 * (1 + std::abs(ref[i])));
        }
    }
}

TEST(Conv2d, ThreadCountDoesNotChangeBits) {
    RngStream rng(77);
    Tensor x({3, 4, 9, 9}), w({6, 2, 3, 3});
    for (float& v : x.data()) v = static_cast<float>(rng.normal());
    for (float& v : w.data()) v = static_cast<float>(rng.normal());
    const ops::ConvGeometry g{2, 1, 2};
    const Tensor one = ops::conv2d(x, w, nullptr, g);
    setThreadCount(3);
    const Tensor three = ops::conv2d(x, w, nullptr, g);
    setThreadCount(1);
    EXPECT_TRUE(one.bitEqual(three));
    EXPECT_THROW(setThreadCount(0), ConfigError);
}

TEST(Conv2d, FiveByFivePaddedKeepsSize) {
    RngStream rng(1);
    const Tensor y = ops::conv2d(randomTensor({1, 1, 5, 5}, rng), randomTensor({1, 1, 3, 3}, rng), nullptr, {1, 1, 1});
    EXPECT_EQ(y.shape(), (Shape{1, 1, 5, 5}));
}

TEST(Conv2d, BiasAndErrors) {
    const Tensor x({1, 2, 3, 3}, 0.0f);
    const Tensor w({3, 2, 1, 1}, 1.0f);
    const Tensor b({3}, {1.0f, 2.0f, 3.0f});
    const Tensor y = ops::conv2d(x, w, &b, {});
    EXPECT_EQ(y.at(0, 2, 1, 1), 3.0f);
    EXPECT_THROW(ops::conv2d(x, Tensor({3, 3, 1, 1}), nullptr, {}), DimensionError);
    EXPECT_THROW(ops::conv2d(x, Tensor({3, 2, 7, 7}), nullptr, {}), DimensionError);
}

TEST(Conv2d, SteerabilityIdentity) {
    RngStream rng(11);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor x = randomTensor({1, 1, 9, 9}, rng);
        const Tensor f = randomTensor({1, 1, 3, 3}, rng);
        const double norm = frobeniusNorm(f);
        Tensor unit = f;
        for (float& v : unit.data()) v = static_cast<float>(v / norm);
        const Tensor direct = ops::conv2d(x, f, nullptr, {1, 1, 1});
        Tensor steered = ops::conv2d(x, unit, nullptr, {1, 1, 1});
        for (float& v : steered.data()) v = static_cast<float>(v * norm);
        double scale = 0;
        for (float v : direct.data()) scale = std::max(scale, double(std::abs(v)));
        worst = std::max(worst, maxAbsDiff(direct, steered) / scale);
    }
    EXPECT_LT(worst, 1e-5);
}

TEST(BilinearUpsample, HalfPixelWeights) {
    const Tensor x({1, 1, 1, 2}, {0.0f, 1.0f});
    const Tensor y = ops::bilinearUpsample(x, 2);
    ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 4}));
    const float expect[4] = {0.0f, 0.25f, 0.75f, 1.0f};
    for (int i = 0; i < 4; ++i) {
        EXPECT_FLOAT_EQ(y[i], expect[i]);
        EXPECT_FLOAT_EQ(y[4 + i], expect[i]);
    }
}

TEST(BilinearUpsample, ConstantPreserved) {
    const Tensor y = ops::bilinearUpsample(Tensor({2, 3, 4, 5}, 2.5f), 2);
    for (float v : y.data()) EXPECT_FLOAT_EQ(v, 2.5f);
}

TEST(BatchNorm, TrainingNormalizesAndUpdatesRunningStats) {
    Tensor x({4, 1, 1, 1}, {1.0f, 2.0f, 3.0f, 4.0f});
    Tensor gamma({1}, 1.0f), beta({1}, 0.0f), rm({1}, 0.0f), rv({1}, 1.0f);
    ops::BatchNormCache cache;
    const Tensor y = ops::batchNorm(x, gamma, beta, rm, rv, true, true, cache);
    double s = 0;
    for (float v : y.data()) s += v;
    EXPECT_NEAR(s, 0.0, 1e-6);
    EXPECT_NEAR(rm[0], 0.25, 1e-6);
    EXPECT_NEAR(rv[0], 0.9 + 0.1 * (5.0 / 3.0), 1e-6);
    const Tensor e = ops::batchNorm(x, gamma, beta, rm, rv, false, false, cache);
    EXPECT_NEAR(e[0], (1.0 - 0.25) / std::sqrt(rv[0] + 1e-5), 1e-6);
}

TEST(Engine, LinearSumGradientIsInputBroadcast) {
    GraphBuilder b(3);
    auto x = b.input("in", 3);
    x = b.globalAvgPool("pool", x);
    x = b.linear("fc", x, 3, 2, false);
    NetworkGraph net = b.finish({x});
    Engine e(net);
    const Tensor in({1, 3, 1, 1}, {1.0f, -2.0f, 0.5f});
    e.forward(in);
    const GradientTape tape = e.backward(Tensor({1, 2}, 1.0f));
    const Tensor& gw = tape.params[0];
    for (std::size_t o = 0; o < 2; ++o)
        for (std::size_t i = 0; i < 3; ++i) EXPECT_FLOAT_EQ(gw.at(o, i), in[i]);
}

TEST(Engine, BackwardBeforeForwardFails) {
    NetworkGraph net = buildTinySegNet(2, 1);
    Engine e(net);
    EXPECT_THROW(e.backward(Tensor({1, 1, 4, 4})), DomainError);
}

TEST(Engine, InputShapeMismatch) {
    NetworkGraph net = buildTinySegNet(2, 1);
    Engine e(net);
    EXPECT_THROW(e.forward(Tensor({1, 3, 4, 4})), DimensionError);
}

TEST(Engine, FixedParamsStillReceiveGradients) {
    NetworkGraph net = buildTinySegNet(2, 2);
    for (std::size_t i : net.spatialParams()) net.params[i].fixed = true;
    Engine e(net);
    RngStream rng(2);
    e.forward(randomTensor({2, 1, 6, 6}, rng));
    const GradientTape all = e.backward(Tensor({2, 1, 6, 6}, 1.0f));
    for (std::size_t i : net.spatialParams()) EXPECT_TRUE(all.has(i));
    const GradientTape trainable = e.backward(Tensor({2, 1, 6, 6}, 1.0f), Engine::trainableMask(net));
    for (std::size_t i : net.spatialParams()) EXPECT_FALSE(trainable.has(i));
}

TEST(Engine, PartialGradientMatchesFull) {
    NetworkGraph net = buildTinyResNet(1, 4, 2, 3, 5);
    Engine e(net);
    RngStream rng(4);
    e.forward(randomTensor({2, 2, 8, 8}, rng), {true, false});
    const Tensor gy = randomTensor({2, 3}, rng);
    const GradientTape full = e.backward(gy);
    std::vector<bool> want(net.params.size(), false);
    const std::size_t pick = net.spatialParams().back();
    want[pick] = true;
    const GradientTape partial = e.backward(gy, want);
    EXPECT_TRUE(partial.params[pick].bitEqual(full.params[pick]));
    for (std::size_t i = 0; i < want.size(); ++i)
        if (i != pick) {
            EXPECT_FALSE(partial.has(i));
        }
}

TEST(Predict, ChunkingDoesNotChangeOutputs) {
    NetworkGraph net = buildTinySegNet(3, 2);
    RngStream rng(9);
    const Tensor x = randomTensor({5, 1, 8, 8}, rng);
    EXPECT_LT(maxAbsDiff(predict(net, x, 2), predict(net, x, 5)), 1e-6);
}
