#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "steerlab/filterbank/basis.hpp"

using namespace steerlab;

namespace {

// Direct evaluation of the separable DCT-II basis element, written from the
// closed form rather than via the 1-D matrices.
double closedForm(std::size_t h, std::size_t w, std::size_t kh, std::size_t kw, std::size_t y, std::size_t x) {
    auto s = [](std::size_t k, std::size_t n) { return std::sqrt((k == 0 ? 1.0 : 2.0) / double(n)); };
    return s(kh, h) * s(kw, w) * std::cos(std::numbers::pi * kh * (2.0 * y + 1) / (2.0 * h)) *
           std::cos(std::numbers::pi * kw * (2.0 * x + 1) / (2.0 * w));
}

}  // namespace

TEST(Dct2Basis, OrthonormalForAllSmallShapes) {
    for (std::size_t h = 1; h <= 5; ++h)
        for (std::size_t w = 1; w <= 5; ++w) {
            const Basis b = dct2Basis(h, w);
            const Tensor g = matmul(b.matrix, transpose2d(b.matrix));
            for (std::size_t i = 0; i < b.size(); ++i)
                for (std::size_t j = 0; j < b.size(); ++j)
                    EXPECT_NEAR(g.at(i, j), i == j ? 1.0 : 0.0, 1e-5) << h << "x" << w;
        }
}

TEST(Dct2Basis, MatchesClosedForm) {
    const Basis b = dct2Basis(3, 5);
    for (std::size_t r = 0; r < b.size(); ++r) {
        const auto [kh, kw] = b.factorIndex[r];
        for (std::size_t y = 0; y < 3; ++y)
            for (std::size_t x = 0; x < 5; ++x)
                EXPECT_NEAR(b.matrix.at(r, y * 5 + x), closedForm(3, 5, kh, kw, y, x), 1e-6);
    }
}

TEST(Dct2Basis, TwoByTwoIsHaarUpToScale) {
    const Tensor d = dct1dMatrix(2);
    const double r = std::sqrt(0.5);
    EXPECT_NEAR(d.at(0, 0), r, 1e-7);
    EXPECT_NEAR(d.at(0, 1), r, 1e-7);
    EXPECT_NEAR(d.at(1, 0), r, 1e-7);
    EXPECT_NEAR(d.at(1, 1), -r, 1e-7);

    // a = [1,1], b = [1,-1]; the four 2-D rows are s^2 * {aa^T, ab^T, ba^T, bb^T}.
    const Basis b = dct2Basis(2, 2);
    const float haar[4][4] = {{1, 1, 1, 1}, {1, -1, 1, -1}, {1, 1, -1, -1}, {1, -1, -1, 1}};
    for (std::size_t row = 0; row < 4; ++row)
        for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(b.matrix.at(row, i), 0.5 * haar[row][i], 1e-7);
}

TEST(Dct2Basis, LowestFrequencyIsConstant) {
    const Basis b = dct2Basis(3, 3);
    const Tensor f = b.filter(b.rowsByRank()[0]);
    for (float v : f.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-7);
}

TEST(Dct2Basis, OrderSortsBySumThenRowFrequency) {
    const Basis b = dct2Basis(3, 3);
    const auto rows = b.rowsByRank();
    const std::pair<std::size_t, std::size_t> expected[] = {{0, 0}, {0, 1}, {1, 0}, {0, 2}, {1, 1},
                                                            {2, 0}, {1, 2}, {2, 1}, {2, 2}};
    for (std::size_t r = 0; r < 9; ++r) EXPECT_EQ(b.factorIndex[rows[r]], expected[r]) << r;
    std::set<std::size_t> ranks(b.order.begin(), b.order.end());
    EXPECT_EQ(ranks.size(), 9u);
}
