#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "steerlab/numerics/tensor.hpp"

namespace steerlab {

/// Orthonormal 1-D DCT-II matrix, row k holds s_k * cos(pi/n * k * (x + 0.5)).
Tensor dct1dMatrix(std::size_t n);

/**
 * Flattened 2-D DCT-II basis for h x w kernels.
 *
 * Row r of `matrix` is the row-major flattening of the outer product of the
 * 1-D factors named by factorIndex[r] = (kh, kw). Rows are stored in natural
 * (kh, kw) order; `order[r]` gives the frequency rank of row r, sorting by
 * kh + kw and then by kh.
 */
struct Basis {
    std::size_t h = 0;
    std::size_t w = 0;
    Tensor matrix;  // (h*w, h*w)
    std::vector<std::size_t> order;
    std::vector<std::pair<std::size_t, std::size_t>> factorIndex;

    std::size_t size() const noexcept { return h * w; }
    /// Inverse of `order`: row index holding frequency rank r.
    std::vector<std::size_t> rowsByRank() const;
    /// Basis row r reshaped to (h, w).
    Tensor filter(std::size_t row) const;
};

Basis dct2Basis(std::size_t h, std::size_t w);

}  // namespace steerlab
