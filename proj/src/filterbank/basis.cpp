#include "steerlab/filterbank/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "steerlab/numerics/errors.hpp"

namespace steerlab {

Tensor dct1dMatrix(std::size_t n) {
    if (n == 0) throw DomainError("dct1dMatrix: size must be >= 1");
    Tensor out({n, n});
    for (std::size_t k = 0; k < n; ++k) {
        const double s = std::sqrt((k == 0 ? 1.0 : 2.0) / double(n));
        for (std::size_t x = 0; x < n; ++x) {
            out.at(k, x) = static_cast<float>(s * std::cos(std::numbers::pi / double(n) * double(k) * (double(x) + 0.5)));
        }
    }
    return out;
}

Basis dct2Basis(std::size_t h, std::size_t w) {
    if (h == 0 || w == 0) throw DomainError("dct2Basis: kernel sides must be >= 1");
    const Tensor fh = dct1dMatrix(h);
    const Tensor fw = dct1dMatrix(w);
    const std::size_t m = h * w;

    Basis basis;
    basis.h = h;
    basis.w = w;
    basis.matrix = Tensor({m, m});
    basis.factorIndex.reserve(m);
    for (std::size_t kh = 0; kh < h; ++kh) {
        for (std::size_t kw = 0; kw < w; ++kw) {
            const std::size_t row = kh * w + kw;
            basis.factorIndex.emplace_back(kh, kw);
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x)
                    basis.matrix.at(row, y * w + x) =
                        static_cast<float>(double(fh.at(kh, y)) * double(fw.at(kw, x)));
        }
    }

    std::vector<std::size_t> rows(m);
    std::iota(rows.begin(), rows.end(), 0);
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
        const auto [ah, aw] = basis.factorIndex[a];
        const auto [bh, bw] = basis.factorIndex[b];
        if (ah + aw != bh + bw) return ah + aw < bh + bw;
        return ah < bh;
    });
    basis.order.assign(m, 0);
    for (std::size_t rank = 0; rank < m; ++rank) basis.order[rows[rank]] = rank;
    return basis;
}

std::vector<std::size_t> Basis::rowsByRank() const {
    std::vector<std::size_t> rows(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) rows[order[r]] = r;
    return rows;
}

Tensor Basis::filter(std::size_t row) const {
    if (row >= size()) throw DimensionError("Basis::filter: row out of range");
    return matrix.slice(row, row + 1).reshaped({h, w});
}

}  // namespace steerlab
