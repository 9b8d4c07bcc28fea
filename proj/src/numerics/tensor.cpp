#include "steerlab/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "steerlab/numerics/errors.hpp"

namespace steerlab {

std::size_t shapeVolume(const Shape& shape) {
    std::size_t volume = 1;
    for (std::size_t d : shape) volume *= d;
    return volume;
}

std::string shapeString(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)), data_(shapeVolume(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (shapeVolume(shape_) != data_.size()) {
        throw DimensionError("Tensor: shape " + shapeString(shape_) + " does not match " +
                             std::to_string(data_.size()) + " values");
    }
}

Tensor Tensor::fromValues(std::initializer_list<float> values) {
    return Tensor({values.size()}, std::vector<float>(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) throw DimensionError("Tensor::dim: axis out of range");
    return shape_[axis];
}

float& Tensor::at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
float Tensor::at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

float& Tensor::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}
float Tensor::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shapeVolume(shape) != data_.size()) {
        throw DimensionError("Tensor::reshaped: " + shapeString(shape_) + " -> " + shapeString(shape));
    }
    return Tensor(std::move(shape), data_);
}

Tensor Tensor::slice(std::size_t begin, std::size_t end) const {
    if (shape_.empty() || begin > end || end > shape_[0]) throw DimensionError("Tensor::slice: bad range");
    const std::size_t inner = shape_[0] ? data_.size() / shape_[0] : 0;
    Shape shape = shape_;
    shape[0] = end - begin;
    return Tensor(std::move(shape), std::vector<float>(data_.begin() + static_cast<std::ptrdiff_t>(begin * inner),
                                                       data_.begin() + static_cast<std::ptrdiff_t>(end * inner)));
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::allFinite() const {
    for (float v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

bool Tensor::bitEqual(const Tensor& other) const {
    return shape_ == other.shape_ &&
           (data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0);
}

double maxAbsDiff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError("maxAbsDiff: " + shapeString(a.shape()) + " vs " + shapeString(b.shape()));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(double(a[i]) - double(b[i])));
    return worst;
}

double frobeniusNorm(const Tensor& t) {
    double sum = 0.0;
    for (float v : t.data()) sum += double(v) * double(v);
    return std::sqrt(sum);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: " + shapeString(a.shape()) + " x " + shapeString(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    std::vector<double> row(n);
    for (std::size_t i = 0; i < m; ++i) {
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            const float* brow = b.data().data() + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
        }
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = static_cast<float>(row[j]);
    }
    return out;
}

Tensor transpose2d(const Tensor& a) {
    if (a.rank() != 2) throw DimensionError("transpose2d: expected rank 2, got " + shapeString(a.shape()));
    const std::size_t m = a.dim(0), n = a.dim(1);
    Tensor out({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
    return out;
}

}  // namespace steerlab
