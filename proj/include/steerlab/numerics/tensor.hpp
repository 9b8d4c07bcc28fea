#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace steerlab {

using Shape = std::vector<std::size_t>;

std::size_t shapeVolume(const Shape& shape);
std::string shapeString(const Shape& shape);

/**
 * Dense row-major float tensor.
 *
 * The universal numeric carrier: filter banks, activations, gradients and
 * parameter storage all use it. Storage is contiguous, so a tensor can be
 * viewed as a span of floats or reinterpreted with reshaped().
 */
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> values);

    static Tensor fromValues(std::initializer_list<float> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    const std::vector<float>& values() const noexcept { return data_; }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    float& at(std::size_t i, std::size_t j);
    float at(std::size_t i, std::size_t j) const;
    float& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w);
    float at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;

    /// Copy with a new shape of equal volume.
    Tensor reshaped(Shape shape) const;
    /// Rows [begin, end) of the leading axis.
    Tensor slice(std::size_t begin, std::size_t end) const;

    void fill(float value);
    bool allFinite() const;

    /// Element-by-element bitwise comparison (distinguishes -0.0 from 0.0).
    bool bitEqual(const Tensor& other) const;

private:
    Shape shape_;
    std::vector<float> data_;
};

double maxAbsDiff(const Tensor& a, const Tensor& b);
double frobeniusNorm(const Tensor& t);

/// (m x k) * (k x n) with double accumulation.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose2d(const Tensor& a);

}  // namespace steerlab
