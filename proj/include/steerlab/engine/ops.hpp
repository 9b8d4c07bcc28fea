#pragma once

#include <cstddef>

#include "steerlab/netgraph/graph.hpp"
#include "steerlab/numerics/tensor.hpp"

namespace steerlab::ops {

struct ConvGeometry {
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::size_t groups = 1;
};

std::size_t convOutSize(std::size_t in, std::size_t kernel, const ConvGeometry& g);

/// Cross-correlation, x (N,C,H,W), w (O, C/groups, kh, kw), optional bias (O).
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeometry& g);
/// Any of gx, gw, gb may be null. gx and gw are overwritten, not accumulated.
void conv2dBackward(const Tensor& x, const Tensor& w, const Tensor& gy, const ConvGeometry& g, Tensor* gx, Tensor* gw,
                    Tensor* gb);

struct BatchNormCache {
    Tensor normalized;            // x-hat, same shape as x
    std::vector<double> invStd;  // per channel
    bool training = false;
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// x is (N,C,H,W) or (N,C). In training mode batch statistics are used and,
/// when updateRunning is set, the running statistics move by momentum 0.1
/// toward the batch mean and unbiased batch variance. Eval mode normalizes
/// with the running statistics.
Tensor batchNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& runningMean, Tensor& runningVar,
                 bool training, bool updateRunning, BatchNormCache& cache);
void batchNormBackward(const Tensor& gy, const Tensor& gamma, const BatchNormCache& cache, Tensor* gx, Tensor* ggamma,
                       Tensor* gbeta);

/// x (N, in), w (out, in), optional bias (out).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor* bias);
void linearBackward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor* gx, Tensor* gw, Tensor* gb);

Tensor activation(const Tensor& x, ActivationKind kind);
/// Uses the forward input x (and output y for sigmoid).
Tensor activationBackward(const Tensor& x, const Tensor& y, const Tensor& gy, ActivationKind kind);

/// Bilinear resize by an integer factor with half-pixel centers (align_corners = false).
Tensor bilinearUpsample(const Tensor& x, std::size_t scale);
Tensor bilinearUpsampleBackward(const Tensor& gy, const Shape& inputShape, std::size_t scale);

Tensor globalAvgPool(const Tensor& x);
Tensor globalAvgPoolBackward(const Tensor& gy, const Shape& inputShape);

/// Channel concatenation of (N, C_k, H, W) tensors.
Tensor concat(const std::vector<const Tensor*>& xs);
/// Slice of channels [begin, begin + count) of a concatenated gradient.
Tensor channelSlice(const Tensor& g, std::size_t begin, std::size_t count);

}  // namespace steerlab::ops
