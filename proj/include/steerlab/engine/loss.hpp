#pragma once

#include <vector>

#include "steerlab/numerics/tensor.hpp"

namespace steerlab {

struct LossResult {
    double value = 0.0;
    /// d(value)/d(input), same shape as the loss input.
    Tensor grad;
};

/// Positive and negative label counts per task.
struct ClassCounts {
    std::vector<double> pos;
    std::vector<double> neg;
};

struct FocalWeights {
    std::vector<double> aPos;
    std::vector<double> aNeg;
    std::vector<double> task;
};

/// a_pos = 1/(1 + c_pos/c_neg), a_neg = 1/(1 + c_neg/c_pos),
/// w_t = 1/(1 + c_t * sum_{i != t} 1/c_i) with c_t = pos_t + neg_t.
/// Throws DomainError when any count is zero or negative.
FocalWeights focalWeights(const ClassCounts& counts);

struct FocalConfig {
    double gamma = 1.0;
    /// Force a_pos = a_neg = w_task = 1.
    bool unitWeights = false;
};

inline constexpr double kSigmoidScale = 0.99999;
inline constexpr double kSigmoidShift = 0.000005;

/// Rescaled sigmoid 0.99999 * sigmoid(z) + 0.000005.
double rescaledSigmoid(double z);

/// Multi-label focal BCE on logits (N, T). Masked entries (mask == 0) add
/// nothing. Per-row losses are summed across tasks, then averaged over rows.
LossResult focalMultiLabelBCE(const Tensor& logits, const Tensor& targets, const Tensor* mask,
                              const ClassCounts& counts, const FocalConfig& config = {});

/// Mean pixel-wise BCE on probabilities. Gradient is with respect to the
/// probabilities; log arguments are clamped at 1e-12.
LossResult pixelwiseBCE(const Tensor& probs, const Tensor& targets);
/// Mean pixel-wise BCE on logits, computed stably. Gradient is with respect to the logits.
LossResult pixelwiseBCEWithLogits(const Tensor& logits, const Tensor& targets);

}  // namespace steerlab
