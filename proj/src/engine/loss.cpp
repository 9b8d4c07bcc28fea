#include "steerlab/engine/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "steerlab/numerics/errors.hpp"

namespace steerlab {

FocalWeights focalWeights(const ClassCounts& counts) {
    const std::size_t t = counts.pos.size();
    if (counts.neg.size() != t || t == 0) throw DimensionError("focalWeights: pos/neg count vectors differ or are empty");
    FocalWeights w;
    std::vector<double> total(t);
    for (std::size_t i = 0; i < t; ++i) {
        if (!(counts.pos[i] > 0) || !(counts.neg[i] > 0))
            throw DomainError("focalWeights: task " + std::to_string(i) + " has a zero class count");
        w.aPos.push_back(1.0 / (1.0 + counts.pos[i] / counts.neg[i]));
        w.aNeg.push_back(1.0 / (1.0 + counts.neg[i] / counts.pos[i]));
        total[i] = counts.pos[i] + counts.neg[i];
    }
    for (std::size_t i = 0; i < t; ++i) {
        double inv = 0;
        for (std::size_t j = 0; j < t; ++j)
            if (j != i) inv += 1.0 / total[j];
        w.task.push_back(1.0 / (1.0 + total[i] * inv));
    }
    return w;
}

double rescaledSigmoid(double z) { return kSigmoidScale / (1.0 + std::exp(-z)) + kSigmoidShift; }

LossResult focalMultiLabelBCE(const Tensor& logits, const Tensor& targets, const Tensor* mask,
                              const ClassCounts& counts, const FocalConfig& config) {
    if (logits.rank() != 2 || targets.shape() != logits.shape() || (mask && mask->shape() != logits.shape()))
        throw DimensionError("focalMultiLabelBCE: logits, targets and mask must share an (N,T) shape");
    const std::size_t n = logits.dim(0), t = logits.dim(1);
    FocalWeights fw;
    if (config.unitWeights) {
        fw = {std::vector<double>(t, 1.0), std::vector<double>(t, 1.0), std::vector<double>(t, 1.0)};
    } else {
        fw = focalWeights(counts);
        if (fw.task.size() != t) throw DimensionError("focalMultiLabelBCE: class counts do not match task count");
    }
    const double g = config.gamma;
    LossResult r;
    r.grad = Tensor(logits.shape());
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < t; ++k) {
            const std::size_t idx = i * t + k;
            const double m = mask ? (*mask)[idx] : 1.0;
            if (m == 0.0) continue;
            const double y = targets[idx];
            const double s = 1.0 / (1.0 + std::exp(-double(logits[idx])));
            const double p = kSigmoidScale * s + kSigmoidShift;
            const double lp = std::log(p), lq = std::log(1.0 - p);
            const double pos = fw.aPos[k] * std::pow(1.0 - p, g) * y * lp;
            const double neg = fw.aNeg[k] * std::pow(p, g) * (1.0 - y) * lq;
            const double scale = m * fw.task[k];
            total += -scale * (pos + neg);
            const double dpos = fw.aPos[k] * y * (-g * std::pow(1.0 - p, g - 1.0) * lp + std::pow(1.0 - p, g) / p);
            const double dneg = fw.aNeg[k] * (1.0 - y) * (g * std::pow(p, g - 1.0) * lq - std::pow(p, g) / (1.0 - p));
            const double dp = -scale * (dpos + dneg);
            r.grad[idx] = static_cast<float>(dp * kSigmoidScale * s * (1.0 - s) / double(n));
        }
    }
    r.value = total / double(n);
    return r;
}

LossResult pixelwiseBCE(const Tensor& probs, const Tensor& targets) {
    if (probs.shape() != targets.shape()) throw DimensionError("pixelwiseBCE: shape mismatch");
    constexpr double kFloor = 1e-12;
    const double count = double(probs.size());
    LossResult r;
    r.grad = Tensor(probs.shape());
    double total = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i], y = targets[i];
        const double a = std::max(p, kFloor), b = std::max(1.0 - p, kFloor);
        total -= y * std::log(a) + (1.0 - y) * std::log(b);
        r.grad[i] = static_cast<float>((-y / a + (1.0 - y) / b) / count);
    }
    r.value = total / count;
    return r;
}

LossResult pixelwiseBCEWithLogits(const Tensor& logits, const Tensor& targets) {
    if (logits.shape() != targets.shape()) throw DimensionError("pixelwiseBCEWithLogits: shape mismatch");
    const double count = double(logits.size());
    LossResult r;
    r.grad = Tensor(logits.shape());
    double total = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i], y = targets[i];
        total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        const double s = 1.0 / (1.0 + std::exp(-z));
        r.grad[i] = static_cast<float>((s - y) / count);
    }
    r.value = total / count;
    return r;
}

}  // namespace steerlab
