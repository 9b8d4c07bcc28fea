#include "steerlab/engine/optim.hpp"

#include <cmath>

#include "steerlab/numerics/errors.hpp"

namespace steerlab {

Adam::Adam(const NetworkGraph& net, AdamConfig config) : config_(config) {
    if (!(config.lr >= 0) || !(config.beta1 >= 0 && config.beta1 < 1) || !(config.beta2 >= 0 && config.beta2 < 1) ||
        !(config.eps > 0))
        throw ConfigError("Adam: invalid hyperparameters");
    m_.resize(net.params.size());
    v_.resize(net.params.size());
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        if (net.params[i].fixed || net.params[i].buffer) continue;
        m_[i].assign(net.params[i].tensor.size(), 0.0f);
        v_[i].assign(net.params[i].tensor.size(), 0.0f);
    }
}

void Adam::step(NetworkGraph& net, const GradientTape& tape) {
    if (net.params.size() != m_.size()) throw DimensionError("Adam: graph changed since construction");
    ++t_;
    if (config_.lr == 0.0) return;
    const double c1 = 1.0 - std::pow(config_.beta1, double(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, double(t_));
    const float b1 = float(config_.beta1), b2 = float(config_.beta2);
    const float stepSize = float(config_.lr / c1);
    const float invC2 = float(1.0 / c2), eps = float(config_.eps);
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        ParamTensor& p = net.params[i];
        if (p.fixed || p.buffer || !tape.has(i)) continue;
        const Tensor& g = tape.params[i];
        if (g.size() != p.tensor.size()) throw DimensionError("Adam: gradient size differs for " + p.owner + "." + p.name);
        float* w = p.tensor.data().data();
        float* m = m_[i].data();
        float* v = v_[i].data();
        for (std::size_t k = 0; k < g.size(); ++k) {
            m[k] = b1 * m[k] + (1.0f - b1) * g[k];
            v[k] = b2 * v[k] + (1.0f - b2) * g[k] * g[k];
            w[k] -= stepSize * m[k] / (std::sqrt(v[k] * invC2) + eps);
        }
    }
}

}  // namespace steerlab
