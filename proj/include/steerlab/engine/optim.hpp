#pragma once

#include <vector>

#include "steerlab/engine/engine.hpp"

namespace steerlab {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam over the trainable params of a graph. Fixed params and buffers are
/// never written, whatever the tape holds for them.
class Adam {
public:
    Adam(const NetworkGraph& net, AdamConfig config);

    void step(NetworkGraph& net, const GradientTape& tape);
    std::size_t steps() const { return t_; }
    const AdamConfig& config() const { return config_; }

private:
    AdamConfig config_;
    std::vector<std::vector<float>> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace steerlab
