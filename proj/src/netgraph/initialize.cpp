#include "steerlab/netgraph/initialize.hpp"

#include <map>

#include "steerlab/numerics/errors.hpp"

namespace steerlab {

Tensor layerKernels(const ParamTensor& p) {
    const Shape& s = p.tensor.shape();
    if (s.size() != 4) throw DimensionError("layerKernels: " + p.owner + "/" + p.name + " is not a conv kernel");
    return p.tensor.reshaped({s[0] * s[1], s[2], s[3]});
}

namespace {

void assign(ParamTensor& p, const Tensor& kernels) {
    if (kernels.size() != p.tensor.size()) {
        throw DimensionError("initializer produced " + shapeString(kernels.shape()) + " for " + p.owner + "/" + p.name +
                             " of shape " + shapeString(p.tensor.shape()));
    }
    p.tensor = kernels.reshaped(p.tensor.shape());
    p.fixed = true;
}

std::size_t fanInOf(const ParamTensor& p) {
    const Shape& s = p.tensor.shape();
    return s[1] * s[2] * s[3];
}

}  // namespace

NetworkGraph applyInitializer(const NetworkGraph& net, const std::vector<FilterSpec>& specs) {
    NetworkGraph out = net;
    const auto spatial = out.spatialParams();
    if (specs.size() != spatial.size()) {
        throw DimensionError("applyInitializer: " + std::to_string(specs.size()) + " specs for " +
                             std::to_string(spatial.size()) + " spatial layers");
    }
    for (std::size_t l = 0; l < spatial.size(); ++l) {
        ParamTensor& p = out.params[spatial[l]];
        const FilterSpec& spec = specs[l];
        const Shape& s = p.tensor.shape();
        if (spec.method == InitMethod::GuidedSteer) throw ConfigError("applyInitializer: use initializeSpatial for GuidedSteer");
        if (spec.h != s[2] || spec.w != s[3] || spec.count != s[0] * s[1]) {
            throw DimensionError("applyInitializer: spec for " + p.owner + " does not match kernel shape " +
                                 shapeString(s));
        }
        assign(p, generateFilters(spec));
    }
    return out;
}

NetworkGraph initializeSpatial(const NetworkGraph& net, const InitOptions& options) {
    const auto spatial = net.spatialParams();
    std::vector<const ParamTensor*> guideParams;
    if (requiresGuide(options.method)) {
        if (!options.guide) throw ConfigError(toString(options.method) + " requires a guide network");
        for (std::size_t i : options.guide->spatialParams()) guideParams.push_back(&options.guide->params[i]);
        if (guideParams.size() != spatial.size()) throw DimensionError("guide network has a different spatial layer count");
        for (std::size_t l = 0; l < spatial.size(); ++l)
            if (guideParams[l]->tensor.shape() != net.params[spatial[l]].tensor.shape())
                throw DimensionError("guide layer " + guideParams[l]->owner + " has a different shape");
    }

    if (options.method == InitMethod::GuidedSteer) {
        NetworkGraph out = net;
        const RngStream master(options.seed);
        std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> groups;
        for (std::size_t l = 0; l < spatial.size(); ++l) {
            const Shape& s = net.params[spatial[l]].tensor.shape();
            groups[{s[2], s[3]}].push_back(l);
        }
        std::size_t groupIndex = 0;
        for (const auto& [size, layers] : groups) {
            std::vector<std::size_t> counts;
            std::vector<Tensor> guides;
            for (std::size_t l : layers) {
                const Shape& s = net.params[spatial[l]].tensor.shape();
                counts.push_back(s[0] * s[1]);
                guides.push_back(layerKernels(*guideParams[l]));
            }
            const auto generated = guidedSteerFilters(counts, guides, master.derive(groupIndex++), options.guided);
            for (std::size_t k = 0; k < layers.size(); ++k) assign(out.params[spatial[layers[k]]], generated[k]);
        }
        return out;
    }

    std::vector<FilterSpec> specs;
    for (std::size_t l = 0; l < spatial.size(); ++l) {
        const ParamTensor& p = net.params[spatial[l]];
        const Shape& s = p.tensor.shape();
        FilterSpec spec;
        spec.method = options.method;
        spec.count = s[0] * s[1];
        spec.h = s[2];
        spec.w = s[3];
        spec.seed = RngStream(options.seed).derive(l).seed();
        spec.fanIn = fanInOf(p);
        if (options.method == InitMethod::UnchangedGuide) spec.guide = layerKernels(*guideParams[l]);
        specs.push_back(std::move(spec));
    }
    return applyInitializer(net, specs);
}

NetworkGraph markSpatialFixed(const NetworkGraph& net, bool fixed) {
    NetworkGraph out = net;
    for (auto& p : out.params)
        if (p.spatial) p.fixed = fixed;
    return out;
}

}  // namespace steerlab
