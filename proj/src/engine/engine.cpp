#include "steerlab/engine/engine.hpp"

#include <algorithm>
#include <map>

#include "steerlab/numerics/errors.hpp"

namespace steerlab {

namespace {

ops::ConvGeometry geometry(const LayerAttrs& a) { return {a.stride, a.padding, a.groups}; }

void accumulate(Tensor& into, bool& present, Tensor&& g) {
    if (!present) {
        into = std::move(g);
        present = true;
        return;
    }
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += g[i];
}

}  // namespace

Engine::Engine(NetworkGraph& net) : net_(net) {
    requireValidGraph(net_);
    if (net_.inputs.size() != 1 || net_.outputs.size() != 1)
        throw DimensionError("Engine: expected exactly one input and one output");
    std::map<std::string, std::size_t> slotOf;
    std::map<std::pair<std::string, std::string>, std::size_t> paramIndex;
    for (std::size_t i = 0; i < net_.params.size(); ++i) paramIndex[{net_.params[i].owner, net_.params[i].name}] = i;
    for (std::size_t idx : net_.topologicalOrder()) {
        const LayerNode& n = net_.nodes[idx];
        Slot s;
        s.node = &n;
        for (const auto& in : n.inputs) s.inputs.push_back(slotOf.at(in));
        for (const ParamDecl& d : declaredParams(n)) {
            auto it = paramIndex.find({n.id, d.name});
            s.params.push_back(it == paramIndex.end() ? -1 : long(it->second));
        }
        slotOf[n.id] = slots_.size();
        slots_.push_back(std::move(s));
    }
    inputSlot_ = slotOf.at(net_.inputs[0]);
    outputSlot_ = slotOf.at(net_.outputs[0]);
    values_.resize(slots_.size());
}

const Tensor& Engine::paramTensor(const Slot& s, std::size_t k) const {
    return net_.params[std::size_t(s.params.at(k))].tensor;
}

const Tensor& Engine::forward(const Tensor& input, const ForwardOptions& options) {
    for (std::size_t si = 0; si < slots_.size(); ++si) {
        Slot& s = slots_[si];
        const LayerNode& n = *s.node;
        const LayerAttrs& a = n.attrs;
        auto in = [&](std::size_t k) -> const Tensor& { return values_[s.inputs[k]]; };
        Tensor& out = values_[si];
        switch (n.kind) {
            case LayerKind::Input:
                if (input.rank() != 4 || input.dim(1) != a.outChannels)
                    throw DimensionError("forward: input " + shapeString(input.shape()) + " does not match " +
                                         std::to_string(a.outChannels) + " channels");
                out = input;
                break;
            case LayerKind::Conv2d:
            case LayerKind::PointwiseConv:
                out = ops::conv2d(in(0), paramTensor(s, 0), a.bias ? &paramTensor(s, 1) : nullptr, geometry(a));
                break;
            case LayerKind::BatchNorm: {
                Tensor& rm = net_.params[std::size_t(s.params[2])].tensor;
                Tensor& rv = net_.params[std::size_t(s.params[3])].tensor;
                out = ops::batchNorm(in(0), paramTensor(s, 0), paramTensor(s, 1), rm, rv, options.training,
                                     options.training && options.updateRunningStats, s.bn);
                break;
            }
            case LayerKind::Linear:
                out = ops::linear(in(0), paramTensor(s, 0), a.bias ? &paramTensor(s, 1) : nullptr);
                break;
            case LayerKind::Activation:
                out = ops::activation(in(0), a.activation);
                break;
            case LayerKind::Add: {
                out = in(0);
                for (std::size_t k = 1; k < s.inputs.size(); ++k) {
                    const Tensor& t = in(k);
                    if (t.shape() != out.shape()) throw DimensionError("add: operand shapes differ");
                    for (std::size_t i = 0; i < out.size(); ++i) out[i] += t[i];
                }
                break;
            }
            case LayerKind::ScalarFusion: {
                const Tensor& sc = paramTensor(s, 0);
                out = Tensor(in(0).shape());
                for (std::size_t k = 0; k < s.inputs.size(); ++k) {
                    const Tensor& t = in(k);
                    if (t.shape() != out.shape()) throw DimensionError("scalarFusion: operand shapes differ");
                    const float w = sc[k];
                    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * t[i];
                }
                break;
            }
            case LayerKind::Concat: {
                std::vector<const Tensor*> xs;
                for (std::size_t k = 0; k < s.inputs.size(); ++k) xs.push_back(&in(k));
                out = ops::concat(xs);
                break;
            }
            case LayerKind::BilinearUpsample:
                out = ops::bilinearUpsample(in(0), a.scale);
                break;
            case LayerKind::GlobalAvgPool:
                out = ops::globalAvgPool(in(0));
                break;
        }
    }
    haveForward_ = true;
    return values_[outputSlot_];
}

std::vector<bool> Engine::trainableMask(const NetworkGraph& net) {
    std::vector<bool> m(net.params.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = !net.params[i].fixed && !net.params[i].buffer;
    return m;
}

GradientTape Engine::backward(const Tensor& gradOutput, std::vector<bool> wantParam, bool wantInput) {
    if (!haveForward_) throw DomainError("backward: called before forward");
    if (gradOutput.shape() != values_[outputSlot_].shape())
        throw DimensionError("backward: gradient shape " + shapeString(gradOutput.shape()) + " does not match output " +
                             shapeString(values_[outputSlot_].shape()));
    if (wantParam.empty()) {
        wantParam.assign(net_.params.size(), false);
        for (std::size_t i = 0; i < wantParam.size(); ++i) wantParam[i] = !net_.params[i].buffer;
    }
    if (wantParam.size() != net_.params.size()) throw DimensionError("backward: mask size differs from param count");

    // needs[v]: some requested gradient lies at or upstream of v.
    std::vector<bool> needs(slots_.size(), false);
    for (std::size_t si = 0; si < slots_.size(); ++si) {
        const Slot& s = slots_[si];
        bool v = si == inputSlot_ && wantInput;
        for (long p : s.params) v = v || (p >= 0 && wantParam[std::size_t(p)]);
        for (std::size_t u : s.inputs) v = v || needs[u];
        needs[si] = v;
    }

    GradientTape tape;
    tape.params.resize(net_.params.size());
    std::vector<Tensor> grads(slots_.size());
    std::vector<bool> present(slots_.size(), false);
    grads[outputSlot_] = gradOutput;
    present[outputSlot_] = true;

    auto wants = [&](const Slot& s, std::size_t k) {
        return k < s.params.size() && s.params[k] >= 0 && wantParam[std::size_t(s.params[k])];
    };
    auto store = [&](const Slot& s, std::size_t k, Tensor&& g) { tape.params[std::size_t(s.params[k])] = std::move(g); };

    for (std::size_t si = slots_.size(); si-- > 0;) {
        if (!present[si] || !needs[si]) continue;
        const Slot& s = slots_[si];
        const LayerNode& n = *s.node;
        const LayerAttrs& a = n.attrs;
        const Tensor& gy = grads[si];
        auto in = [&](std::size_t k) -> const Tensor& { return values_[s.inputs[k]]; };
        auto needIn = [&](std::size_t k) { return needs[s.inputs[k]]; };
        auto push = [&](std::size_t k, Tensor&& g) {
            const std::size_t u = s.inputs[k];
            bool p = present[u];
            accumulate(grads[u], p, std::move(g));
            present[u] = p;
        };

        switch (n.kind) {
            case LayerKind::Input:
                if (wantInput) tape.input = gy;
                break;
            case LayerKind::Conv2d:
            case LayerKind::PointwiseConv: {
                Tensor gx, gw, gb;
                const bool wx = needIn(0), ww = wants(s, 0), wb = a.bias && wants(s, 1);
                if (!wx && !ww && !wb) break;
                ops::conv2dBackward(in(0), paramTensor(s, 0), gy, geometry(a), wx ? &gx : nullptr, ww ? &gw : nullptr,
                                    wb ? &gb : nullptr);
                if (ww) store(s, 0, std::move(gw));
                if (wb) store(s, 1, std::move(gb));
                if (wx) push(0, std::move(gx));
                break;
            }
            case LayerKind::BatchNorm: {
                Tensor gx, gg, gb;
                const bool wx = needIn(0), wg = wants(s, 0), wb = wants(s, 1);
                ops::batchNormBackward(gy, paramTensor(s, 0), s.bn, wx ? &gx : nullptr, wg ? &gg : nullptr,
                                       wb ? &gb : nullptr);
                if (wg) store(s, 0, std::move(gg));
                if (wb) store(s, 1, std::move(gb));
                if (wx) push(0, std::move(gx));
                break;
            }
            case LayerKind::Linear: {
                Tensor gx, gw, gb;
                const bool wx = needIn(0), ww = wants(s, 0), wb = a.bias && wants(s, 1);
                ops::linearBackward(in(0), paramTensor(s, 0), gy, wx ? &gx : nullptr, ww ? &gw : nullptr,
                                    wb ? &gb : nullptr);
                if (ww) store(s, 0, std::move(gw));
                if (wb) store(s, 1, std::move(gb));
                if (wx) push(0, std::move(gx));
                break;
            }
            case LayerKind::Activation:
                if (needIn(0)) push(0, ops::activationBackward(in(0), values_[si], gy, a.activation));
                break;
            case LayerKind::Add:
                for (std::size_t k = 0; k < s.inputs.size(); ++k)
                    if (needIn(k)) push(k, Tensor(gy));
                break;
            case LayerKind::ScalarFusion: {
                const Tensor& sc = paramTensor(s, 0);
                if (wants(s, 0)) {
                    Tensor gs(sc.shape());
                    for (std::size_t k = 0; k < s.inputs.size(); ++k) {
                        double acc = 0;
                        const Tensor& x = in(k);
                        for (std::size_t i = 0; i < x.size(); ++i) acc += double(gy[i]) * x[i];
                        gs[k] = static_cast<float>(acc);
                    }
                    store(s, 0, std::move(gs));
                }
                for (std::size_t k = 0; k < s.inputs.size(); ++k) {
                    if (!needIn(k)) continue;
                    Tensor g(gy.shape());
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] = sc[k] * gy[i];
                    push(k, std::move(g));
                }
                break;
            }
            case LayerKind::Concat: {
                std::size_t begin = 0;
                for (std::size_t k = 0; k < s.inputs.size(); ++k) {
                    const std::size_t c = in(k).dim(1);
                    if (needIn(k)) push(k, ops::channelSlice(gy, begin, c));
                    begin += c;
                }
                break;
            }
            case LayerKind::BilinearUpsample:
                if (needIn(0)) push(0, ops::bilinearUpsampleBackward(gy, in(0).shape(), a.scale));
                break;
            case LayerKind::GlobalAvgPool:
                if (needIn(0)) push(0, ops::globalAvgPoolBackward(gy, in(0).shape()));
                break;
        }
    }
    return tape;
}

const Tensor& Engine::value(const std::string& id) const {
    if (!haveForward_) throw DomainError("value: no forward pass has run");
    for (std::size_t si = 0; si < slots_.size(); ++si)
        if (slots_[si].node->id == id) return values_[si];
    throw DimensionError("value: unknown node '" + id + "'");
}

const Tensor& Engine::output() const {
    if (!haveForward_) throw DomainError("output: no forward pass has run");
    return values_[outputSlot_];
}

Tensor predict(NetworkGraph& net, const Tensor& inputs, std::size_t batchSize) {
    Engine engine(net);
    const std::size_t n = inputs.dim(0);
    Tensor result;
    std::size_t rowSize = 0;
    for (std::size_t b = 0; b < n; b += batchSize) {
        const Tensor& y = engine.forward(inputs.slice(b, std::min(n, b + batchSize)));
        if (b == 0) {
            Shape shape = y.shape();
            shape[0] = n;
            result = Tensor(shape);
            rowSize = y.size() / y.dim(0);
        }
        std::copy(y.data().begin(), y.data().end(), result.data().begin() + long(b * rowSize));
    }
    return result;
}

}  // namespace steerlab
