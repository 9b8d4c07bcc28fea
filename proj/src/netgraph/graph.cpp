#include "steerlab/netgraph/graph.hpp"

#include <algorithm>
#include <set>

namespace steerlab {

namespace {

struct KindName {
    LayerKind kind;
    const char* name;
};

constexpr KindName kKindNames[] = {
    {LayerKind::Input, "input"},
    {LayerKind::Conv2d, "conv2d"},
    {LayerKind::PointwiseConv, "pointwiseConv"},
    {LayerKind::BatchNorm, "batchNorm"},
    {LayerKind::Linear, "linear"},
    {LayerKind::Activation, "activation"},
    {LayerKind::Add, "add"},
    {LayerKind::Concat, "concat"},
    {LayerKind::BilinearUpsample, "bilinearUpsample"},
    {LayerKind::GlobalAvgPool, "globalAvgPool"},
    {LayerKind::ScalarFusion, "scalarFusion"},
};

[[noreturn]] void fail(GraphErrc code, const std::string& msg) { throw GraphError(code, msg); }

}  // namespace

std::string toString(LayerKind kind) {
    for (const auto& e : kKindNames)
        if (e.kind == kind) return e.name;
    return "unknown";
}

std::string toString(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::CELU:
            return "celu";
        case ActivationKind::ReLU:
            return "relu";
        case ActivationKind::Sigmoid:
            return "sigmoid";
    }
    return "unknown";
}

LayerKind parseLayerKind(const std::string& name) {
    for (const auto& e : kKindNames)
        if (name == e.name) return e.kind;
    fail(GraphErrc::UnknownKind, "unknown layer kind '" + name + "'");
}

ActivationKind parseActivationKind(const std::string& name) {
    for (ActivationKind k : {ActivationKind::CELU, ActivationKind::ReLU, ActivationKind::Sigmoid})
        if (toString(k) == name) return k;
    fail(GraphErrc::UnknownKind, "unknown activation '" + name + "'");
}

std::string toString(GraphErrc code) {
    switch (code) {
        case GraphErrc::Ok:
            return "ok";
        case GraphErrc::DuplicateId:
            return "duplicate-id";
        case GraphErrc::UnknownNode:
            return "unknown-node";
        case GraphErrc::Cycle:
            return "cycle";
        case GraphErrc::ChannelMismatch:
            return "channel-mismatch";
        case GraphErrc::Dangling:
            return "dangling";
        case GraphErrc::BadAttrs:
            return "bad-attrs";
        case GraphErrc::ArityMismatch:
            return "arity-mismatch";
        case GraphErrc::ParamMismatch:
            return "param-mismatch";
        case GraphErrc::UnknownKind:
            return "unknown-kind";
    }
    return "unknown";
}

std::optional<std::size_t> NetworkGraph::findNode(const std::string& id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id == id) return i;
    return std::nullopt;
}

const LayerNode& NetworkGraph::node(const std::string& id) const {
    const auto i = findNode(id);
    if (!i) fail(GraphErrc::UnknownNode, "no node '" + id + "'");
    return nodes[*i];
}

LayerNode& NetworkGraph::node(const std::string& id) {
    return const_cast<LayerNode&>(static_cast<const NetworkGraph&>(*this).node(id));
}

const ParamTensor* NetworkGraph::findParam(const std::string& owner, const std::string& name) const {
    for (const auto& p : params)
        if (p.owner == owner && p.name == name) return &p;
    return nullptr;
}

ParamTensor* NetworkGraph::findParam(const std::string& owner, const std::string& name) {
    return const_cast<ParamTensor*>(static_cast<const NetworkGraph&>(*this).findParam(owner, name));
}

const ParamTensor& NetworkGraph::param(const std::string& owner, const std::string& name) const {
    const ParamTensor* p = findParam(owner, name);
    if (!p) fail(GraphErrc::ParamMismatch, "no parameter " + owner + "/" + name);
    return *p;
}

ParamTensor& NetworkGraph::param(const std::string& owner, const std::string& name) {
    return const_cast<ParamTensor&>(static_cast<const NetworkGraph&>(*this).param(owner, name));
}

std::vector<std::string> NetworkGraph::consumers(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& n : nodes)
        if (std::find(n.inputs.begin(), n.inputs.end(), id) != n.inputs.end()) out.push_back(n.id);
    return out;
}

std::vector<std::size_t> NetworkGraph::topologicalOrder() const {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i].id] = i;
    std::vector<std::size_t> pending(nodes.size(), 0);
    std::vector<std::vector<std::size_t>> users(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (const auto& in : nodes[i].inputs) {
            const auto it = index.find(in);
            if (it == index.end()) fail(GraphErrc::UnknownNode, nodes[i].id + " reads unknown node '" + in + "'");
            ++pending[i];
            users[it->second].push_back(i);
        }
    }
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (pending[i] == 0) ready.insert(i);
    std::vector<std::size_t> order;
    order.reserve(nodes.size());
    while (!ready.empty()) {
        const std::size_t i = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(i);
        for (std::size_t u : users[i])
            if (--pending[u] == 0) ready.insert(u);
    }
    if (order.size() != nodes.size()) fail(GraphErrc::Cycle, "graph contains a cycle");
    return order;
}

std::map<std::string, std::size_t> NetworkGraph::channelCounts() const {
    std::map<std::string, std::size_t> ch;
    std::map<std::string, bool> flat;  // output is (N, C) rather than (N, C, H, W)
    for (std::size_t i : topologicalOrder()) {
        const LayerNode& n = nodes[i];
        const LayerAttrs& a = n.attrs;
        auto arity = [&](std::size_t lo, std::size_t hi) {
            if (n.inputs.size() < lo || n.inputs.size() > hi)
                fail(GraphErrc::ArityMismatch, n.id + " (" + toString(n.kind) + ") has " +
                                                   std::to_string(n.inputs.size()) + " inputs");
        };
        auto inCh = [&](std::size_t k) { return ch.at(n.inputs[k]); };
        auto needSpatial = [&] {
            for (const auto& in : n.inputs)
                if (flat.at(in)) fail(GraphErrc::BadAttrs, n.id + " needs a spatial input but " + in + " is pooled");
        };
        auto expectIn = [&](std::size_t want) {
            if (inCh(0) != want)
                fail(GraphErrc::ChannelMismatch, n.id + " expects " + std::to_string(want) + " channels, gets " +
                                                     std::to_string(inCh(0)) + " from " + n.inputs[0]);
        };
        bool isFlat = false;
        std::size_t out = 0;
        switch (n.kind) {
            case LayerKind::Input:
                arity(0, 0);
                if (a.outChannels == 0) fail(GraphErrc::BadAttrs, n.id + ": input needs channels");
                out = a.outChannels;
                break;
            case LayerKind::Conv2d:
            case LayerKind::PointwiseConv:
                arity(1, 1);
                needSpatial();
                if (a.groups == 0 || a.inChannels % a.groups || a.outChannels % a.groups || a.inChannels == 0 ||
                    a.outChannels == 0 || a.stride == 0 || a.kernelH == 0 || a.kernelW == 0)
                    fail(GraphErrc::BadAttrs, n.id + ": invalid conv channels/groups/stride");
                if (n.kind == LayerKind::PointwiseConv && (a.kernelH != 1 || a.kernelW != 1))
                    fail(GraphErrc::BadAttrs, n.id + ": pointwise conv must be 1x1");
                expectIn(a.inChannels);
                out = a.outChannels;
                break;
            case LayerKind::BatchNorm:
                arity(1, 1);
                expectIn(a.inChannels);
                out = a.inChannels;
                isFlat = flat.at(n.inputs[0]);
                break;
            case LayerKind::Linear:
                arity(1, 1);
                if (!flat.at(n.inputs[0])) fail(GraphErrc::BadAttrs, n.id + ": linear needs a pooled input");
                expectIn(a.inChannels);
                out = a.outChannels;
                isFlat = true;
                break;
            case LayerKind::Activation:
                arity(1, 1);
                out = inCh(0);
                isFlat = flat.at(n.inputs[0]);
                break;
            case LayerKind::BilinearUpsample:
                arity(1, 1);
                needSpatial();
                if (a.scale == 0) fail(GraphErrc::BadAttrs, n.id + ": upsample scale must be >= 1");
                out = inCh(0);
                break;
            case LayerKind::GlobalAvgPool:
                arity(1, 1);
                needSpatial();
                out = inCh(0);
                isFlat = true;
                break;
            case LayerKind::Add:
            case LayerKind::ScalarFusion:
                if (n.kind == LayerKind::ScalarFusion)
                    arity(a.fusionScalars, a.fusionScalars);
                else
                    arity(2, n.inputs.size() < 2 ? 2 : n.inputs.size());
                out = inCh(0);
                isFlat = flat.at(n.inputs[0]);
                for (std::size_t k = 1; k < n.inputs.size(); ++k) {
                    if (inCh(k) != out)
                        fail(GraphErrc::ChannelMismatch, n.id + ": joined inputs have " + std::to_string(out) +
                                                             " and " + std::to_string(inCh(k)) + " channels");
                    if (flat.at(n.inputs[k]) != isFlat) fail(GraphErrc::BadAttrs, n.id + ": mixed input ranks");
                }
                break;
            case LayerKind::Concat:
                arity(1, n.inputs.size() < 1 ? 1 : n.inputs.size());
                needSpatial();
                for (std::size_t k = 0; k < n.inputs.size(); ++k) out += inCh(k);
                break;
        }
        ch[n.id] = out;
        flat[n.id] = isFlat;
    }
    return ch;
}

std::vector<std::size_t> NetworkGraph::spatialParams() const {
    std::vector<std::size_t> out;
    for (const auto& n : nodes)
        for (std::size_t i = 0; i < params.size(); ++i)
            if (params[i].owner == n.id && params[i].spatial) out.push_back(i);
    return out;
}

std::vector<ParamDecl> declaredParams(const LayerNode& n) {
    const LayerAttrs& a = n.attrs;
    std::vector<ParamDecl> out;
    switch (n.kind) {
        case LayerKind::Conv2d:
        case LayerKind::PointwiseConv: {
            const std::size_t cpg = a.groups ? a.inChannels / a.groups : 0;
            out.push_back({"weight", {a.outChannels, cpg, a.kernelH, a.kernelW}, false, a.kernelH * a.kernelW > 1});
            if (a.bias) out.push_back({"bias", {a.outChannels}, false, false});
            break;
        }
        case LayerKind::BatchNorm:
            out.push_back({"gamma", {a.inChannels}, false, false});
            out.push_back({"beta", {a.inChannels}, false, false});
            out.push_back({"running_mean", {a.inChannels}, true, false});
            out.push_back({"running_var", {a.inChannels}, true, false});
            break;
        case LayerKind::Linear:
            out.push_back({"weight", {a.outChannels, a.inChannels}, false, false});
            if (a.bias) out.push_back({"bias", {a.outChannels}, false, false});
            break;
        case LayerKind::ScalarFusion:
            out.push_back({"scalars", {a.fusionScalars}, false, false});
            break;
        default:
            break;
    }
    return out;
}

GraphStatus validateGraph(const NetworkGraph& net) {
    try {
        std::set<std::string> ids;
        for (const auto& n : net.nodes)
            if (!ids.insert(n.id).second) fail(GraphErrc::DuplicateId, "duplicate node id '" + n.id + "'");
        for (const auto& id : net.inputs) {
            if (!ids.count(id)) fail(GraphErrc::UnknownNode, "graph input '" + id + "' is not a node");
            if (net.node(id).kind != LayerKind::Input) fail(GraphErrc::BadAttrs, "graph input '" + id + "' is not an input node");
        }
        for (const auto& id : net.outputs)
            if (!ids.count(id)) fail(GraphErrc::UnknownNode, "graph output '" + id + "' is not a node");
        for (const auto& n : net.nodes)
            if (n.kind == LayerKind::Input &&
                std::find(net.inputs.begin(), net.inputs.end(), n.id) == net.inputs.end())
                fail(GraphErrc::Dangling, "input node '" + n.id + "' is not a graph input");
        if (net.inputs.empty() || net.outputs.empty()) fail(GraphErrc::Dangling, "graph needs inputs and outputs");

        const auto order = net.topologicalOrder();
        net.channelCounts();

        // Reachable from an input, and contributing to an output.
        std::set<std::string> fromInput(net.inputs.begin(), net.inputs.end());
        for (std::size_t i : order) {
            const auto& n = net.nodes[i];
            for (const auto& in : n.inputs)
                if (fromInput.count(in)) fromInput.insert(n.id);
        }
        std::set<std::string> toOutput(net.outputs.begin(), net.outputs.end());
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const auto& n = net.nodes[*it];
            if (toOutput.count(n.id)) toOutput.insert(n.inputs.begin(), n.inputs.end());
        }
        for (const auto& n : net.nodes) {
            if (!fromInput.count(n.id)) fail(GraphErrc::Dangling, "node '" + n.id + "' is not reachable from an input");
            if (!toOutput.count(n.id)) fail(GraphErrc::Dangling, "node '" + n.id + "' does not reach an output");
        }

        std::size_t declared = 0;
        for (const auto& n : net.nodes) {
            for (const auto& d : declaredParams(n)) {
                ++declared;
                const ParamTensor* p = net.findParam(n.id, d.name);
                if (!p) fail(GraphErrc::ParamMismatch, "missing parameter " + n.id + "/" + d.name);
                if (p->tensor.shape() != d.shape)
                    fail(GraphErrc::ParamMismatch, n.id + "/" + d.name + " has shape " + shapeString(p->tensor.shape()) +
                                                       ", expected " + shapeString(d.shape));
                if (p->buffer != d.buffer || p->spatial != d.spatial)
                    fail(GraphErrc::ParamMismatch, n.id + "/" + d.name + " has wrong buffer/spatial flags");
            }
        }
        if (declared != net.params.size()) fail(GraphErrc::ParamMismatch, "graph carries undeclared parameters");
    } catch (const GraphError& e) {
        return {e.code(), e.what()};
    }
    return {};
}

void requireValidGraph(const NetworkGraph& net) {
    const GraphStatus s = validateGraph(net);
    if (!s.ok()) throw GraphError(s.code, s.message);
}

ParamCounts countParams(const NetworkGraph& net) {
    ParamCounts c;
    for (const auto& p : net.params) {
        if (p.buffer) continue;
        c.total += p.tensor.size();
        if (p.spatial) c.spatial += p.tensor.size();
        if (p.fixed) c.fixed += p.tensor.size();
    }
    return c;
}

std::vector<std::pair<std::string, ParamCounts>> paramBreakdown(const NetworkGraph& net) {
    std::vector<std::pair<std::string, ParamCounts>> out;
    for (const auto& p : net.params) {
        if (p.buffer) continue;
        const std::string block = p.owner.substr(0, p.owner.find('.'));
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == block; });
        if (it == out.end()) {
            out.emplace_back(block, ParamCounts{});
            it = std::prev(out.end());
        }
        it->second.total += p.tensor.size();
        if (p.spatial) it->second.spatial += p.tensor.size();
        if (p.fixed) it->second.fixed += p.tensor.size();
    }
    return out;
}

}  // namespace steerlab
