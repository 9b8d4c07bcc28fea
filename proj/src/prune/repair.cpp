#include <algorithm>
#include <map>
#include <numeric>

#include "steerlab/numerics/errors.hpp"
#include "steerlab/prune/prune.hpp"

namespace steerlab {

namespace {

bool isSpatialConv(const LayerNode& n) { return n.kind == LayerKind::Conv2d && n.attrs.kernelH * n.attrs.kernelW > 1; }

std::vector<std::size_t> keptIndices(const std::vector<bool>& keep) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i]) out.push_back(i);
    return out;
}

std::vector<std::size_t> droppedIndices(const std::vector<bool>& keep) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < keep.size(); ++i)
        if (!keep[i]) out.push_back(i);
    return out;
}

// Keeps the listed indices of axis 0 and, for rank >= 2, of axis 1.
Tensor gather(const Tensor& t, const std::vector<std::size_t>& rows, const std::vector<std::size_t>* cols) {
    Shape s = t.shape();
    const std::size_t d1 = s.size() > 1 ? s[1] : 1;
    std::size_t inner = 1;
    for (std::size_t a = 2; a < s.size(); ++a) inner *= s[a];
    std::vector<std::size_t> all1(d1);
    std::iota(all1.begin(), all1.end(), std::size_t{0});
    const auto& c = cols ? *cols : all1;
    s[0] = rows.size();
    if (s.size() > 1) s[1] = c.size();
    Tensor out(s);
    auto dst = out.data().begin();
    for (std::size_t r : rows)
        for (std::size_t j : c) {
            const auto src = t.data().begin() + long((r * d1 + j) * inner);
            dst = std::copy(src, src + long(inner), dst);
        }
    return out;
}

std::size_t nodeParamCount(const NetworkGraph& net, const std::string& owner) {
    std::size_t n = 0;
    for (const auto& p : net.params)
        if (p.owner == owner && !p.buffer) n += p.tensor.size();
    return n;
}

struct Dsu {
    std::vector<std::size_t> parent;
    explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

struct Use {
    std::size_t node;
    std::size_t channel;
};

struct ChannelClass {
    std::vector<Use> producers;
    std::vector<Use> consumers;
    std::vector<std::size_t> joins;
    bool pinned = false;
};

// Channel bookkeeping for the whole graph: every output channel of every
// node belongs to a class of channels that must be kept or removed together.
class Planner {
public:
    Planner(const NetworkGraph& net, const ZeroMask& mask) : net_(net) {
        const auto counts = net.channelCounts();
        for (std::size_t i = 0; i < net.nodes.size(); ++i) {
            index_[net.nodes[i].id] = i;
            base_.push_back(total_);
            width_.push_back(counts.at(net.nodes[i].id));
            total_ += width_.back();
        }
        Dsu dsu(total_);
        for (std::size_t i = 0; i < net.nodes.size(); ++i) {
            const LayerNode& n = net.nodes[i];
            switch (n.kind) {
                case LayerKind::BatchNorm:
                case LayerKind::Activation:
                case LayerKind::BilinearUpsample:
                case LayerKind::GlobalAvgPool:
                case LayerKind::Add:
                case LayerKind::ScalarFusion:
                    for (const auto& in : n.inputs)
                        for (std::size_t c = 0; c < width_[i]; ++c) dsu.unite(id(i, c), id(input(in), c));
                    break;
                case LayerKind::Concat: {
                    std::size_t off = 0;
                    for (const auto& in : n.inputs) {
                        const std::size_t k = input(in);
                        for (std::size_t c = 0; c < width_[k]; ++c) dsu.unite(id(i, off + c), id(k, c));
                        off += width_[k];
                    }
                    break;
                }
                default:
                    break;
            }
        }
        cls_.resize(total_);
        std::map<std::size_t, std::size_t> dense;
        for (std::size_t x = 0; x < total_; ++x) {
            const std::size_t root = dsu.find(x);
            cls_[x] = dense.try_emplace(root, dense.size()).first->second;
        }
        classes_.resize(dense.size());

        for (std::size_t i = 0; i < net.nodes.size(); ++i) {
            const LayerNode& n = net.nodes[i];
            switch (n.kind) {
                case LayerKind::Input:
                case LayerKind::Conv2d:
                case LayerKind::PointwiseConv:
                case LayerKind::Linear:
                    for (std::size_t c = 0; c < width_[i]; ++c) {
                        ChannelClass& k = classes_[cls(i, c)];
                        k.producers.push_back({i, c});
                        if (n.kind == LayerKind::Input) k.pinned = true;
                    }
                    break;
                case LayerKind::Add:
                case LayerKind::ScalarFusion:
                    for (std::size_t c = 0; c < width_[i]; ++c) classes_[cls(i, c)].joins.push_back(i);
                    break;
                default:
                    break;
            }
            if (n.kind == LayerKind::Conv2d || n.kind == LayerKind::PointwiseConv || n.kind == LayerKind::Linear) {
                const std::size_t from = input(n.inputs[0]);
                for (std::size_t c = 0; c < width_[from]; ++c) classes_[cls(from, c)].consumers.push_back({i, c});
            }
            if (isSpatialConv(n)) {
                const ZeroMask::Layer* l = mask.find(n.id);
                if (!l || l->out != n.attrs.outChannels || l->in != n.attrs.inChannels / n.attrs.groups)
                    throw DimensionError("repairGraph: zero mask does not cover spatial layer " + n.id);
                mask_[i] = l;
            }
        }
        for (const auto& out : net.outputs) {
            const std::size_t i = input(out);
            for (std::size_t c = 0; c < width_[i]; ++c) classes_[cls(i, c)].pinned = true;
        }
    }

    void solve() {
        for (;;) {
            removed_.assign(classes_.size(), false);
            for (bool changed = true; changed;) {
                changed = false;
                for (std::size_t k = 0; k < classes_.size(); ++k) {
                    if (removed_[k] || classes_[k].pinned || !(producersDead(k) || consumersIdle(k))) continue;
                    removed_[k] = true;
                    changed = true;
                }
            }
            if (!enforceGroups() && !enforceNonEmpty()) break;
        }
        joinWarnings();
    }

    bool keep(std::size_t node, std::size_t c) const { return !removed_[cls(node, c)]; }
    std::vector<bool> keepMask(std::size_t node) const {
        std::vector<bool> k(width_[node]);
        for (std::size_t c = 0; c < k.size(); ++c) k[c] = keep(node, c);
        return k;
    }
    std::size_t input(const std::string& id) const { return index_.at(id); }

    std::vector<std::string> warnings;

private:
    std::size_t id(std::size_t node, std::size_t c) const { return base_[node] + c; }
    std::size_t cls(std::size_t node, std::size_t c) const { return cls_[id(node, c)]; }

    // Output o of a spatial conv is dead when every kernel in its row that
    // still reads a live input is zero.
    bool rowDead(std::size_t node, std::size_t o) const {
        const LayerNode& n = net_.nodes[node];
        const ZeroMask::Layer& m = *mask_.at(node);
        const std::size_t from = input(n.inputs[0]);
        const std::size_t opg = n.attrs.outChannels / n.attrs.groups, g = o / opg;
        for (std::size_t j = 0; j < m.in; ++j)
            if (!m.at(o, j) && keep(from, g * m.in + j)) return false;
        return true;
    }

    bool columnIdle(std::size_t node, std::size_t c) const {
        const LayerNode& n = net_.nodes[node];
        const ZeroMask::Layer& m = *mask_.at(node);
        const std::size_t opg = n.attrs.outChannels / n.attrs.groups, g = c / m.in;
        for (std::size_t o = g * opg; o < (g + 1) * opg; ++o)
            if (!m.at(o, c % m.in) && keep(node, o)) return false;
        return true;
    }

    bool producersDead(std::size_t k) const {
        const auto& p = classes_[k].producers;
        return !p.empty() && std::all_of(p.begin(), p.end(), [&](const Use& u) {
            return isSpatialConv(net_.nodes[u.node]) && rowDead(u.node, u.channel);
        });
    }

    bool consumersIdle(std::size_t k) const {
        const auto& c = classes_[k].consumers;
        return !c.empty() && std::all_of(c.begin(), c.end(), [&](const Use& u) {
            return isSpatialConv(net_.nodes[u.node]) && columnIdle(u.node, u.channel);
        });
    }

    // A grouped conv can only lose whole groups.
    bool enforceGroups() {
        bool pinned = false;
        for (std::size_t i = 0; i < net_.nodes.size(); ++i) {
            const LayerNode& n = net_.nodes[i];
            if (n.kind != LayerKind::Conv2d && n.kind != LayerKind::PointwiseConv) continue;
            if (n.attrs.groups == 1) continue;
            const std::size_t from = input(n.inputs[0]);
            const std::size_t cpg = n.attrs.inChannels / n.attrs.groups, opg = n.attrs.outChannels / n.attrs.groups;
            for (std::size_t g = 0; g < n.attrs.groups; ++g) {
                std::size_t gone = 0;
                for (std::size_t c = 0; c < cpg; ++c) gone += !keep(from, g * cpg + c);
                for (std::size_t o = 0; o < opg; ++o) gone += !keep(i, g * opg + o);
                if (gone == 0 || gone == cpg + opg) continue;
                for (std::size_t c = 0; c < cpg; ++c) pin(cls(from, g * cpg + c), pinned);
                for (std::size_t o = 0; o < opg; ++o) pin(cls(i, g * opg + o), pinned);
                warnings.push_back(n.id + ": group " + std::to_string(g) + " only partly removable, kept");
            }
        }
        return pinned;
    }

    bool enforceNonEmpty() {
        bool pinned = false;
        for (std::size_t i = 0; i < net_.nodes.size(); ++i) {
            bool any = false;
            for (std::size_t c = 0; c < width_[i] && !any; ++c) any = keep(i, c);
            if (any || width_[i] == 0) continue;
            pin(cls(i, 0), pinned);
            warnings.push_back(net_.nodes[i].id + ": every channel removable, channel 0 kept");
        }
        return pinned;
    }

    void pin(std::size_t k, bool& flag) {
        if (classes_[k].pinned || !removed_[k]) return;
        classes_[k].pinned = true;
        flag = true;
    }

    void joinWarnings() {
        std::map<std::size_t, std::size_t> conflicts;
        for (std::size_t k = 0; k < classes_.size(); ++k) {
            const ChannelClass& c = classes_[k];
            if (removed_[k] || c.joins.empty()) continue;
            std::size_t dead = 0;
            for (const Use& u : c.producers) dead += isSpatialConv(net_.nodes[u.node]) && rowDead(u.node, u.channel);
            if (dead == 0) continue;
            for (std::size_t j : c.joins) ++conflicts[j];
        }
        for (const auto& [node, n] : conflicts)
            warnings.push_back(net_.nodes[node].id + ": " + std::to_string(n) +
                               " channel(s) removable on some join inputs only, kept");
    }

    const NetworkGraph& net_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::size_t> base_, width_, cls_;
    std::size_t total_ = 0;
    std::vector<ChannelClass> classes_;
    std::map<std::size_t, const ZeroMask::Layer*> mask_;
    std::vector<bool> removed_;
};

void checkMask(const NetworkGraph& net, const ZeroMask& mask) {
    const ZeroMask actual = zeroMaskOf(net);
    for (const auto& l : mask.layers) {
        const ZeroMask::Layer* a = actual.find(l.owner);
        if (!a || a->out != l.out || a->in != l.in) throw DimensionError("zero mask names unknown layer " + l.owner);
        for (std::size_t j = 0; j < l.zero.size(); ++j)
            if (l.zero[j] && !a->zero[j]) throw DomainError("zero mask marks a nonzero kernel in " + l.owner);
    }
}

}  // namespace

std::size_t PruneReport::channelsRemoved() const {
    std::size_t n = 0;
    for (const auto& l : layers)
        if (l.spatial) n += l.removedOutputs.size();
    return n;
}

ChannelPruneStep pruneZeroChannels(const NetworkGraph& net, const ZeroMask& mask) {
    checkMask(net, mask);
    ChannelPruneStep step{net, {}, {}};
    step.removed.mask = mask;
    for (const auto& l : mask.layers) {
        LayerNode& n = step.net.node(l.owner);
        const std::size_t groups = n.attrs.groups, opg = l.out / groups;
        std::vector<bool> keepOut(l.out, true), keepIn(l.in * groups, true);
        if (groups == 1) {
            for (std::size_t o = 0; o < l.out; ++o) {
                bool all = true;
                for (std::size_t i = 0; i < l.in && all; ++i) all = l.at(o, i);
                keepOut[o] = !all;
            }
            for (std::size_t i = 0; i < l.in; ++i) {
                bool all = true;
                for (std::size_t o = 0; o < l.out && all; ++o) all = l.at(o, i);
                keepIn[i] = !all;
            }
        } else {
            for (std::size_t g = 0; g < groups; ++g) {
                bool all = true;
                for (std::size_t o = g * opg; o < (g + 1) * opg && all; ++o)
                    for (std::size_t i = 0; i < l.in && all; ++i) all = l.at(o, i);
                if (!all) continue;
                for (std::size_t o = g * opg; o < (g + 1) * opg; ++o) keepOut[o] = false;
                for (std::size_t i = g * l.in; i < (g + 1) * l.in; ++i) keepIn[i] = false;
            }
        }
        LayerRemoval r{l.owner, droppedIndices(keepIn), droppedIndices(keepOut)};
        if (r.inputs.empty() && r.outputs.empty()) continue;

        step.removed.originalNodes.push_back(n);
        const auto rows = keptIndices(keepOut);
        std::vector<std::size_t> cols;
        if (groups == 1) {
            cols = keptIndices(keepIn);
            n.attrs.inChannels = cols.size();
        } else {
            cols.resize(l.in);
            std::iota(cols.begin(), cols.end(), std::size_t{0});
            n.attrs.groups = rows.size() / opg;
            n.attrs.inChannels = n.attrs.groups * l.in;
        }
        n.attrs.outChannels = rows.size();
        for (auto& p : step.net.params) {
            if (p.owner != l.owner) continue;
            step.removed.originalParams.push_back(p);
            p.tensor = gather(p.tensor, rows, p.name == "weight" ? &cols : nullptr);
        }
        step.removed.layers.push_back(std::move(r));
    }
    step.status = validateGraph(step.net);
    return step;
}

RepairResult repairGraph(const NetworkGraph& pruned, const RemovedChannels& removed) {
    NetworkGraph net = pruned;
    for (const auto& n : removed.originalNodes) net.node(n.id) = n;
    for (const auto& p : removed.originalParams) net.param(p.owner, p.name) = p;
    requireValidGraph(net);

    Planner plan(net, removed.mask);
    plan.solve();

    RepairResult r{net, {}};
    PruneReport& rep = r.report;
    rep.kernelsZeroed = removed.mask.zeroed();
    rep.kernelsTotal = removed.mask.total();
    rep.paramsBefore = countParams(net).total;
    rep.warnings = plan.warnings;

    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        const LayerNode& src = net.nodes[i];
        if (declaredParams(src).empty()) continue;
        const std::vector<bool> keepOut = plan.keepMask(i);
        const std::vector<bool> keepIn =
            src.inputs.empty() ? std::vector<bool>{} : plan.keepMask(plan.input(src.inputs[0]));
        PruneReport::Layer entry{src.id, src.kind, isSpatialConv(src), {}, {}, nodeParamCount(net, src.id), 0};
        LayerNode& dst = r.net.nodes[i];
        const auto rows = keptIndices(keepOut);
        std::vector<std::size_t> cols;
        switch (src.kind) {
            case LayerKind::Conv2d:
            case LayerKind::PointwiseConv:
                entry.removedOutputs = droppedIndices(keepOut);
                entry.removedInputs = droppedIndices(keepIn);
                if (src.attrs.groups == 1) {
                    cols = keptIndices(keepIn);
                    dst.attrs.inChannels = cols.size();
                } else {
                    const std::size_t opg = src.attrs.outChannels / src.attrs.groups;
                    cols.resize(src.attrs.inChannels / src.attrs.groups);
                    std::iota(cols.begin(), cols.end(), std::size_t{0});
                    for (std::size_t g = 0; g < src.attrs.groups; ++g)
                        if (!keepOut[g * opg]) rep.deletedGroups.push_back(src.id + " " + std::to_string(g));
                    dst.attrs.groups = rows.size() / opg;
                    dst.attrs.inChannels = dst.attrs.groups * cols.size();
                }
                dst.attrs.outChannels = rows.size();
                break;
            case LayerKind::BatchNorm:
                entry.removedOutputs = droppedIndices(keepOut);
                entry.removedInputs = entry.removedOutputs;
                dst.attrs.inChannels = rows.size();
                break;
            case LayerKind::Linear:
                entry.removedInputs = droppedIndices(keepIn);
                cols = keptIndices(keepIn);
                dst.attrs.inChannels = cols.size();
                break;
            default:
                break;
        }
        if (entry.removedInputs.empty() && entry.removedOutputs.empty()) continue;
        for (auto& p : r.net.params) {
            if (p.owner != src.id) continue;
            if (src.kind != LayerKind::Linear) {
                p.tensor = gather(p.tensor, rows, p.name == "weight" ? &cols : nullptr);
            } else if (p.name == "weight") {
                std::vector<std::size_t> all(p.tensor.dim(0));
                std::iota(all.begin(), all.end(), std::size_t{0});
                p.tensor = gather(p.tensor, all, &cols);
            }
        }
        entry.paramsAfter = nodeParamCount(r.net, src.id);
        if (!entry.spatial) rep.affectedNeighbors.push_back(src.id);
        rep.layers.push_back(std::move(entry));
    }
    requireValidGraph(r.net);

    rep.paramsAfter = countParams(r.net).total;
    rep.fractionSpatialZeroed = rep.kernelsTotal ? double(rep.kernelsZeroed) / double(rep.kernelsTotal) : 0.0;
    rep.fractionParamsPruned = rep.paramsBefore ? double(rep.paramsBefore - rep.paramsAfter) / double(rep.paramsBefore) : 0.0;
    return r;
}

}  // namespace steerlab
