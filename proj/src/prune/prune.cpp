#include "steerlab/prune/prune.hpp"

#include <cstdio>

#include "steerlab/engine/engine.hpp"
#include "steerlab/numerics/errors.hpp"

namespace steerlab {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string indexList(const std::vector<std::size_t>& v) {
    if (v.empty()) return "-";
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

}  // namespace

double pruneEquivalenceCheck(const NetworkGraph& zeroed, const NetworkGraph& pruned, const Tensor& probes) {
    NetworkGraph a = zeroed, b = pruned;
    const Tensor ya = predict(a, probes);
    const Tensor yb = predict(b, probes);
    if (ya.shape() != yb.shape())
        throw DimensionError("pruneEquivalenceCheck: outputs " + shapeString(ya.shape()) + " and " +
                             shapeString(yb.shape()));
    return maxAbsDiff(ya, yb);
}

PruneOutcome channelPrune(const NetworkGraph& net, const SaliencyScores& scores, const PruneOptions& options) {
    ZeroResult z = zeroLeastSalient(net, scores, options.fraction);
    const ChannelPruneStep step = pruneZeroChannels(z.net, z.mask);
    RepairResult r = repairGraph(step.net, step.removed);
    if (options.fillZero) r.net = fillZero(r.net, RngStream(options.seed), options.fill);
    return {std::move(z.net), std::move(r.net), std::move(r.report)};
}

std::string toText(const PruneReport& r) {
    std::string s = "steerlab-prune-report 1\n";
    s += "kernels_zeroed " + std::to_string(r.kernelsZeroed) + "\n";
    s += "kernels_total " + std::to_string(r.kernelsTotal) + "\n";
    s += "params_before " + std::to_string(r.paramsBefore) + "\n";
    s += "params_after " + std::to_string(r.paramsAfter) + "\n";
    s += "fraction_spatial_zeroed " + num(r.fractionSpatialZeroed) + "\n";
    s += "fraction_params_pruned " + num(r.fractionParamsPruned) + "\n";
    char pct[96];
    std::snprintf(pct, sizeof pct, "percent_zeroed_vs_pruned %.2f %.2f\n", 100 * r.fractionSpatialZeroed,
                  100 * r.fractionParamsPruned);
    s += pct;
    for (const auto& l : r.layers)
        s += "layer " + l.owner + " kind " + toString(l.kind) + (l.spatial ? " spatial" : " neighbor") +
             " params " + std::to_string(l.paramsBefore) + " " + std::to_string(l.paramsAfter) + " removed_in " +
             indexList(l.removedInputs) + " removed_out " + indexList(l.removedOutputs) + "\n";
    for (const auto& g : r.deletedGroups) s += "deleted_group " + g + "\n";
    for (const auto& w : r.warnings) s += "warning " + w + "\n";
    return s;
}

}  // namespace steerlab
