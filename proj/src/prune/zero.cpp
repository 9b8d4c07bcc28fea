#include <algorithm>
#include <cmath>
#include <tuple>

#include "steerlab/numerics/errors.hpp"
#include "steerlab/numerics/numerics.hpp"
#include "steerlab/prune/prune.hpp"

namespace steerlab {

std::size_t ZeroMask::zeroed() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += std::size_t(std::count(l.zero.begin(), l.zero.end(), true));
    return n;
}

std::size_t ZeroMask::total() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.zero.size();
    return n;
}

const ZeroMask::Layer* ZeroMask::find(const std::string& owner) const {
    for (const auto& l : layers)
        if (l.owner == owner) return &l;
    return nullptr;
}

ZeroMask zeroMaskOf(const NetworkGraph& net) {
    ZeroMask m;
    for (std::size_t pi : net.spatialParams()) {
        const ParamTensor& p = net.params[pi];
        const Shape& s = p.tensor.shape();
        const std::size_t k = s[2] * s[3];
        ZeroMask::Layer l{p.owner, s[0], s[1], std::vector<bool>(s[0] * s[1])};
        for (std::size_t j = 0; j < l.zero.size(); ++j) {
            const auto* f = p.tensor.data().data() + j * k;
            l.zero[j] = std::all_of(f, f + k, [](float v) { return v == 0.0f; });
        }
        m.layers.push_back(std::move(l));
    }
    return m;
}

ZeroResult zeroKernels(const NetworkGraph& net, const SaliencyScores& scores, double fraction, ZeroOrder order) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("zeroing fraction must lie in [0, 1]");
    struct Entry {
        float score;
        std::size_t layer, out, in;
    };
    std::vector<Entry> all;
    const auto spatial = net.spatialParams();
    for (std::size_t l = 0; l < spatial.size(); ++l) {
        const ParamTensor& p = net.params[spatial[l]];
        const SaliencyScores::Layer* s = scores.find(p.owner);
        const Shape& sh = p.tensor.shape();
        if (!s || s->scores.shape() != Shape{sh[0], sh[1]})
            throw DimensionError("zeroKernels: no scores for spatial layer " + p.owner);
        for (std::size_t o = 0; o < sh[0]; ++o)
            for (std::size_t i = 0; i < sh[1]; ++i) all.push_back({s->scores.at(o, i), l, o, i});
    }
    const bool most = order == ZeroOrder::MostSalient;
    std::stable_sort(all.begin(), all.end(), [most](const Entry& a, const Entry& b) {
        if (a.score != b.score) return most ? a.score > b.score : a.score < b.score;
        return std::tie(a.layer, a.out, a.in) < std::tie(b.layer, b.out, b.in);
    });
    const auto count = static_cast<std::size_t>(std::floor(fraction * double(all.size())));

    ZeroResult r{net, {}};
    for (std::size_t k = 0; k < count; ++k) {
        Tensor& w = r.net.params[spatial[all[k].layer]].tensor;
        const std::size_t len = w.dim(2) * w.dim(3);
        const std::size_t first = (all[k].out * w.dim(1) + all[k].in) * len;
        std::fill_n(w.data().begin() + long(first), len, 0.0f);
    }
    r.mask = zeroMaskOf(r.net);
    return r;
}

ZeroResult zeroLeastSalient(const NetworkGraph& net, const SaliencyScores& scores, double fraction) {
    return zeroKernels(net, scores, fraction, ZeroOrder::LeastSalient);
}

NetworkGraph fillZero(const NetworkGraph& net, const RngStream& rng, const FillZeroOptions& options) {
    NetworkGraph out = net;
    for (std::size_t pi : out.spatialParams()) {
        ParamTensor& p = out.params[pi];
        RngStream r = rng.derive(pi);
        const Shape& s = p.tensor.shape();
        const std::size_t k = s[2] * s[3], fanIn = s[1] * k;
        for (std::size_t j = 0; j < s[0] * s[1]; ++j) {
            float* f = p.tensor.data().data() + j * k;
            const auto zeros = std::size_t(std::count(f, f + k, 0.0f));
            if (zeros == 0) continue;
            if (zeros == k) {
                const Tensor fresh = kaimingUniform(fanIn, k, r);
                std::copy(fresh.data().begin(), fresh.data().end(), f);
                continue;
            }
            double sum = 0, sq = 0;
            std::size_t n = 0;
            for (std::size_t e = 0; e < k; ++e) {
                if (options.nonzeroStats && f[e] == 0.0f) continue;
                sum += f[e];
                sq += double(f[e]) * f[e];
                ++n;
            }
            const double mean = sum / double(n);
            const double sd = std::sqrt(std::max(0.0, sq / double(n) - mean * mean));
            for (std::size_t e = 0; e < k; ++e)
                if (f[e] == 0.0f) f[e] = static_cast<float>(mean + sd * r.normal());
        }
        p.fixed = true;
    }
    return out;
}

}  // namespace steerlab
