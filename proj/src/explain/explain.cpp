#include "steerlab/explain/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "steerlab/netgraph/initialize.hpp"
#include "steerlab/numerics/errors.hpp"

namespace steerlab {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string kernelLabel(std::size_t h, std::size_t w) { return std::to_string(h) + "x" + std::to_string(w); }

}  // namespace

ExplainResult explainNetwork(const NetworkGraph& net, const SaliencyScores* scores) {
    ExplainResult r;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> groupOf;
    std::vector<std::vector<Tensor>> pooled;
    std::vector<std::vector<std::vector<double>>> pooledWeights;

    for (std::size_t pi : net.spatialParams()) {
        const ParamTensor& p = net.params[pi];
        const Tensor k3 = layerKernels(p);
        const std::size_t n = k3.dim(0), h = k3.dim(1), w = k3.dim(2);
        auto [it, inserted] = groupOf.try_emplace({h, w}, r.groups.size());
        if (inserted) {
            KernelGroup g;
            g.h = h;
            g.w = w;
            g.basis = dct2Basis(h, w);
            r.groups.push_back(std::move(g));
            pooled.emplace_back();
            pooledWeights.emplace_back();
        }
        KernelGroup& g = r.groups[it->second];
        std::vector<double> weights;
        if (scores) {
            const SaliencyScores::Layer* layer = scores->find(p.owner);
            if (!layer || layer->scores.size() != n)
                throw DimensionError("explainNetwork: saliency scores do not cover layer " + p.owner);
            weights.assign(layer->scores.data().begin(), layer->scores.data().end());
        } else {
            weights = uniformWeights(n);
        }
        const Tensor flat = k3.reshaped({n, h * w});
        g.layers.push_back(r.layers.size());
        r.layers.push_back(makeSpectrum(p.owner, flat, g.basis, weights, scores != nullptr));
        pooled[it->second].push_back(flat);
        pooledWeights[it->second].push_back(std::move(weights));
    }
    if (r.layers.empty()) throw DomainError("explainNetwork: network has no spatial layers");

    for (std::size_t gi = 0; gi < r.groups.size(); ++gi) {
        KernelGroup& g = r.groups[gi];
        const std::size_t m = g.h * g.w;
        std::size_t total = 0;
        for (const Tensor& t : pooled[gi]) total += t.dim(0);
        Tensor all({total, m});
        std::vector<double> weights;
        std::size_t row = 0;
        for (std::size_t k = 0; k < pooled[gi].size(); ++k) {
            const Tensor& t = pooled[gi][k];
            std::copy(t.data().begin(), t.data().end(), all.data().begin() + long(row * m));
            row += t.dim(0);
            if (scores) weights.insert(weights.end(), pooledWeights[gi][k].begin(), pooledWeights[gi][k].end());
        }
        if (!scores) weights = uniformWeights(total);
        g.global = makeSpectrum("global_" + kernelLabel(g.h, g.w), all, g.basis, weights, scores != nullptr);
    }
    return r;
}

std::vector<std::vector<double>> ExplainResult::heatmap(std::size_t group) const {
    const KernelGroup& g = groups.at(group);
    std::vector<std::vector<double>> rows(g.basis.size(), std::vector<double>(g.layers.size()));
    for (std::size_t c = 0; c < g.layers.size(); ++c) {
        const auto byRank = layers[g.layers[c]].eDByRank(g.basis);
        for (std::size_t r = 0; r < byRank.size(); ++r) rows[r][c] = byRank[r];
    }
    return rows;
}

std::string spectraCsv(const ExplainResult& result) {
    std::string s = "layer,basisIndex,energy\n";
    auto emit = [&](const EnergySpectrum& sp) {
        for (std::size_t i = 0; i < sp.eD.size(); ++i) s += sp.layerId + "," + std::to_string(i) + "," + num(sp.eD[i]) + "\n";
    };
    for (const auto& sp : result.layers) emit(sp);
    for (const auto& g : result.groups) emit(g.global);
    return s;
}

std::string e1Csv(const ExplainResult& result) {
    std::string s = "layer,axis,frequency,energy\n";
    auto emit = [&](const EnergySpectrum& sp) {
        for (std::size_t i = 0; i < sp.e1.size(); ++i) {
            const bool vertical = i < sp.h;
            s += sp.layerId + (vertical ? ",h," : ",w,") + std::to_string(vertical ? i : i - sp.h) + "," + num(sp.e1[i]) +
                 "\n";
        }
    };
    for (const auto& sp : result.layers) emit(sp);
    for (const auto& g : result.groups) emit(g.global);
    return s;
}

std::string e0Csv(const ExplainResult& result) {
    std::string s = "layer,frequency,energy\n";
    auto emit = [&](const EnergySpectrum& sp) {
        if (!sp.e0) return;
        for (std::size_t i = 0; i < sp.e0->size(); ++i)
            s += sp.layerId + "," + std::to_string(i) + "," + num((*sp.e0)[i]) + "\n";
    };
    for (const auto& sp : result.layers) emit(sp);
    for (const auto& g : result.groups) emit(g.global);
    return s;
}

std::string barsCsv(const ExplainResult& result) {
    std::string s = "group,kind,index,value\n";
    for (std::size_t gi = 0; gi < result.groups.size(); ++gi) {
        const auto hm = result.heatmap(gi);
        const std::string label = kernelLabel(result.groups[gi].h, result.groups[gi].w);
        for (std::size_t r = 0; r < hm.size(); ++r) {
            double sum = 0;
            for (double v : hm[r]) sum += v;
            s += label + ",rank," + std::to_string(r) + "," + num(sum) + "\n";
        }
        for (std::size_t c = 0; c < result.groups[gi].layers.size(); ++c) {
            double sum = 0;
            for (const auto& row : hm) sum += row[c];
            s += label + ",layer," + std::to_string(c) + "," + num(sum) + "\n";
        }
    }
    return s;
}

const std::array<Rgb, 256>& colormap() {
    static const std::array<Rgb, 256> lut = [] {
        const double anchors[5][3] = {{68, 1, 84}, {59, 82, 139}, {33, 144, 141}, {93, 201, 99}, {253, 231, 37}};
        std::array<Rgb, 256> t{};
        for (std::size_t i = 0; i < 256; ++i) {
            const double x = double(i) / 255.0 * 4.0;
            const std::size_t a = std::min<std::size_t>(std::size_t(x), 3);
            const double f = x - double(a);
            for (int c = 0; c < 3; ++c)
                t[i][c] = static_cast<unsigned char>(std::lround(anchors[a][c] + f * (anchors[a + 1][c] - anchors[a][c])));
        }
        return t;
    }();
    return lut;
}

std::size_t logColorIndex(double v, double lo, double hi) {
    if (!(hi > lo) || !(lo > 0)) return 128;
    if (!(v > lo)) return 0;
    if (v >= hi) return 255;
    const double t = (std::log(v) - std::log(lo)) / (std::log(hi) - std::log(lo));
    return std::min<std::size_t>(255, std::size_t(t * 256.0));
}

std::string heatmapSvg(const ExplainResult& result, std::size_t group) {
    const auto hm = result.heatmap(group);
    const KernelGroup& g = result.groups.at(group);
    const std::size_t rows = hm.size(), cols = g.layers.size();
    double lo = 0, hi = 0;
    for (const auto& row : hm)
        for (double v : row)
            if (v > 0) {
                lo = lo == 0 ? v : std::min(lo, v);
                hi = std::max(hi, v);
            }
    constexpr int cell = 14, margin = 40, bar = 60;
    const int width = margin + int(cols) * cell + 10 + bar + 10;
    const int height = 20 + int(rows) * cell + 10 + bar + margin;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    s << "<text x=\"" << margin << "\" y=\"14\" font-size=\"12\" font-family=\"monospace\">e(d) " << kernelLabel(g.h, g.w)
      << ": rows frequency rank, columns layers (log scale " << num(lo) << " .. " << num(hi) << ")</text>\n";
    const auto& lut = colormap();
    std::vector<double> rowSum(rows, 0), colSum(cols, 0);
    for (std::size_t r = 0; r < rows; ++r) {
        s << "<text x=\"" << margin - 4 << "\" y=\"" << 20 + int(r) * cell + cell - 3
          << "\" font-size=\"9\" text-anchor=\"end\" font-family=\"monospace\">" << r << "</text>\n";
        for (std::size_t c = 0; c < cols; ++c) {
            const Rgb& col = lut[logColorIndex(hm[r][c], lo, hi)];
            s << "<rect x=\"" << margin + int(c) * cell << "\" y=\"" << 20 + int(r) * cell << "\" width=\"" << cell
              << "\" height=\"" << cell << "\" fill=\"rgb(" << int(col[0]) << "," << int(col[1]) << "," << int(col[2])
              << ")\"><title>" << result.layers[g.layers[c]].layerId << " rank " << r << ": " << num(hm[r][c])
              << "</title></rect>\n";
            rowSum[r] += hm[r][c];
            colSum[c] += hm[r][c];
        }
    }
    const double rowMax = *std::max_element(rowSum.begin(), rowSum.end());
    const double colMax = *std::max_element(colSum.begin(), colSum.end());
    const int barX = margin + int(cols) * cell + 10;
    for (std::size_t r = 0; r < rows; ++r) {
        const double len = rowMax > 0 ? rowSum[r] / rowMax * bar : 0;
        s << "<rect x=\"" << barX << "\" y=\"" << 20 + int(r) * cell + 2 << "\" width=\"" << num(len) << "\" height=\""
          << cell - 4 << "\" fill=\"#555\"/>\n";
    }
    const int barY = 20 + int(rows) * cell + 10;
    for (std::size_t c = 0; c < cols; ++c) {
        const double len = colMax > 0 ? colSum[c] / colMax * bar : 0;
        s << "<rect x=\"" << margin + int(c) * cell + 2 << "\" y=\"" << barY << "\" width=\"" << cell - 4
          << "\" height=\"" << num(len) << "\" fill=\"#555\"/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

std::vector<std::filesystem::path> writeExplainReport(const ExplainResult& result, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::filesystem::path& name, const std::string& text) {
        const auto path = dir / name;
        std::ofstream f(path, std::ios::binary);
        f << text;
        if (!f) throw IoError("cannot write " + path.string());
        written.push_back(path);
    };
    put("spectra.csv", spectraCsv(result));
    put("e1.csv", e1Csv(result));
    put("e0.csv", e0Csv(result));
    put("bars.csv", barsCsv(result));
    for (std::size_t g = 0; g < result.groups.size(); ++g)
        put("heatmap_" + kernelLabel(result.groups[g].h, result.groups[g].w) + ".svg", heatmapSvg(result, g));
    return written;
}

}  // namespace steerlab
