#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "steerlab/explain/saliency.hpp"
#include "steerlab/explain/spectrum.hpp"
#include "steerlab/netgraph/graph.hpp"

namespace steerlab {

/// Spatial layers sharing one kernel size, explained against one basis.
struct KernelGroup {
    std::size_t h = 0;
    std::size_t w = 0;
    Basis basis;
    std::vector<std::size_t> layers;  // indices into ExplainResult::layers
    /// Spectrum of all kernels of the group pooled together; uniform weights
    /// are 1/N over the whole group.
    EnergySpectrum global;
};

struct ExplainResult {
    std::vector<EnergySpectrum> layers;
    std::vector<KernelGroup> groups;

    /// Heatmap of a group: rows are frequency ranks, columns are layers.
    std::vector<std::vector<double>> heatmap(std::size_t group) const;
};

/// One spectrum per spatial layer (uniform 1/n weights unless scores are
/// given) plus pooled per-kernel-size spectra. Throws DomainError for a
/// network without spatial layers.
ExplainResult explainNetwork(const NetworkGraph& net, const SaliencyScores* scores = nullptr);

/// Writes spectra.csv, e1.csv, e0.csv, bars.csv and heatmap_<h>x<w>.svg.
/// Returns the files written.
std::vector<std::filesystem::path> writeExplainReport(const ExplainResult& result, const std::filesystem::path& dir);

std::string spectraCsv(const ExplainResult& result);
std::string e1Csv(const ExplainResult& result);
std::string e0Csv(const ExplainResult& result);
std::string barsCsv(const ExplainResult& result);
std::string heatmapSvg(const ExplainResult& result, std::size_t group);

using Rgb = std::array<unsigned char, 3>;
/// Fixed 256-entry colormap.
const std::array<Rgb, 256>& colormap();
/// Log-scale position in [0, 255] of v within [lo, hi]; 128 when hi <= lo.
std::size_t logColorIndex(double v, double lo, double hi);

}  // namespace steerlab
