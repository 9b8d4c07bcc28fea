#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "steerlab/explain/saliency.hpp"
#include "steerlab/numerics/tensor.hpp"

namespace steerlab::cli {

std::string num(double v);
void writeText(const std::filesystem::path& path, const std::string& text);
std::string readText(const std::filesystem::path& path);
void writeCsv(const std::filesystem::path& path, const std::string& header, const std::vector<std::string>& rows);

/// Raw little-endian float32 values.
std::string floatBlob(const Tensor& t);

/// layer,out,in,score rows.
std::string scoresCsv(const SaliencyScores& s);
SaliencyScores loadScoresCsv(const std::filesystem::path& path, const NetworkGraph& net);

/// Kernels (n, h, w) as a grid of colored cells, linear color scale.
std::string filterGridSvg(const Tensor& kernels);

}  // namespace steerlab::cli
