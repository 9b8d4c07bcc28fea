#include "files.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "steerlab/explain/explain.hpp"
#include "steerlab/numerics/errors.hpp"

namespace steerlab::cli {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void writeText(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f.write(text.data(), std::streamsize(text.size()));
    if (!f) throw IoError("cannot write " + path.string());
}

std::string readText(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void writeCsv(const std::filesystem::path& path, const std::string& header, const std::vector<std::string>& rows) {
    std::string text = header + "\n";
    for (const auto& r : rows) text += r + "\n";
    writeText(path, text);
}

std::string floatBlob(const Tensor& t) {
    std::string out;
    out.reserve(4 * t.size());
    for (float v : t.data()) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
    }
    return out;
}

std::string scoresCsv(const SaliencyScores& s) {
    std::string text = "layer,out,in,score\n";
    for (const auto& l : s.layers)
        for (std::size_t o = 0; o < l.scores.dim(0); ++o)
            for (std::size_t i = 0; i < l.scores.dim(1); ++i)
                text += l.owner + "," + std::to_string(o) + "," + std::to_string(i) + "," + num(l.scores.at(o, i)) + "\n";
    return text;
}

SaliencyScores loadScoresCsv(const std::filesystem::path& path, const NetworkGraph& net) {
    SaliencyScores s;
    for (std::size_t pi : net.spatialParams()) {
        const Shape& sh = net.params[pi].tensor.shape();
        s.layers.push_back({pi, net.params[pi].owner, Tensor({sh[0], sh[1]}, std::nanf(""))});
    }
    std::istringstream in(readText(path));
    std::string line;
    std::getline(in, line);
    if (line != "layer,out,in,score") throw IoError(path.string() + ": not a saliency score file");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string owner, o, i, v;
        if (!std::getline(row, owner, ',') || !std::getline(row, o, ',') || !std::getline(row, i, ',') ||
            !std::getline(row, v))
            throw IoError(path.string() + ": malformed row '" + line + "'");
        auto it = std::find_if(s.layers.begin(), s.layers.end(), [&](const auto& l) { return l.owner == owner; });
        if (it == s.layers.end()) throw ConfigError(path.string() + ": layer " + owner + " is not in the network");
        try {
            it->scores.at(std::stoul(o), std::stoul(i)) = std::stof(v);
        } catch (const std::exception&) {
            throw IoError(path.string() + ": malformed row '" + line + "'");
        }
    }
    for (const auto& l : s.layers)
        for (float v : l.scores.data())
            if (std::isnan(v)) throw ConfigError(path.string() + ": scores do not cover layer " + l.owner);
    return s;
}

std::string filterGridSvg(const Tensor& kernels) {
    const std::size_t n = kernels.dim(0), h = kernels.dim(1), w = kernels.dim(2);
    const auto [lo, hi] = std::minmax_element(kernels.data().begin(), kernels.data().end());
    const double vmin = n ? *lo : 0.0, vmax = n ? *hi : 0.0;
    const std::size_t cols = std::max<std::size_t>(1, std::size_t(std::ceil(std::sqrt(double(n)))));
    const std::size_t rows = (n + cols - 1) / cols;
    constexpr std::size_t cell = 12, gap = 8;
    const std::size_t tileW = w * cell + gap, tileH = h * cell + gap;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * tileW + gap << "\" height=\""
      << rows * tileH + gap << "\">\n";
    const auto& lut = colormap();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t x0 = gap + (k % cols) * tileW, y0 = gap + (k / cols) * tileH;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const double v = kernels[(k * h + y) * w + x];
                const std::size_t idx =
                    vmax > vmin ? std::min<std::size_t>(255, std::size_t((v - vmin) / (vmax - vmin) * 256.0)) : 128;
                const Rgb& c = lut[idx];
                s << "<rect x=\"" << x0 + x * cell << "\" y=\"" << y0 + y * cell << "\" width=\"" << cell
                  << "\" height=\"" << cell << "\" fill=\"rgb(" << int(c[0]) << "," << int(c[1]) << "," << int(c[2])
                  << ")\"/>\n";
            }
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace steerlab::cli
