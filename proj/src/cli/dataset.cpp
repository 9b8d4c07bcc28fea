#include "steerlab/cli/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "steerlab/netgraph/serialize.hpp"
#include "steerlab/numerics/errors.hpp"
#include "steerlab/numerics/rng.hpp"

namespace steerlab {

std::string toString(DatasetKind kind) { return kind == DatasetKind::ShapesSeg ? "shapes-seg" : "blobs-cls5"; }

DatasetKind parseDatasetKind(const std::string& name) {
    if (name == "shapes-seg") return DatasetKind::ShapesSeg;
    if (name == "blobs-cls5") return DatasetKind::BlobsCls5;
    throw ConfigError("unknown dataset '" + name + "' (shapes-seg, blobs-cls5)");
}

LossKind lossFor(DatasetKind kind) {
    return kind == DatasetKind::ShapesSeg ? LossKind::PixelwiseBCE : LossKind::FocalMultiLabel;
}

Dataset synthShapesSeg(std::size_t n, std::size_t size, std::uint64_t seed) {
    if (size < 8) throw ConfigError("shapes-seg images need size >= 8");
    const RngStream master(seed);
    Dataset d{Tensor({n, 1, size, size}), Tensor({n, 1, size, size}), std::nullopt};
    const double s = double(size);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng = master.derive(i);
        const double gx = rng.uniform(-0.3, 0.3), gy = rng.uniform(-0.3, 0.3);
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x)
                d.inputs.at(i, 0, y, x) =
                    static_cast<float>(gx * (double(x) / s - 0.5) + gy * (double(y) / s - 0.5) + 0.15 * rng.normal());
        const std::size_t shapes = 1 + rng.below(3);
        for (std::size_t k = 0; k < shapes; ++k) {
            const bool ellipse = rng.below(2) == 0;
            const double cx = rng.uniform(0.15 * s, 0.85 * s), cy = rng.uniform(0.15 * s, 0.85 * s);
            const double rx = rng.uniform(2.5, s / 5), ry = rng.uniform(2.5, s / 5);
            const double level = rng.uniform(0.6, 1.1);
            for (std::size_t y = 0; y < size; ++y)
                for (std::size_t x = 0; x < size; ++x) {
                    const double dx = (double(x) + 0.5 - cx) / rx, dy = (double(y) + 0.5 - cy) / ry;
                    const bool in = ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
                    if (!in || d.targets.at(i, 0, y, x) != 0.0f) continue;
                    d.targets.at(i, 0, y, x) = 1.0f;
                    d.inputs.at(i, 0, y, x) += static_cast<float>(level);
                }
        }
    }
    return d;
}

namespace {

double texture(std::size_t cls, double x, double y) {
    constexpr double tau = 2 * std::numbers::pi;
    switch (cls) {
        case 0:
            return std::sin(tau * y / 4);
        case 1:
            return std::sin(tau * x / 4);
        case 2:
            return std::sin(tau * x / 6) * std::sin(tau * y / 6) > 0 ? 1.0 : -1.0;
        case 3:
            return std::sin(tau * (x + y) / 5);
        default:
            return 1.0;
    }
}

}  // namespace

Dataset synthBlobsCls5(std::size_t n, std::size_t size, std::uint64_t seed) {
    if (size < 8) throw ConfigError("blobs-cls5 images need size >= 8");
    const RngStream master(seed);
    Dataset d{Tensor({n, 1, size, size}), Tensor({n, kBlobClasses}), Tensor({n, kBlobClasses}, 1.0f)};
    const double s = double(size), radius = s / 5;
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng = master.derive(i);
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x) d.inputs.at(i, 0, y, x) = static_cast<float>(0.1 * rng.normal());
        for (std::size_t c = 0; c < kBlobClasses; ++c) {
            const bool present = rng.below(2) == 1;
            d.targets.at(i, c) = present ? 1.0f : 0.0f;
            if (rng.uniform01() < 0.1) (*d.mask).at(i, c) = 0.0f;
            if (!present) continue;
            const double cx = rng.uniform(radius, s - radius), cy = rng.uniform(radius, s - radius);
            const double phase = rng.uniform(0.0, 4.0);
            for (std::size_t y = 0; y < size; ++y)
                for (std::size_t x = 0; x < size; ++x) {
                    const double dx = double(x) - cx, dy = double(y) - cy;
                    const double window = std::exp(-(dx * dx + dy * dy) / (2 * radius * radius / 2.0));
                    if (window < 1e-3) continue;
                    d.inputs.at(i, 0, y, x) += static_cast<float>(0.8 * window * texture(c, double(x) + phase, double(y) + phase));
                }
        }
    }
    return d;
}

Dataset synthDataset(DatasetKind kind, std::size_t n, std::size_t size, std::uint64_t seed) {
    return kind == DatasetKind::ShapesSeg ? synthShapesSeg(n, size, seed) : synthBlobsCls5(n, size, seed);
}

namespace {

constexpr const char* kMagic = "SLDS 1";

std::string shapeText(const Shape& s) {
    std::string t;
    for (std::size_t i = 1; i < s.size(); ++i) t += (i > 1 ? " " : "") + std::to_string(s[i]);
    return t;
}

void appendFloats(std::string& out, const Tensor& t) {
    for (float v : t.data()) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
    }
}

Tensor readFloats(const std::string& bytes, std::size_t& pos, Shape shape) {
    Tensor t(std::move(shape));
    if (bytes.size() - pos < 4 * t.size()) throw IoError("dataset body is truncated");
    for (float& v : t.data()) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t(static_cast<unsigned char>(bytes[pos++])) << (8 * b);
        std::memcpy(&v, &bits, 4);
    }
    return t;
}

Shape parseDims(std::istringstream& line, std::size_t n) {
    Shape s{n};
    std::size_t v;
    while (line >> v) s.push_back(v);
    return s;
}

}  // namespace

std::string encodeDataset(const StoredDataset& d) {
    const std::size_t n = d.data.size();
    if (n > 0) d.data.validate();
    if (d.data.inputs.rank() != 4 || d.data.targets.rank() < 2)
        throw DimensionError("dataset: inputs must be (N,C,H,W) and targets at least (N,T)");
    std::string body;
    appendFloats(body, d.data.inputs);
    appendFloats(body, d.data.targets);
    if (d.data.mask) appendFloats(body, *d.data.mask);
    const Shape& in = d.data.inputs.shape();
    const Shape& tg = d.data.targets.shape();
    char sum[17];
    std::snprintf(sum, sizeof sum, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(reinterpret_cast<const std::uint8_t*>(body.data()), body.size())));
    std::string h = std::string(kMagic) + "\n";
    h += "kind " + toString(d.kind) + "\n";
    h += "count " + std::to_string(n) + "\n";
    h += "input " + shapeText(in) + "\n";
    h += "target " + shapeText(tg) + "\n";
    h += std::string("mask ") + (d.data.mask ? "1" : "0") + "\n";
    h += "dtype float32-le\n";
    h += "checksum " + std::string(sum) + "\n";
    h += "end\n";
    return h + body;
}

StoredDataset decodeDataset(const std::string& bytes) {
    std::size_t pos = 0;
    auto nextLine = [&]() -> std::string {
        const std::size_t e = bytes.find('\n', pos);
        if (e == std::string::npos) throw IoError("dataset header is truncated");
        std::string l = bytes.substr(pos, e - pos);
        pos = e + 1;
        return l;
    };
    if (nextLine() != kMagic) throw IoError("not a dataset file (bad magic)");
    StoredDataset out;
    std::size_t n = 0;
    bool hasMask = false;
    Shape in, tg;
    std::string checksum;
    for (std::string l = nextLine(); l != "end"; l = nextLine()) {
        std::istringstream s(l);
        std::string key;
        s >> key;
        try {
            if (key == "kind") {
                std::string k;
                s >> k;
                out.kind = parseDatasetKind(k);
            } else if (key == "count") {
                s >> n;
            } else if (key == "input") {
                in = parseDims(s, 0);
            } else if (key == "target") {
                tg = parseDims(s, 0);
            } else if (key == "mask") {
                s >> hasMask;
            } else if (key == "dtype") {
                std::string t;
                s >> t;
                if (t != "float32-le") throw IoError("unsupported dtype " + t);
            } else if (key == "checksum") {
                s >> checksum;
            }
        } catch (const ConfigError& e) {
            throw IoError(std::string("dataset header: ") + e.what());
        }
    }
    if (in.size() != 4 || tg.size() < 2) throw IoError("dataset header lacks input/target shapes");
    char sum[17];
    std::snprintf(sum, sizeof sum, "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a64(reinterpret_cast<const std::uint8_t*>(bytes.data()) + pos, bytes.size() - pos)));
    if (checksum != sum) throw IoError("dataset checksum mismatch");
    in[0] = tg[0] = n;
    out.data.inputs = readFloats(bytes, pos, in);
    out.data.targets = readFloats(bytes, pos, tg);
    if (hasMask) out.data.mask = readFloats(bytes, pos, tg);
    if (pos != bytes.size()) throw IoError("dataset body has trailing bytes");
    return out;
}

void saveDataset(const StoredDataset& d, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    const std::string bytes = encodeDataset(d);
    f.write(bytes.data(), std::streamsize(bytes.size()));
    if (!f) throw IoError("cannot write " + path.string());
}

StoredDataset loadDataset(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return decodeDataset(s.str());
}

}  // namespace steerlab
