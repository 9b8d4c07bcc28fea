#include "steerlab/netgraph/serialize.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace steerlab {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kFormat = "steerlab-graph";

[[noreturn]] void fail(SerializeErrc code, const std::string& msg) { throw SerializationError(code, msg); }

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

void appendFloats(std::vector<std::uint8_t>& blob, const Tensor& t) {
    const std::size_t start = blob.size();
    blob.resize(start + t.size() * 4);
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(t[i]);
        for (int b = 0; b < 4; ++b) blob[start + i * 4 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
}

Tensor readFloats(const std::vector<std::uint8_t>& blob, std::size_t offset, const Shape& shape) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t(blob[offset + i * 4 + b]) << (8 * b);
        t[i] = std::bit_cast<float>(bits);
    }
    return t;
}

json attrsToJson(const LayerNode& n) {
    const LayerAttrs& a = n.attrs;
    json j = json::object();
    switch (n.kind) {
        case LayerKind::Input:
            j["channels"] = a.outChannels;
            break;
        case LayerKind::Conv2d:
        case LayerKind::PointwiseConv:
            j["in_channels"] = a.inChannels;
            j["out_channels"] = a.outChannels;
            j["kernel"] = {a.kernelH, a.kernelW};
            j["stride"] = a.stride;
            j["padding"] = a.padding;
            j["groups"] = a.groups;
            j["bias"] = a.bias;
            break;
        case LayerKind::BatchNorm:
            j["channels"] = a.inChannels;
            break;
        case LayerKind::Linear:
            j["in_features"] = a.inChannels;
            j["out_features"] = a.outChannels;
            j["bias"] = a.bias;
            break;
        case LayerKind::Activation:
            j["function"] = toString(a.activation);
            break;
        case LayerKind::BilinearUpsample:
            j["scale"] = a.scale;
            break;
        case LayerKind::ScalarFusion:
            j["scalars"] = a.fusionScalars;
            break;
        default:
            break;
    }
    return j;
}

LayerAttrs attrsFromJson(LayerKind kind, const json& j) {
    LayerAttrs a;
    switch (kind) {
        case LayerKind::Input:
            a.outChannels = j.at("channels").get<std::size_t>();
            break;
        case LayerKind::Conv2d:
        case LayerKind::PointwiseConv:
            a.inChannels = j.at("in_channels").get<std::size_t>();
            a.outChannels = j.at("out_channels").get<std::size_t>();
            a.kernelH = j.at("kernel").at(0).get<std::size_t>();
            a.kernelW = j.at("kernel").at(1).get<std::size_t>();
            a.stride = j.at("stride").get<std::size_t>();
            a.padding = j.at("padding").get<std::size_t>();
            a.groups = j.at("groups").get<std::size_t>();
            a.bias = j.at("bias").get<bool>();
            break;
        case LayerKind::BatchNorm:
            a.inChannels = a.outChannels = j.at("channels").get<std::size_t>();
            break;
        case LayerKind::Linear:
            a.inChannels = j.at("in_features").get<std::size_t>();
            a.outChannels = j.at("out_features").get<std::size_t>();
            a.bias = j.at("bias").get<bool>();
            break;
        case LayerKind::Activation:
            try {
                a.activation = parseActivationKind(j.at("function").get<std::string>());
            } catch (const GraphError& e) {
                fail(SerializeErrc::UnknownKind, e.what());
            }
            break;
        case LayerKind::BilinearUpsample:
            a.scale = j.at("scale").get<std::size_t>();
            break;
        case LayerKind::ScalarFusion:
            a.fusionScalars = j.at("scalars").get<std::size_t>();
            break;
        default:
            break;
    }
    return a;
}

}  // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

SerializedGraph serialize(const NetworkGraph& net) {
    requireValidGraph(net);
    SerializedGraph out;
    json doc;
    doc["format"] = kFormat;
    doc["schema_version"] = kGraphSchemaVersion;
    doc["notes"] = net.notes;
    doc["inputs"] = net.inputs;
    doc["outputs"] = net.outputs;
    json nodes = json::array();
    json edges = json::array();
    for (const auto& n : net.nodes) {
        nodes.push_back({{"id", n.id}, {"kind", toString(n.kind)}, {"attrs", attrsToJson(n)}});
        for (std::size_t k = 0; k < n.inputs.size(); ++k)
            edges.push_back({{"from", n.inputs[k]}, {"to", n.id}, {"slot", k}});
    }
    doc["nodes"] = nodes;
    doc["edges"] = edges;
    json params = json::array();
    for (const auto& p : net.params) {
        const std::size_t offset = out.weights.size();
        appendFloats(out.weights, p.tensor);
        params.push_back({{"owner", p.owner},
                          {"name", p.name},
                          {"shape", p.tensor.shape()},
                          {"fixed", p.fixed ? 1 : 0},
                          {"spatial", p.spatial ? 1 : 0},
                          {"buffer", p.buffer ? 1 : 0},
                          {"offset", offset},
                          {"bytes", p.tensor.size() * 4}});
    }
    doc["params"] = params;
    doc["blob"] = {{"bytes", out.weights.size()}, {"fnv1a64", hex64(fnv1a64(out.weights.data(), out.weights.size()))}};
    out.descriptor = doc.dump(2) + "\n";
    return out;
}

NetworkGraph deserialize(const std::string& descriptor, const std::vector<std::uint8_t>& weights) {
    json doc;
    try {
        doc = json::parse(descriptor);
    } catch (const json::exception& e) {
        fail(SerializeErrc::Malformed, std::string("descriptor is not valid JSON: ") + e.what());
    }
    NetworkGraph net;
    try {
        if (doc.at("format").get<std::string>() != kFormat) fail(SerializeErrc::Malformed, "not a steerlab graph descriptor");
        const int version = doc.at("schema_version").get<int>();
        if (version != kGraphSchemaVersion)
            fail(SerializeErrc::Malformed, "unsupported schema_version " + std::to_string(version));

        const json& blob = doc.at("blob");
        if (blob.at("bytes").get<std::size_t>() != weights.size())
            fail(SerializeErrc::Checksum, "weight blob has " + std::to_string(weights.size()) + " bytes, descriptor says " +
                                              std::to_string(blob.at("bytes").get<std::size_t>()));
        if (blob.at("fnv1a64").get<std::string>() != hex64(fnv1a64(weights.data(), weights.size())))
            fail(SerializeErrc::Checksum, "weight blob checksum mismatch");

        net.notes = doc.at("notes").get<std::vector<std::string>>();
        net.inputs = doc.at("inputs").get<std::vector<std::string>>();
        net.outputs = doc.at("outputs").get<std::vector<std::string>>();
        for (const json& jn : doc.at("nodes")) {
            LayerNode n;
            n.id = jn.at("id").get<std::string>();
            try {
                n.kind = parseLayerKind(jn.at("kind").get<std::string>());
            } catch (const GraphError& e) {
                fail(SerializeErrc::UnknownKind, e.what());
            }
            n.attrs = attrsFromJson(n.kind, jn.at("attrs"));
            net.nodes.push_back(std::move(n));
        }
        for (const json& je : doc.at("edges")) {
            const auto to = net.findNode(je.at("to").get<std::string>());
            if (!to) fail(SerializeErrc::Malformed, "edge into unknown node " + je.at("to").get<std::string>());
            auto& ins = net.nodes[*to].inputs;
            const std::size_t slot = je.at("slot").get<std::size_t>();
            if (slot >= ins.size()) ins.resize(slot + 1);
            ins[slot] = je.at("from").get<std::string>();
        }

        std::vector<std::pair<std::size_t, std::size_t>> ranges;
        for (const json& jp : doc.at("params")) {
            ParamTensor p;
            p.owner = jp.at("owner").get<std::string>();
            p.name = jp.at("name").get<std::string>();
            const Shape shape = jp.at("shape").get<Shape>();
            p.fixed = jp.at("fixed").get<int>() != 0;
            p.spatial = jp.at("spatial").get<int>() != 0;
            p.buffer = jp.at("buffer").get<int>() != 0;
            const std::size_t offset = jp.at("offset").get<std::size_t>();
            const std::size_t bytes = jp.at("bytes").get<std::size_t>();
            if (bytes != shapeVolume(shape) * 4)
                fail(SerializeErrc::Malformed, p.owner + "/" + p.name + ": byte count does not match shape");
            if (offset > weights.size() || bytes > weights.size() - offset)
                fail(SerializeErrc::Malformed, p.owner + "/" + p.name + ": range exceeds the weight blob");
            ranges.emplace_back(offset, bytes);
            p.tensor = readFloats(weights, offset, shape);
            net.params.push_back(std::move(p));
        }
        std::sort(ranges.begin(), ranges.end());
        for (std::size_t i = 1; i < ranges.size(); ++i)
            if (ranges[i - 1].first + ranges[i - 1].second > ranges[i].first)
                fail(SerializeErrc::OffsetOverlap, "parameter byte ranges overlap at offset " + std::to_string(ranges[i].first));
    } catch (const json::exception& e) {
        fail(SerializeErrc::Malformed, std::string("descriptor field error: ") + e.what());
    }
    const GraphStatus status = validateGraph(net);
    if (!status.ok()) fail(SerializeErrc::InvalidGraph, "descriptor graph is invalid: " + status.message);
    return net;
}

std::filesystem::path weightsPathFor(const std::filesystem::path& descriptorPath) {
    std::filesystem::path p = descriptorPath;
    p.replace_extension(".nfw");
    return p;
}

void saveGraph(const NetworkGraph& net, const std::filesystem::path& path) {
    const SerializedGraph s = serialize(net);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream d(path, std::ios::binary);
    if (!d) throw IoError("cannot write " + path.string());
    d << s.descriptor;
    std::ofstream w(weightsPathFor(path), std::ios::binary);
    if (!w) throw IoError("cannot write " + weightsPathFor(path).string());
    w.write(reinterpret_cast<const char*>(s.weights.data()), std::streamsize(s.weights.size()));
    if (!d || !w) throw IoError("write failed for " + path.string());
}

NetworkGraph loadGraph(const std::filesystem::path& path) {
    std::ifstream d(path, std::ios::binary);
    if (!d) throw IoError("cannot read " + path.string());
    std::stringstream text;
    text << d.rdbuf();
    std::ifstream w(weightsPathFor(path), std::ios::binary);
    if (!w) throw IoError("cannot read " + weightsPathFor(path).string());
    std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(w)), std::istreambuf_iterator<char>());
    return deserialize(text.str(), blob);
}

}  // namespace steerlab
