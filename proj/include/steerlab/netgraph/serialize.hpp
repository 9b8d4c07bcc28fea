#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "steerlab/netgraph/graph.hpp"
#include "steerlab/numerics/errors.hpp"

namespace steerlab {

inline constexpr int kGraphSchemaVersion = 1;

enum class SerializeErrc { Malformed, Checksum, UnknownKind, OffsetOverlap, InvalidGraph };

class SerializationError : public IoError {
public:
    SerializationError(SerializeErrc code, const std::string& what) : IoError(what), code_(code) {}
    SerializeErrc code() const noexcept { return code_; }

private:
    SerializeErrc code_;
};

struct SerializedGraph {
    std::string descriptor;            // .nfg text
    std::vector<std::uint8_t> weights;  // .nfw little-endian float32 blob
};

/// 64-bit FNV-1a over a byte range.
std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size);

SerializedGraph serialize(const NetworkGraph& net);
NetworkGraph deserialize(const std::string& descriptor, const std::vector<std::uint8_t>& weights);

/// Writes `path` (descriptor) and the blob next to it with extension .nfw.
void saveGraph(const NetworkGraph& net, const std::filesystem::path& path);
NetworkGraph loadGraph(const std::filesystem::path& path);
std::filesystem::path weightsPathFor(const std::filesystem::path& descriptorPath);

}  // namespace steerlab
