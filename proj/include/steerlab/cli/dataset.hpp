#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "steerlab/engine/train.hpp"

namespace steerlab {

enum class DatasetKind { ShapesSeg, BlobsCls5 };

std::string toString(DatasetKind kind);
/// Throws ConfigError.
DatasetKind parseDatasetKind(const std::string& name);
LossKind lossFor(DatasetKind kind);

inline constexpr std::size_t kBlobClasses = 5;

/// Grayscale images with 1-3 ellipses or rectangles over a tilted, noisy
/// background; targets are the binary shape masks (N,1,S,S).
Dataset synthShapesSeg(std::size_t n, std::size_t size, std::uint64_t seed);

/// Images holding each of 5 textures independently with probability 1/2.
/// Targets are the 5 presence bits (N,5); the mask zeroes about 10% of the
/// labels as uncertain.
Dataset synthBlobsCls5(std::size_t n, std::size_t size, std::uint64_t seed);

Dataset synthDataset(DatasetKind kind, std::size_t n, std::size_t size, std::uint64_t seed);

struct StoredDataset {
    DatasetKind kind = DatasetKind::ShapesSeg;
    Dataset data;
};

/// Single-file container: a text header (count, shapes, dtype, checksum)
/// closed by "end", then raw little-endian float32 inputs, targets and mask.
std::string encodeDataset(const StoredDataset& d);
StoredDataset decodeDataset(const std::string& bytes);
void saveDataset(const StoredDataset& d, const std::filesystem::path& path);
/// Throws IoError for a missing, truncated or corrupt file.
StoredDataset loadDataset(const std::filesystem::path& path);

}  // namespace steerlab
