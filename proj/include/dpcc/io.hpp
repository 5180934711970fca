#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpcc/common.hpp"

namespace dpcc {

enum class AttributeMode { kSingleChannel, kRgbColor };

struct AttributeConfig {
  AttributeMode mode = AttributeMode::kSingleChannel;
  std::vector<std::string> names;   // one per channel
  std::vector<int> bit_depths;      // 8 on the input side

  int channel_count() const { return int(names.size()); }
};

/// Canonical in-memory point cloud: unique voxel positions in ascending
/// Morton order plus per-point attribute channels.
struct PointCloud {
  std::vector<Vec3i> positions;
  std::vector<std::vector<i32>> channels;  // channels[c][point]
  AttributeConfig attributes;
  int geometry_bits = 0;

  std::size_t size() const { return positions.size(); }
};

/// Bit-interleaved z-order key; x occupies the lowest interleave lane.
/// Coordinates must be < 2^21.
u64 morton_code(const Vec3i& p);

/// Inverse of morton_code.
Vec3i morton_decode(u64 code);

/// Drop duplicate positions (first occurrence in current order wins), then
/// sort points into ascending Morton order. Idempotent.
void canonicalize(PointCloud& cloud);

/// Parse an ASCII or binary-little-endian PLY carrying integer x/y/z and
/// either red/green/blue or a single 8-bit scalar attribute. The result is
/// canonicalized. `geometry_bits`, when given, is validated against the
/// coordinates; otherwise the smallest covering depth is inferred.
PointCloud load_ply(const std::vector<u8>& bytes, std::optional<int> geometry_bits = {});

PointCloud load_ply_file(const std::string& path, std::optional<int> geometry_bits = {});

/// Serialize as binary-little-endian PLY. load_ply(save_ply(c)) == c.
std::vector<u8> save_ply(const PointCloud& cloud);

void save_ply_file(const PointCloud& cloud, const std::string& path);

}  // namespace dpcc
