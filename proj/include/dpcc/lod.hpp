#pragma once

#include <span>
#include <vector>

#include "dpcc/common.hpp"
#include "dpcc/kdtree.hpp"

namespace dpcc {

struct LodConfig {
  int base_layers = 8;    // T
  int total_layers = 24;  // L
  int neighbors = 11;     // k
  // Per-level minimum-distance thresholds for the Base Layer, strictly
  // decreasing. Empty means: calibrate so the Base Layer holds ~5% of the
  // points (geometric halving from d_min). The realized schedule always
  // travels in the bitstream header so the decoder replays it.
  std::vector<u32> schedule;
};

struct Neighbor {
  u32 index;  // cloud point index
  i64 dist;   // Manhattan distance, >= 1
};

struct LodStructure {
  std::vector<std::vector<u32>> layers;  // R_1..R_L as cloud point indices
  int base_layer_count = 0;              // T
  std::vector<u32> realized_schedule;
  // neighbors[p]: k entries sorted by (dist, index); empty only for the
  // very first point of the cloud, which has no prediction context.
  std::vector<std::vector<Neighbor>> neighbors;
  std::vector<u16> layer_of_point;  // 1-based layer id

  std::size_t point_count() const { return layer_of_point.size(); }
  u64 digest() const;
};

/// Greedy distance subsampling: scanning remaining points in Morton order,
/// a point is accepted at level t only if its Manhattan distance to every
/// already-accepted point exceeds schedule[t]. Returns R_1..R_T plus the
/// never-accepted remainder.
struct BaseLayers {
  std::vector<std::vector<u32>> layers;
  std::vector<u32> remainder;
};
BaseLayers build_base_layers(std::span<const Vec3i> positions, int base_layer_count,
                             std::span<const u32> schedule);

/// Remainder index i joins layer i mod layer_count; sizes differ by <= 1.
std::vector<std::vector<u32>> build_inference_layers(std::span<const u32> remainder,
                                                     int layer_count);

/// Exact k nearest candidates by (Manhattan distance, index) for each query;
/// lists shorter than k are padded by repeating the nearest entry.
std::vector<std::vector<Neighbor>> knn_for_layer(std::span<const Vec3i> positions,
                                                 std::span<const u32> queries,
                                                 std::span<const u32> candidates,
                                                 int k);

/// Single-pass greedy subsample count at one threshold; calibration helper.
std::size_t greedy_subsample_count(std::span<const Vec3i> positions, u32 threshold);

/// Threshold schedule (geometric halving) targeting ~5% base occupancy.
std::vector<u32> calibrate_schedule(std::span<const Vec3i> positions, int base_layer_count);

/// Full hybrid structure: base + inference layers and per-point neighbor
/// lists. Depends on geometry and config only, so the decoder rebuilds it
/// bit-identically.
LodStructure build_lod(std::span<const Vec3i> positions, const LodConfig& config);

}  // namespace dpcc
