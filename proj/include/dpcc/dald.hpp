#pragma once

#include <array>
#include <span>
#include <vector>

#include "dpcc/common.hpp"
#include "dpcc/lod.hpp"

namespace dpcc {

/// Relative-position binning config: per-axis increasing thresholds, last
/// entry +infinity, giving 2n+1 labels per axis and (2n+1)^3 combined.
struct DaldConfig {
  int n = 3;
  std::array<std::vector<double>, 3> thresholds;

  int labels_per_axis() const { return 2 * n + 1; }
  int label_alphabet() const {
    int s = labels_per_axis();
    return s * s * s;
  }
  void validate() const;

  static DaldConfig object_default();  // {0,1,3,inf} on all axes
  static DaldConfig lidar_default();   // {0.2,1,3,inf} x/y, {0.2,0.4,1,inf} z

  bool operator==(const DaldConfig&) const = default;
};

/// Mean |axis offset to nearest neighbor| over a batch, per axis, clamped
/// below at 1e-3 voxels.
std::array<double, 3> batch_mean_axis_distance(std::span<const Vec3i> batch_positions,
                                               std::span<const Vec3i> nearest_positions);

/// Label in [0, 2n]: l = sign(delta)*k + n where t_{k-1} < |delta|/dbar <= t_k.
int axis_label(i64 delta, double dbar, std::span<const double> thresholds, int n);

/// l = l_x + l_y*(2n+1) + l_z*(2n+1)^2.
int combine_label(int lx, int ly, int lz, int n);

//============================================================================
// Descriptor batch: everything the entropy model's embedding stage needs,
// with attribute values already shifted into table-index range (+255 for
// luma-relative and chroma-absolute, +510 for chroma-relative). Built from
// geometry and previously decoded data only, so encoder and decoder agree.
//============================================================================

struct DescriptorBatch {
  int count = 0;     // N, padding included
  int k = 0;
  int channels = 0;  // 1 or 3

  std::vector<double> pos_norm;    // count*3, batch min-max normalized
  std::vector<i32> label_idx;      // count*k
  std::vector<i32> attr_idx;       // (i*k + j)*channels + c
  std::vector<i32> rel_idx;        // (i*k + j)*channels + c
  std::vector<i32> pred_idx;       // i*channels + c
  std::vector<i32> predicted_raw;  // i*channels + c, untranslated a^_i
  std::vector<u8> real_mask;       // count, 0 for padding

  int real_count() const;
};

/// Assemble one batch. `batch_points` are cloud indices, padded entries
/// repeating the last real point; `channel_values` hold the already
/// reconstructed attributes the neighbor lookups read from.
DescriptorBatch build_descriptor_batch(std::span<const Vec3i> positions,
                                       const LodStructure& lod,
                                       std::span<const u32> batch_points,
                                       u32 pad_count,
                                       std::span<const std::vector<i32>> channel_values,
                                       const DaldConfig& config);

}  // namespace dpcc
