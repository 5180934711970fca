#pragma once

#include <span>
#include <vector>

#include "dpcc/common.hpp"
#include "dpcc/lod.hpp"

namespace dpcc {

struct PartitionConfig {
  u32 batch_size = 1024;       // N, points per batch
  u32 batches_per_block = 32;  // target block size in batches
  u64 seed = 0x5ca1ab1e;       // k-means seed; travels in the header

  bool operator==(const PartitionConfig&) const = default;
};

/// Average filter over the 50 nearest base points (Manhattan metric,
/// self-inclusive, index tie-break); one smoothed value per base point.
std::vector<double> smooth_base_attributes(std::span<const Vec3i> positions,
                                           std::span<const u32> base_ids,
                                           std::span<const i32> channel_values,
                                           int radius_points = 50);

/// Deterministic k-means: seeded k-means++ init, Lloyd iterations capped at
/// 20, assignment ties to the lower cluster index, empty clusters reseeded
/// to the point farthest from its centroid. `features` is row-major n x dim.
std::vector<u32> kmeans_base(std::span<const double> features, std::size_t n, int dim,
                             u32 num_clusters, u64 seed,
                             std::vector<double>* objective_trace = nullptr);

/// Each inference point inherits the bkid of its Euclidean-nearest base
/// point (ties to the lower index).
std::vector<u32> assign_inference_blocks(std::span<const Vec3i> positions,
                                         std::span<const u32> inference_ids,
                                         std::span<const u32> base_ids,
                                         std::span<const u32> base_bkids);

/// Morton-ordered N-point batches of one block's points within one layer;
/// the final batch is padded by repeating its last real point.
struct Batch {
  std::vector<u32> points;  // size N
  u32 pad_count = 0;
};
std::vector<Batch> batch_blocks(std::span<const u32> block_points_in_layer, u32 batch_size);

/// Median-split KD-tree partitioner (cycling axes) used only as the
/// ablation baseline; returns 2^depth blocks.
std::vector<u32> kdtree_partition(std::span<const Vec3i> positions,
                                  std::span<const u32> ids, int depth);

//============================================================================
// Full partitioning pass over an LoD structure
//============================================================================

struct BlockAssignment {
  u32 num_clusters = 1;
  std::vector<u32> base_ids;       // base points, ascending cloud index
  std::vector<u32> inference_ids;  // inference points, ascending cloud index
  std::vector<u32> bkid_of_point;  // per cloud point

  u64 digest() const;
};

struct LayerBatch {
  u16 layer = 0;  // 1-based refinement layer id
  u32 block = 0;
  Batch batch;
};

/// Cluster count rule: ceil(N_infer / (batches_per_block * N)), clamped to
/// [1, N_base]. Reads only geometry and already-decoded base attributes, so
/// the decoder replays it bit-identically from the header seed.
BlockAssignment compute_partition(std::span<const Vec3i> positions, const LodStructure& lod,
                                  std::span<const std::vector<i32>> base_channel_values,
                                  const PartitionConfig& config);

/// All coding batches in (layer, block, batch) order.
std::vector<LayerBatch> make_batches(const LodStructure& lod,
                                     const BlockAssignment& assignment, u32 batch_size);

u64 batches_digest(std::span<const LayerBatch> batches);

}  // namespace dpcc
