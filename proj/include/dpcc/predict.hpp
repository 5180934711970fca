#pragma once

#include <span>

#include "dpcc/common.hpp"
#include "dpcc/lod.hpp"

namespace dpcc {

/// Inverse-distance-weighted prediction over one point's neighbors:
///   round( sum_j a_j / d_j^2  /  sum_j 1 / d_j^2 )
/// with rounding half-away-from-zero. Distances must be >= 1.
i32 idw_predict(std::span<const i32> neighbor_attrs, std::span<const i64> neighbor_dists);

/// Same, reading attributes for a neighbor list out of a channel array.
i32 idw_predict_point(std::span<const i32> channel_values,
                      std::span<const Neighbor> neighbors);

/// Residuals a_i - a^_i for every point of one refinement layer (0-based
/// index into lod.layers). A point with no neighbors (only ever the first
/// point of the cloud, which is carried as a raw literal) contributes 0.
std::vector<i32> residuals_for_layer(std::span<const i32> channel_values,
                                     const LodStructure& lod, int layer_index);

inline i32 reconstruct(i32 predicted, i32 residual) { return predicted + residual; }

}  // namespace dpcc
