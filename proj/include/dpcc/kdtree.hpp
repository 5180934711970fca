#pragma once

#include <span>
#include <vector>

#include "dpcc/common.hpp"

namespace dpcc {

/// Exact nearest-neighbor search over integer voxel positions. Queries
/// return candidates ordered by (distance, point index) so ties resolve to
/// the smaller index; on a Morton-sorted cloud that is the smaller Morton
/// key. Supports Manhattan k-NN and Euclidean single-NN.
class KdTree {
public:
  struct Hit {
    i64 dist;   // L1 distance (knn) or squared L2 distance (nearest)
    u32 index;  // index into the positions array the tree was built over
  };

  KdTree() = default;
  /// `ids` selects the subset of `positions` the tree indexes. `positions`
  /// must outlive the tree.
  KdTree(std::span<const Vec3i> positions, std::vector<u32> ids);

  bool empty() const { return ids_.empty(); }
  std::size_t size() const { return ids_.size(); }

  /// The k candidates with smallest (Manhattan distance, index), ascending.
  /// Returns fewer than k only when the tree holds fewer points.
  std::vector<Hit> knn_manhattan(const Vec3i& query, int k) const;

  /// Single nearest by (squared Euclidean distance, index).
  Hit nearest_euclidean(const Vec3i& query) const;

private:
  struct Node {
    Vec3i bb_min, bb_max;
    u32 begin = 0, end = 0;   // leaf range into ids_
    i32 left = -1, right = -1;
    i8 axis = -1;             // -1 for leaf
    i32 split = 0;
  };

  i32 build(u32 begin, u32 end);

  template <typename Dist, typename Accept>
  void search(int node, const Vec3i& query, const Dist& dist,
              const Accept& accept, i64& worst) const;

  std::span<const Vec3i> positions_;
  std::vector<u32> ids_;
  std::vector<Node> nodes_;
  i32 root_ = -1;
};

}  // namespace dpcc
