#include "dpcc/kdtree.hpp"

#include <algorithm>
#include <queue>

namespace dpcc {

namespace {

constexpr u32 kLeafSize = 8;

i64 l1_to_box(const Vec3i& q, const Vec3i& lo, const Vec3i& hi) {
  i64 d = 0;
  for (int a = 0; a < 3; ++a) {
    i64 v = q[a];
    if (v < lo[a]) d += lo[a] - v;
    else if (v > hi[a]) d += v - hi[a];
  }
  return d;
}

i64 l2sq_to_box(const Vec3i& q, const Vec3i& lo, const Vec3i& hi) {
  i64 d = 0;
  for (int a = 0; a < 3; ++a) {
    i64 v = q[a], e = 0;
    if (v < lo[a]) e = lo[a] - v;
    else if (v > hi[a]) e = v - hi[a];
    d += e * e;
  }
  return d;
}

}  // namespace

KdTree::KdTree(std::span<const Vec3i> positions, std::vector<u32> ids)
  : positions_(positions), ids_(std::move(ids)) {
  if (!ids_.empty()) {
    nodes_.reserve(ids_.size() / kLeafSize * 2 + 2);
    root_ = build(0, u32(ids_.size()));
  }
}

i32 KdTree::build(u32 begin, u32 end) {
  Node node;
  node.bb_min = {INT32_MAX, INT32_MAX, INT32_MAX};
  node.bb_max = {INT32_MIN, INT32_MIN, INT32_MIN};
  for (u32 i = begin; i < end; ++i) {
    const Vec3i& p = positions_[ids_[i]];
    node.bb_min.x = std::min(node.bb_min.x, p.x);
    node.bb_min.y = std::min(node.bb_min.y, p.y);
    node.bb_min.z = std::min(node.bb_min.z, p.z);
    node.bb_max.x = std::max(node.bb_max.x, p.x);
    node.bb_max.y = std::max(node.bb_max.y, p.y);
    node.bb_max.z = std::max(node.bb_max.z, p.z);
  }

  i64 ex = i64(node.bb_max.x) - node.bb_min.x;
  i64 ey = i64(node.bb_max.y) - node.bb_min.y;
  i64 ez = i64(node.bb_max.z) - node.bb_min.z;
  bool degenerate = ex == 0 && ey == 0 && ez == 0;

  if (end - begin <= kLeafSize || degenerate) {
    node.begin = begin;
    node.end = end;
    nodes_.push_back(node);
    return i32(nodes_.size()) - 1;
  }

  int axis = 0;
  if (ey > ex) axis = 1;
  if (ez > (axis == 0 ? ex : ey)) axis = 2;
  u32 mid = (begin + end) / 2;
  std::nth_element(ids_.begin() + begin, ids_.begin() + mid, ids_.begin() + end,
                   [&](u32 a, u32 b) {
                     i32 va = positions_[a][axis], vb = positions_[b][axis];
                     if (va != vb) return va < vb;
                     return a < b;
                   });
  node.axis = i8(axis);
  node.split = positions_[ids_[mid]][axis];

  i32 self = i32(nodes_.size());
  nodes_.push_back(node);
  i32 left = build(begin, mid);
  i32 right = build(mid, end);
  nodes_[std::size_t(self)].left = left;
  nodes_[std::size_t(self)].right = right;
  return self;
}

template <typename Dist, typename Accept>
void KdTree::search(int node_idx, const Vec3i& query, const Dist& dist,
                    const Accept& accept, i64& worst) const {
  const Node& node = nodes_[std::size_t(node_idx)];
  if (node.axis < 0) {
    for (u32 i = node.begin; i < node.end; ++i)
      accept(ids_[i], dist(query, positions_[ids_[i]]));
    return;
  }
  // Visit the child on the query's side first; prune only on strict excess
  // so equal-distance ties can still surface a smaller index.
  int first = node.left, second = node.right;
  if (query[node.axis] > node.split) std::swap(first, second);
  for (int child : {first, second}) {
    const Node& c = nodes_[std::size_t(child)];
    i64 bound = dist.box(query, c.bb_min, c.bb_max);
    if (bound <= worst) search(child, query, dist, accept, worst);
  }
}

namespace {

struct L1Dist {
  i64 operator()(const Vec3i& a, const Vec3i& b) const { return manhattan(a, b); }
  i64 box(const Vec3i& q, const Vec3i& lo, const Vec3i& hi) const {
    return l1_to_box(q, lo, hi);
  }
};

struct L2Dist {
  i64 operator()(const Vec3i& a, const Vec3i& b) const { return euclidean_sq(a, b); }
  i64 box(const Vec3i& q, const Vec3i& lo, const Vec3i& hi) const {
    return l2sq_to_box(q, lo, hi);
  }
};

struct HitWorse {
  bool operator()(const KdTree::Hit& a, const KdTree::Hit& b) const {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.index < b.index;
  }
};

}  // namespace

std::vector<KdTree::Hit> KdTree::knn_manhattan(const Vec3i& query, int k) const {
  std::vector<Hit> heap;  // max-heap by (dist, index)
  if (root_ < 0 || k <= 0) return heap;
  heap.reserve(std::size_t(k));
  i64 worst = INT64_MAX;

  auto accept = [&](u32 idx, i64 d) {
    Hit h{d, idx};
    if (int(heap.size()) < k) {
      heap.push_back(h);
      std::push_heap(heap.begin(), heap.end(), HitWorse{});
    } else if (HitWorse{}(h, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), HitWorse{});
      heap.back() = h;
      std::push_heap(heap.begin(), heap.end(), HitWorse{});
    }
    if (int(heap.size()) == k) worst = heap.front().dist;
  };

  search(root_, query, L1Dist{}, accept, worst);
  std::sort_heap(heap.begin(), heap.end(), HitWorse{});
  return heap;
}

KdTree::Hit KdTree::nearest_euclidean(const Vec3i& query) const {
  if (root_ < 0) fail(ErrorKind::kInternal, "nearest query on empty KdTree");
  Hit best{INT64_MAX, UINT32_MAX};
  i64 worst = INT64_MAX;
  auto accept = [&](u32 idx, i64 d) {
    if (d < best.dist || (d == best.dist && idx < best.index)) {
      best = {d, idx};
      worst = d;
    }
  };
  search(root_, query, L2Dist{}, accept, worst);
  return best;
}

}  // namespace dpcc
