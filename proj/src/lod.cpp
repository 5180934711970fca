#include "dpcc/lod.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace dpcc {

namespace {

// Larger than any achievable L1 distance between 21-bit coordinates.
constexpr u64 kMaxL1 = 3ull * ((1u << 21) - 1) + 1;

//============================================================================
// Acceptance grid for greedy subsampling. Cells are threshold-sized, so an
// L1 ball of radius `threshold` spans at most the 27 surrounding cells, and
// accepted points are threshold-separated, keeping occupancy O(1).
//============================================================================

class AcceptGrid {
public:
  AcceptGrid(std::span<const Vec3i> positions, u32 threshold)
    : positions_(positions), cell_(std::max<u32>(1, threshold)), threshold_(threshold) {}

  bool far_enough(const Vec3i& p) const {
    u64 cx = u64(p.x) / cell_, cy = u64(p.y) / cell_, cz = u64(p.z) / cell_;
    for (i64 dz = -1; dz <= 1; ++dz)
      for (i64 dy = -1; dy <= 1; ++dy)
        for (i64 dx = -1; dx <= 1; ++dx) {
          if ((dx < 0 && cx == 0) || (dy < 0 && cy == 0) || (dz < 0 && cz == 0)) continue;
          auto it = cells_.find(key(cx + u64(dx), cy + u64(dy), cz + u64(dz)));
          if (it == cells_.end()) continue;
          for (u32 idx : it->second)
            if (manhattan(p, positions_[idx]) <= i64(threshold_)) return false;
        }
    return true;
  }

  void insert(u32 idx) {
    const Vec3i& p = positions_[idx];
    cells_[key(u64(p.x) / cell_, u64(p.y) / cell_, u64(p.z) / cell_)].push_back(idx);
  }

private:
  static u64 key(u64 cx, u64 cy, u64 cz) { return (cx << 42) | (cy << 21) | cz; }

  std::span<const Vec3i> positions_;
  std::unordered_map<u64, std::vector<u32>> cells_;
  u32 cell_;
  u32 threshold_;
};

std::vector<Neighbor> pad_neighbors(std::vector<KdTree::Hit> hits, int k) {
  std::vector<Neighbor> out;
  out.reserve(std::size_t(k));
  if (hits.empty()) return out;  // only legal for the first point of the cloud
  if (int(hits.size()) > k) hits.resize(std::size_t(k));
  while (int(hits.size()) < k) hits.push_back(hits.front());
  std::sort(hits.begin(), hits.end(), [](const KdTree::Hit& a, const KdTree::Hit& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.index < b.index;
  });
  for (const auto& h : hits) out.push_back({h.index, h.dist});
  return out;
}

}  // namespace

BaseLayers build_base_layers(std::span<const Vec3i> positions, int base_layer_count,
                             std::span<const u32> schedule) {
  if (positions.empty()) fail(ErrorKind::kUsage, "empty cloud");
  if (int(schedule.size()) != base_layer_count)
    fail(ErrorKind::kUsage, "schedule length must equal base layer count");
  for (std::size_t t = 1; t < schedule.size(); ++t)
    if (schedule[t] >= schedule[t - 1])
      fail(ErrorKind::kUsage, "schedule must be strictly decreasing");

  BaseLayers out;
  out.layers.resize(std::size_t(base_layer_count));
  std::vector<u32> remaining(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) remaining[i] = u32(i);
  std::vector<u32> accepted;  // cumulative LoD_t

  for (int t = 0; t < base_layer_count; ++t) {
    AcceptGrid grid(positions, schedule[std::size_t(t)]);
    for (u32 idx : accepted) grid.insert(idx);
    std::vector<u32> next_remaining;
    next_remaining.reserve(remaining.size());
    for (u32 idx : remaining) {
      if (grid.far_enough(positions[idx])) {
        grid.insert(idx);
        out.layers[std::size_t(t)].push_back(idx);
        accepted.push_back(idx);
      } else {
        next_remaining.push_back(idx);
      }
    }
    remaining = std::move(next_remaining);
  }
  out.remainder = std::move(remaining);
  return out;
}

std::vector<std::vector<u32>> build_inference_layers(std::span<const u32> remainder,
                                                     int layer_count) {
  if (layer_count < 1) fail(ErrorKind::kUsage, "inference layer count must be >= 1");
  std::vector<std::vector<u32>> layers(static_cast<std::size_t>(layer_count));
  for (std::size_t i = 0; i < remainder.size(); ++i)
    layers[i % std::size_t(layer_count)].push_back(remainder[i]);
  return layers;
}

std::size_t greedy_subsample_count(std::span<const Vec3i> positions, u32 threshold) {
  AcceptGrid grid(positions, threshold);
  std::size_t count = 0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (grid.far_enough(positions[i])) {
      grid.insert(u32(i));
      ++count;
    }
  }
  return count;
}

std::vector<u32> calibrate_schedule(std::span<const Vec3i> positions, int base_layer_count) {
  const std::size_t n = positions.size();
  const std::size_t target = std::max<std::size_t>(1, (n + 10) / 20);  // ~5%

  auto count_at = [&](u32 d) { return greedy_subsample_count(positions, d); };

  // Counts decrease in the threshold: bracket the target with doubling
  // probes, bisect a few steps, keep the closer endpoint.
  u32 d_min = 1;
  std::size_t c_lo = count_at(1);
  if (c_lo > target) {
    u32 lo = 1, hi = 2;
    std::size_t c_hi = count_at(hi);
    while (c_hi > target && hi < (1u << 23)) {
      lo = hi;
      c_lo = c_hi;
      hi <<= 1;
      c_hi = count_at(hi);
    }
    for (int step = 0; step < 4 && hi - lo > 1; ++step) {
      u32 mid = lo + (hi - lo) / 2;
      std::size_t cm = count_at(mid);
      if (cm > target) {
        lo = mid;
        c_lo = cm;
      } else {
        hi = mid;
        c_hi = cm;
      }
    }
    std::size_t miss_lo = c_lo - target;
    std::size_t miss_hi = c_hi > target ? c_hi - target : target - c_hi;
    d_min = miss_lo <= miss_hi ? lo : hi;
  }

  std::vector<u32> schedule(static_cast<std::size_t>(base_layer_count));
  for (int t = 0; t < base_layer_count; ++t) {
    int shift = base_layer_count - 1 - t;
    u64 v = u64(d_min) << shift;
    if (v > kMaxL1 + u64(shift)) v = kMaxL1 + u64(shift);  // keeps strict decrease
    schedule[std::size_t(t)] = u32(v);
  }
  return schedule;
}

std::vector<std::vector<Neighbor>> knn_for_layer(std::span<const Vec3i> positions,
                                                 std::span<const u32> queries,
                                                 std::span<const u32> candidates,
                                                 int k) {
  KdTree tree(positions, std::vector<u32>(candidates.begin(), candidates.end()));
  std::vector<std::vector<Neighbor>> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    out[i] = pad_neighbors(tree.knn_manhattan(positions[queries[i]], k), k);
  return out;
}

LodStructure build_lod(std::span<const Vec3i> positions, const LodConfig& config) {
  const int T = config.base_layers;
  const int L = config.total_layers;
  const int k = config.neighbors;
  if (T < 1 || L <= T) fail(ErrorKind::kUsage, "need 1 <= T < L");
  if (k < 1) fail(ErrorKind::kUsage, "neighbor count must be >= 1");
  if (positions.empty()) fail(ErrorKind::kUsage, "empty cloud");

  LodStructure lod;
  lod.base_layer_count = T;
  lod.realized_schedule = config.schedule.empty()
    ? calibrate_schedule(positions, T)
    : config.schedule;

  BaseLayers base = build_base_layers(positions, T, lod.realized_schedule);
  lod.layers = std::move(base.layers);
  auto inference = build_inference_layers(base.remainder, L - T);
  for (auto& layer : inference) lod.layers.push_back(std::move(layer));

  lod.layer_of_point.assign(positions.size(), 0);
  lod.neighbors.resize(positions.size());

  constexpr u32 kIntraChunk = 1024;
  std::vector<u32> lod_prev;  // LoD_{t-1}
  lod_prev.reserve(positions.size());

  for (int t = 0; t < L; ++t) {
    const auto& layer = lod.layers[std::size_t(t)];
    for (u32 p : layer) lod.layer_of_point[p] = u16(t + 1);

    KdTree inter(positions, lod_prev);
    if (t < T) {
      // Intra candidates are the preorder points of this layer: a periodic
      // prefix tree plus a linear tail keeps this exact without O(m^2) cost.
      KdTree intra;
      std::size_t in_tree = 0;
      for (std::size_t m = 0; m < layer.size(); ++m) {
        const Vec3i& q = positions[layer[m]];
        std::vector<KdTree::Hit> hits;
        if (!inter.empty()) hits = inter.knn_manhattan(q, k);
        if (!intra.empty()) {
          auto ih = intra.knn_manhattan(q, k);
          hits.insert(hits.end(), ih.begin(), ih.end());
        }
        for (std::size_t j = in_tree; j < m; ++j)
          hits.push_back({manhattan(q, positions[layer[j]]), layer[j]});
        std::sort(hits.begin(), hits.end(), [](const KdTree::Hit& a, const KdTree::Hit& b) {
          if (a.dist != b.dist) return a.dist < b.dist;
          return a.index < b.index;
        });
        if (int(hits.size()) > k) hits.resize(std::size_t(k));
        lod.neighbors[layer[m]] = pad_neighbors(std::move(hits), k);

        if (m + 1 - in_tree >= kIntraChunk) {
          intra = KdTree(positions, std::vector<u32>(layer.begin(), layer.begin() + i64(m) + 1));
          in_tree = m + 1;
        }
      }
    } else {
      for (u32 p : layer)
        lod.neighbors[p] = pad_neighbors(inter.knn_manhattan(positions[p], k), k);
    }
    lod_prev.insert(lod_prev.end(), layer.begin(), layer.end());
  }
  return lod;
}

u64 LodStructure::digest() const {
  u64 h = 0xcbf29ce484222325ull;
  h = fnv1a64_append(h, u64(base_layer_count));
  for (u32 s : realized_schedule) h = fnv1a64_append(h, s);
  for (const auto& layer : layers) {
    h = fnv1a64_append(h, layer.size());
    for (u32 p : layer) h = fnv1a64_append(h, p);
  }
  for (const auto& nb : neighbors) {
    h = fnv1a64_append(h, nb.size());
    for (const auto& n : nb) {
      h = fnv1a64_append(h, n.index);
      h = fnv1a64_append(h, u64(n.dist));
    }
  }
  return h;
}

}  // namespace dpcc
