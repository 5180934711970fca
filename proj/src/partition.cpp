#include "dpcc/partition.hpp"

#include <algorithm>
#include <cmath>

#include "dpcc/kdtree.hpp"

namespace dpcc {

std::vector<double> smooth_base_attributes(std::span<const Vec3i> positions,
                                           std::span<const u32> base_ids,
                                           std::span<const i32> channel_values,
                                           int radius_points) {
  KdTree tree(positions, std::vector<u32>(base_ids.begin(), base_ids.end()));
  std::vector<double> smoothed(base_ids.size());
  for (std::size_t i = 0; i < base_ids.size(); ++i) {
    auto hits = tree.knn_manhattan(positions[base_ids[i]], radius_points);
    double sum = 0.0;
    for (const auto& h : hits) sum += double(channel_values[h.index]);
    smoothed[i] = sum / double(hits.size());
  }
  return smoothed;
}

//============================================================================
// k-means
//============================================================================

namespace {

double feature_dist2(const double* a, const double* b, int dim) {
  double d = 0.0;
  for (int i = 0; i < dim; ++i) {
    double e = a[i] - b[i];
    d += e * e;
  }
  return d;
}

}  // namespace

std::vector<u32> kmeans_base(std::span<const double> features, std::size_t n, int dim,
                             u32 num_clusters, u64 seed,
                             std::vector<double>* objective_trace) {
  if (n == 0) fail(ErrorKind::kUsage, "k-means on empty point set");
  if (num_clusters < 1 || num_clusters > n)
    fail(ErrorKind::kUsage, "num_clusters must be in [1, point count]");
  if (features.size() != n * std::size_t(dim))
    fail(ErrorKind::kInternal, "feature matrix shape mismatch");

  const u32 k = num_clusters;
  SplitMix64 rng(seed);
  std::vector<double> centroids(std::size_t(k) * std::size_t(dim));
  auto feat = [&](std::size_t i) { return features.data() + i * std::size_t(dim); };
  auto cent = [&](std::size_t c) { return centroids.data() + c * std::size_t(dim); };

  // Seeded k-means++: next center drawn proportional to squared distance
  // from the chosen set; a zero total falls back to the first unchosen index.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<u8> chosen(n, 0);
  std::size_t first = std::size_t(rng.next_below(n));
  std::copy(feat(first), feat(first) + dim, cent(0));
  chosen[first] = 1;
  for (u32 c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], feature_dist2(feat(i), cent(c - 1), dim));
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double u = rng.next_double() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > u) { pick = i; break; }
      }
      if (pick == n) {  // numeric edge: walk back to the last positive mass
        for (std::size_t i = n; i-- > 0;)
          if (d2[i] > 0.0) { pick = i; break; }
      }
    }
    if (pick == n) {
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) { pick = i; break; }
    }
    if (pick == n) pick = 0;  // all points identical
    std::copy(feat(pick), feat(pick) + dim, cent(c));
    chosen[pick] = 1;
  }

  std::vector<u32> assign(n, 0);
  std::vector<double> sums(std::size_t(k) * std::size_t(dim));
  std::vector<u64> sizes(k);

  for (int iter = 0; iter < 20; ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      u32 best = 0;
      double best_d = feature_dist2(feat(i), cent(0), dim);
      for (u32 c = 1; c < k; ++c) {
        double d = feature_dist2(feat(i), cent(c), dim);
        if (d < best_d) { best_d = d; best = c; }  // strict: ties keep lower index
      }
      if (assign[i] != best) { assign[i] = best; changed = true; }
      objective += best_d;
    }
    if (objective_trace) objective_trace->push_back(objective);

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      double* s = sums.data() + std::size_t(assign[i]) * std::size_t(dim);
      const double* f = feat(i);
      for (int d = 0; d < dim; ++d) s[d] += f[d];
      ++sizes[assign[i]];
    }

    bool reseeded = false;
    std::vector<u8> claimed(n, 0);
    for (u32 c = 0; c < k; ++c) {
      if (sizes[c] > 0) {
        double* ct = cent(c);
        const double* s = sums.data() + std::size_t(c) * std::size_t(dim);
        for (int d = 0; d < dim; ++d) ct[d] = s[d] / double(sizes[c]);
      } else {
        // Reseed to the point farthest from its own centroid.
        std::size_t far_i = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (claimed[i]) continue;
          double d = feature_dist2(feat(i), cent(assign[i]), dim);
          if (d > far_d) { far_d = d; far_i = i; }
        }
        claimed[far_i] = 1;
        std::copy(feat(far_i), feat(far_i) + dim, cent(c));
        reseeded = true;
      }
    }
    if (!changed && !reseeded) break;
  }
  return assign;
}

std::vector<u32> assign_inference_blocks(std::span<const Vec3i> positions,
                                         std::span<const u32> inference_ids,
                                         std::span<const u32> base_ids,
                                         std::span<const u32> base_bkids) {
  if (base_ids.empty()) fail(ErrorKind::kUsage, "empty Base Layer");
  KdTree tree(positions, std::vector<u32>(base_ids.begin(), base_ids.end()));
  // Map cloud index of a base point back to its bkid slot.
  std::vector<u32> slot_of(positions.size(), 0);
  for (std::size_t i = 0; i < base_ids.size(); ++i) slot_of[base_ids[i]] = u32(i);

  std::vector<u32> out(inference_ids.size());
  for (std::size_t i = 0; i < inference_ids.size(); ++i) {
    KdTree::Hit h = tree.nearest_euclidean(positions[inference_ids[i]]);
    out[i] = base_bkids[slot_of[h.index]];
  }
  return out;
}

std::vector<Batch> batch_blocks(std::span<const u32> block_points_in_layer, u32 batch_size) {
  if (batch_size < 1) fail(ErrorKind::kUsage, "batch size must be >= 1");
  std::vector<Batch> out;
  std::size_t i = 0;
  while (i < block_points_in_layer.size()) {
    Batch b;
    std::size_t take = std::min<std::size_t>(batch_size, block_points_in_layer.size() - i);
    b.points.assign(block_points_in_layer.begin() + i64(i),
                    block_points_in_layer.begin() + i64(i + take));
    b.pad_count = u32(batch_size - take);
    while (b.points.size() < batch_size) b.points.push_back(b.points.back());
    out.push_back(std::move(b));
    i += take;
  }
  return out;
}

std::vector<u32> kdtree_partition(std::span<const Vec3i> positions,
                                  std::span<const u32> ids, int depth) {
  std::vector<u32> work(ids.begin(), ids.end());
  std::vector<u32> block(positions.size(), 0);

  struct Range { std::size_t lo, hi; int depth; u32 id; };
  std::vector<Range> stack{{0, work.size(), 0, 0}};
  while (!stack.empty()) {
    Range r = stack.back();
    stack.pop_back();
    if (r.depth == depth || r.hi - r.lo <= 1) {
      for (std::size_t i = r.lo; i < r.hi; ++i) block[work[i]] = r.id;
      continue;
    }
    int axis = r.depth % 3;
    std::size_t mid = (r.lo + r.hi) / 2;
    std::nth_element(work.begin() + i64(r.lo), work.begin() + i64(mid),
                     work.begin() + i64(r.hi), [&](u32 a, u32 b) {
                       if (positions[a][axis] != positions[b][axis])
                         return positions[a][axis] < positions[b][axis];
                       return a < b;
                     });
    stack.push_back({r.lo, mid, r.depth + 1, r.id * 2});
    stack.push_back({mid, r.hi, r.depth + 1, r.id * 2 + 1});
  }
  return block;
}

//============================================================================
// Full pass
//============================================================================

BlockAssignment compute_partition(std::span<const Vec3i> positions, const LodStructure& lod,
                                  std::span<const std::vector<i32>> base_channel_values,
                                  const PartitionConfig& config) {
  BlockAssignment out;
  for (std::size_t p = 0; p < lod.point_count(); ++p) {
    if (int(lod.layer_of_point[p]) <= lod.base_layer_count) out.base_ids.push_back(u32(p));
    else out.inference_ids.push_back(u32(p));
  }
  out.bkid_of_point.assign(lod.point_count(), 0);

  const std::size_t n_base = out.base_ids.size();
  const std::size_t n_infer = out.inference_ids.size();
  if (n_infer == 0) { out.num_clusters = 1; return out; }

  u64 per_block = u64(config.batches_per_block) * u64(config.batch_size);
  u64 wanted = (n_infer + per_block - 1) / per_block;
  out.num_clusters = u32(std::clamp<u64>(wanted, 1, n_base));

  // Features: smoothed attributes joined with 255 * min-max normalized
  // positions (the paper's alpha).
  const int channels = int(base_channel_values.size());
  const int dim = channels + 3;
  std::vector<double> features(n_base * std::size_t(dim));
  for (int c = 0; c < channels; ++c) {
    auto smoothed = smooth_base_attributes(positions, out.base_ids,
                                           base_channel_values[std::size_t(c)]);
    for (std::size_t i = 0; i < n_base; ++i)
      features[i * std::size_t(dim) + std::size_t(c)] = smoothed[i];
  }
  Vec3i lo = positions[out.base_ids[0]], hi = lo;
  for (u32 p : out.base_ids) {
    const Vec3i& v = positions[p];
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
  }
  for (std::size_t i = 0; i < n_base; ++i) {
    const Vec3i& v = positions[out.base_ids[i]];
    for (int a = 0; a < 3; ++a) {
      i64 range = i64(hi[a]) - lo[a];
      double norm = range > 0 ? double(v[a] - lo[a]) / double(range) : 0.0;
      features[i * std::size_t(dim) + std::size_t(channels + a)] = 255.0 * norm;
    }
  }

  std::vector<u32> base_bkids =
    kmeans_base(features, n_base, dim, out.num_clusters, config.seed);
  std::vector<u32> infer_bkids =
    assign_inference_blocks(positions, out.inference_ids, out.base_ids, base_bkids);

  for (std::size_t i = 0; i < n_base; ++i) out.bkid_of_point[out.base_ids[i]] = base_bkids[i];
  for (std::size_t i = 0; i < n_infer; ++i)
    out.bkid_of_point[out.inference_ids[i]] = infer_bkids[i];
  return out;
}

std::vector<LayerBatch> make_batches(const LodStructure& lod,
                                     const BlockAssignment& assignment, u32 batch_size) {
  std::vector<LayerBatch> out;
  const int L = int(lod.layers.size());
  for (int t = lod.base_layer_count; t < L; ++t) {
    const auto& layer = lod.layers[std::size_t(t)];
    for (u32 b = 0; b < assignment.num_clusters; ++b) {
      std::vector<u32> pts;
      for (u32 p : layer)
        if (assignment.bkid_of_point[p] == b) pts.push_back(p);
      for (auto& batch : batch_blocks(pts, batch_size))
        out.push_back({u16(t + 1), b, std::move(batch)});
    }
  }
  return out;
}

u64 BlockAssignment::digest() const {
  u64 h = 0xcbf29ce484222325ull;
  h = fnv1a64_append(h, num_clusters);
  for (u32 b : bkid_of_point) h = fnv1a64_append(h, b);
  return h;
}

u64 batches_digest(std::span<const LayerBatch> batches) {
  u64 h = 0xcbf29ce484222325ull;
  for (const auto& lb : batches) {
    h = fnv1a64_append(h, lb.layer);
    h = fnv1a64_append(h, lb.block);
    h = fnv1a64_append(h, lb.batch.pad_count);
    for (u32 p : lb.batch.points) h = fnv1a64_append(h, p);
  }
  return h;
}

}  // namespace dpcc
