#include "dpcc/dald.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpcc/predict.hpp"

namespace dpcc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinAxisDistance = 1e-3;
}  // namespace

void DaldConfig::validate() const {
  if (n < 1) fail(ErrorKind::kUsage, "DALD n must be >= 1");
  for (const auto& t : thresholds) {
    if (int(t.size()) != n + 1)
      fail(ErrorKind::kUsage, "each threshold list needs n+1 entries");
    if (t.back() != kInf)
      fail(ErrorKind::kUsage, "last threshold must be +inf");
    for (std::size_t i = 1; i < t.size(); ++i)
      if (!(t[i] > t[i - 1]))
        fail(ErrorKind::kUsage, "thresholds must be strictly increasing");
  }
}

DaldConfig DaldConfig::object_default() {
  DaldConfig c;
  c.n = 3;
  for (auto& t : c.thresholds) t = {0.0, 1.0, 3.0, kInf};
  return c;
}

DaldConfig DaldConfig::lidar_default() {
  DaldConfig c;
  c.n = 3;
  c.thresholds[0] = {0.2, 1.0, 3.0, kInf};
  c.thresholds[1] = {0.2, 1.0, 3.0, kInf};
  c.thresholds[2] = {0.2, 0.4, 1.0, kInf};
  return c;
}

std::array<double, 3> batch_mean_axis_distance(std::span<const Vec3i> batch_positions,
                                               std::span<const Vec3i> nearest_positions) {
  if (batch_positions.empty() || batch_positions.size() != nearest_positions.size())
    fail(ErrorKind::kInternal, "empty or mismatched batch for mean axis distance");
  std::array<double, 3> sum{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < batch_positions.size(); ++i)
    for (int a = 0; a < 3; ++a)
      sum[std::size_t(a)] += std::abs(double(nearest_positions[i][a]) - double(batch_positions[i][a]));
  for (auto& s : sum) s = std::max(s / double(batch_positions.size()), kMinAxisDistance);
  return sum;
}

int axis_label(i64 delta, double dbar, std::span<const double> thresholds, int n) {
  double ratio = std::abs(double(delta)) / dbar;
  int k = n;
  for (int i = 0; i <= n; ++i) {
    if (ratio <= thresholds[std::size_t(i)]) {
      k = i;
      break;
    }
  }
  int sign = delta > 0 ? 1 : (delta < 0 ? -1 : 0);
  return sign * k + n;
}

int combine_label(int lx, int ly, int lz, int n) {
  int s = 2 * n + 1;
  return lx + ly * s + lz * s * s;
}

int DescriptorBatch::real_count() const {
  int c = 0;
  for (u8 m : real_mask) c += m;
  return c;
}

DescriptorBatch build_descriptor_batch(std::span<const Vec3i> positions,
                                       const LodStructure& lod,
                                       std::span<const u32> batch_points,
                                       u32 pad_count,
                                       std::span<const std::vector<i32>> channel_values,
                                       const DaldConfig& config) {
  const int count = int(batch_points.size());
  const int channels = int(channel_values.size());
  if (count == 0) fail(ErrorKind::kInternal, "empty descriptor batch");
  if (u32(count) <= pad_count) fail(ErrorKind::kInternal, "batch is all padding");
  const int k = int(lod.neighbors[batch_points[0]].size());
  if (k == 0) fail(ErrorKind::kInternal, "descriptor batch point lacks neighbors");

  DescriptorBatch batch;
  batch.count = count;
  batch.k = k;
  batch.channels = channels;
  batch.pos_norm.resize(std::size_t(count) * 3);
  batch.label_idx.resize(std::size_t(count) * std::size_t(k));
  batch.attr_idx.resize(std::size_t(count) * std::size_t(k) * std::size_t(channels));
  batch.rel_idx.resize(batch.attr_idx.size());
  batch.pred_idx.resize(std::size_t(count) * std::size_t(channels));
  batch.predicted_raw.resize(batch.pred_idx.size());
  batch.real_mask.assign(std::size_t(count), 1);
  for (u32 i = 0; i < pad_count; ++i)
    batch.real_mask[std::size_t(count) - 1 - i] = 0;

  // Min-max position normalization over the batch; degenerate axes map to 0.
  Vec3i lo = positions[batch_points[0]], hi = lo;
  for (u32 p : batch_points) {
    const Vec3i& v = positions[p];
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
  }
  for (int i = 0; i < count; ++i) {
    const Vec3i& v = positions[batch_points[std::size_t(i)]];
    for (int a = 0; a < 3; ++a) {
      i64 range = i64(hi[a]) - lo[a];
      batch.pos_norm[std::size_t(i) * 3 + std::size_t(a)] =
        range > 0 ? double(v[a] - lo[a]) / double(range) : 0.0;
    }
  }

  // Per-axis mean nearest-neighbor distance over the batch.
  std::vector<Vec3i> self_pos(static_cast<std::size_t>(count));
  std::vector<Vec3i> j1_pos(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    u32 p = batch_points[std::size_t(i)];
    self_pos[std::size_t(i)] = positions[p];
    j1_pos[std::size_t(i)] = positions[lod.neighbors[p][0].index];
  }
  std::array<double, 3> dbar = batch_mean_axis_distance(self_pos, j1_pos);

  for (int i = 0; i < count; ++i) {
    u32 p = batch_points[std::size_t(i)];
    const auto& nbs = lod.neighbors[p];
    if (int(nbs.size()) != k)
      fail(ErrorKind::kInternal, "inconsistent neighbor count inside batch");

    for (int c = 0; c < channels; ++c) {
      i32 pred = idw_predict_point(channel_values[std::size_t(c)], nbs);
      bool chroma = channels == 3 && c > 0;
      batch.predicted_raw[std::size_t(i) * std::size_t(channels) + std::size_t(c)] = pred;
      batch.pred_idx[std::size_t(i) * std::size_t(channels) + std::size_t(c)] =
        pred + (chroma ? 255 : 0);
    }

    for (int j = 0; j < k; ++j) {
      u32 q = nbs[std::size_t(j)].index;
      int lx = axis_label(i64(positions[q].x) - positions[p].x, dbar[0],
                          config.thresholds[0], config.n);
      int ly = axis_label(i64(positions[q].y) - positions[p].y, dbar[1],
                          config.thresholds[1], config.n);
      int lz = axis_label(i64(positions[q].z) - positions[p].z, dbar[2],
                          config.thresholds[2], config.n);
      batch.label_idx[std::size_t(i) * std::size_t(k) + std::size_t(j)] =
        combine_label(lx, ly, lz, config.n);

      for (int c = 0; c < channels; ++c) {
        bool chroma = channels == 3 && c > 0;
        std::size_t at = (std::size_t(i) * std::size_t(k) + std::size_t(j)) * std::size_t(channels)
          + std::size_t(c);
        i32 a_j = channel_values[std::size_t(c)][q];
        i32 pred = batch.predicted_raw[std::size_t(i) * std::size_t(channels) + std::size_t(c)];
        batch.attr_idx[at] = a_j + (chroma ? 255 : 0);
        batch.rel_idx[at] = (a_j - pred) + (chroma ? 510 : 255);
      }
    }
  }
  return batch;
}

}  // namespace dpcc
