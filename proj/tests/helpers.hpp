#pragma once

// Shared fixtures: synthetic clouds and independent oracles for the codec
// tests. Oracles here stay brute-force on purpose; they must not share code
// with the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "dpcc/io.hpp"
#include "dpcc/lod.hpp"

namespace testing {

using namespace dpcc;
using boost::multiprecision::cpp_int;

inline PointCloud finalize_cloud(std::vector<Vec3i> positions,
                                 std::vector<std::vector<i32>> channels) {
  PointCloud c;
  c.positions = std::move(positions);
  c.channels = std::move(channels);
  if (c.channels.size() == 3) {
    c.attributes.mode = AttributeMode::kRgbColor;
    c.attributes.names = {"red", "green", "blue"};
    c.attributes.bit_depths = {8, 8, 8};
  } else {
    c.attributes.mode = AttributeMode::kSingleChannel;
    c.attributes.names = {"reflectance"};
    c.attributes.bit_depths = {8};
  }
  canonicalize(c);
  i32 mx = 0;
  for (const auto& p : c.positions) mx = std::max({mx, p.x, p.y, p.z});
  c.geometry_bits = 1;
  while ((i64(1) << c.geometry_bits) <= mx) ++c.geometry_bits;
  return c;
}

//============================================================================
// Synthetic clouds
//============================================================================

// Solid cube grid of side x side x side voxels with the given spacing.
inline std::vector<Vec3i> grid_positions(int side, int spacing = 1) {
  std::vector<Vec3i> out;
  for (int z = 0; z < side; ++z)
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        out.push_back({x * spacing, y * spacing, z * spacing});
  return out;
}

inline std::vector<Vec3i> random_positions(std::size_t n, i32 extent, u64 seed) {
  SplitMix64 rng(seed);
  std::set<u64> seen;
  std::vector<Vec3i> out;
  while (out.size() < n) {
    Vec3i p{i32(rng.next_below(u64(extent))), i32(rng.next_below(u64(extent))),
            i32(rng.next_below(u64(extent)))};
    if (seen.insert(morton_code(p)).second) out.push_back(p);
  }
  return out;
}

// Quantized points on a sphere surface (Gaussian direction sampling).
inline std::vector<Vec3i> sphere_positions(std::size_t n, double radius, u64 seed) {
  SplitMix64 rng(seed);
  std::set<u64> seen;
  std::vector<Vec3i> out;
  std::size_t guard = 0;
  while (out.size() < n && guard++ < n * 50) {
    double gx = rng.next_gaussian(), gy = rng.next_gaussian(), gz = rng.next_gaussian();
    double norm = std::sqrt(gx * gx + gy * gy + gz * gz);
    if (norm < 1e-9) continue;
    Vec3i p{i32(std::lround(radius + radius * gx / norm)),
            i32(std::lround(radius + radius * gy / norm)),
            i32(std::lround(radius + radius * gz / norm))};
    if (seen.insert(morton_code(p)).second) out.push_back(p);
  }
  return out;
}

inline i32 smooth_attr(const Vec3i& p, double scale) {
  double v = 127.5 + 80.0 * std::sin(p.x * scale) * std::cos(p.y * scale)
    + 40.0 * std::sin(p.z * scale * 1.7);
  return std::clamp(i32(std::lround(v)), 0, 255);
}

// Smooth single-channel cloud: attribute is a quantized smooth function of
// position.
inline PointCloud gradient_cloud(std::vector<Vec3i> positions, double scale = 0.07) {
  std::vector<i32> attr;
  attr.reserve(positions.size());
  for (const auto& p : positions) attr.push_back(smooth_attr(p, scale));
  return finalize_cloud(std::move(positions), {std::move(attr)});
}

inline PointCloud gradient_rgb_cloud(std::vector<Vec3i> positions, double scale = 0.07) {
  std::vector<std::vector<i32>> ch(3);
  for (const auto& p : positions) {
    ch[0].push_back(smooth_attr(p, scale));
    ch[1].push_back(smooth_attr({p.y, p.z, p.x}, scale * 1.3));
    ch[2].push_back(smooth_attr({p.z, p.x, p.y}, scale * 0.8));
  }
  return finalize_cloud(std::move(positions), std::move(ch));
}

inline PointCloud constant_cloud(std::vector<Vec3i> positions, std::vector<i32> value) {
  std::vector<std::vector<i32>> ch(static_cast<std::size_t>(value.size()));
  for (std::size_t c = 0; c < value.size(); ++c)
    ch[c].assign(positions.size(), value[c]);
  return finalize_cloud(std::move(positions), std::move(ch));
}

inline PointCloud noise_cloud(std::vector<Vec3i> positions, int channels, u64 seed) {
  SplitMix64 rng(seed);
  std::vector<std::vector<i32>> ch(static_cast<std::size_t>(channels));
  for (auto& c : ch) {
    c.resize(positions.size());
    for (auto& v : c) v = i32(rng.next_below(256));
  }
  return finalize_cloud(std::move(positions), std::move(ch));
}

// Four spatial quadrants (in x/y) with distinct constant colors; quadrant
// boundaries sit off-center so median splits cannot align with them. The
// side must be large enough that the base layer (~5%) gives each quadrant
// several hundred points, or the radius-50 prior smoothing blurs the
// quadrants into each other.
inline PointCloud quadrant_cloud(int side = 160) {
  std::vector<Vec3i> pos;
  std::vector<std::vector<i32>> ch(3);
  int bx = side * 9 / 20, by = side * 11 / 20;
  const i32 palette[4][3] = {{20, 40, 200}, {230, 30, 40}, {40, 220, 60}, {240, 240, 235}};
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      int q = (x >= bx ? 1 : 0) + (y >= by ? 2 : 0);
      pos.push_back({x, y, (x + 2 * y) % 3});
      for (int c = 0; c < 3; ++c) ch[std::size_t(c)].push_back(palette[q][c]);
    }
  return finalize_cloud(std::move(pos), std::move(ch));
}

// Textured training clouds: regions alternate between smooth shading and
// strong speckle, so neighborhood context predicts residual statistics.
inline PointCloud textured_cloud(int side, int channels, u64 seed) {
  SplitMix64 rng(seed);
  std::vector<Vec3i> pos;
  std::vector<std::vector<i32>> ch(static_cast<std::size_t>(channels));
  int region = std::max(4, side / 4);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      Vec3i p{x, y, i32((x * 7 + y * 3) % 5)};
      pos.push_back(p);
      bool noisy = ((x / region) + (y / region)) % 2 == 0;
      for (int c = 0; c < channels; ++c) {
        i32 base = smooth_attr({p.x + 31 * c, p.y, p.z}, 0.05);
        i32 v = noisy ? i32(rng.next_below(256)) : base;
        ch[std::size_t(c)].push_back(v);
      }
    }
  return finalize_cloud(std::move(pos), std::move(ch));
}

//============================================================================
// Oracles
//============================================================================

// Direct bit-interleave oracle for Morton codes.
inline u64 morton_oracle(const Vec3i& p) {
  u64 code = 0;
  for (int b = 0; b < 21; ++b) {
    code |= u64((p.x >> b) & 1) << (3 * b);
    code |= u64((p.y >> b) & 1) << (3 * b + 1);
    code |= u64((p.z >> b) & 1) << (3 * b + 2);
  }
  return code;
}

// Exact rational IDW with half-away-from-zero rounding.
inline i32 idw_oracle(const std::vector<i32>& attrs, const std::vector<i64>& dists) {
  // round( sum a_j/d_j^2 / sum 1/d_j^2 ) over exact integers: multiply both
  // sums by prod d_j^2.
  cpp_int num = 0, den = 0;
  for (std::size_t j = 0; j < attrs.size(); ++j) {
    cpp_int w = 1;
    for (std::size_t m = 0; m < attrs.size(); ++m)
      if (m != j) w *= cpp_int(dists[m]) * dists[m];
    num += w * attrs[j];
    den += w;
  }
  bool neg = num < 0;
  cpp_int an = neg ? -num : num;
  cpp_int q = an / den, r = an % den;
  if (2 * r >= den) ++q;
  return i32(neg ? -q : q);
}

// O(n^2) exact KNN oracle: k smallest (Manhattan distance, index).
inline std::vector<Neighbor> knn_oracle(const std::vector<Vec3i>& positions,
                                        const Vec3i& query,
                                        const std::vector<u32>& candidates, int k) {
  std::vector<Neighbor> all;
  for (u32 c : candidates) all.push_back({c, manhattan(query, positions[c])});
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.index < b.index;
  });
  if (int(all.size()) > k) all.resize(std::size_t(k));
  return all;
}

// Interval-scan oracle for the axis label: walk every bin boundary.
inline int axis_label_oracle(i64 delta, double dbar, const std::vector<double>& thresholds,
                             int n) {
  double ratio = std::abs(double(delta)) / dbar;
  int bin = -1;
  for (int kk = 0; kk <= n; ++kk) {
    double lo = kk == 0 ? -1.0 : thresholds[std::size_t(kk - 1)];
    if (ratio > lo && ratio <= thresholds[std::size_t(kk)]) {
      bin = kk;
      break;
    }
  }
  if (bin < 0) return -1;  // not a partition: signal failure
  int sign = delta > 0 ? 1 : (delta < 0 ? -1 : 0);
  return sign * bin + n;
}

inline double shannon_entropy_of_counts(const std::vector<u64>& counts) {
  u64 total = 0;
  for (u64 c : counts) total += c;
  double h = 0.0;
  for (u64 c : counts) {
    if (c == 0) continue;
    double p = double(c) / double(total);
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace testing
