#include "dpcc/metrics.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>

namespace dpcc {

double nn_density(std::span<const Vec3i> positions, int kernel_radius) {
  if (positions.empty()) fail(ErrorKind::kUsage, "empty cloud");
  if (kernel_radius < 0) fail(ErrorKind::kUsage, "kernel radius must be >= 0");
  const u32 cell = std::max(1, kernel_radius);

  std::unordered_map<u64, std::vector<u32>> grid;
  auto key = [&](const Vec3i& p) {
    return (u64(u32(p.x) / cell) << 42) | (u64(u32(p.y) / cell) << 21) | (u64(u32(p.z) / cell));
  };
  for (std::size_t i = 0; i < positions.size(); ++i)
    grid[key(positions[i])].push_back(u32(i));

  u64 total = 0;
  for (const auto& p : positions) {
    u64 cx = u64(p.x) / cell, cy = u64(p.y) / cell, cz = u64(p.z) / cell;
    for (i64 dz = -1; dz <= 1; ++dz)
      for (i64 dy = -1; dy <= 1; ++dy)
        for (i64 dx = -1; dx <= 1; ++dx) {
          if ((dx < 0 && cx == 0) || (dy < 0 && cy == 0) || (dz < 0 && cz == 0)) continue;
          u64 k = ((cx + u64(dx)) << 42) | ((cy + u64(dy)) << 21) | (cz + u64(dz));
          auto it = grid.find(k);
          if (it == grid.end()) continue;
          for (u32 idx : it->second)
            if (chebyshev(p, positions[idx]) <= kernel_radius) ++total;
        }
  }
  return double(total) / double(positions.size());
}

double empirical_entropy(std::span<const i32> symbols) {
  if (symbols.empty()) fail(ErrorKind::kUsage, "empty symbol stream");
  std::map<i32, u64> counts;
  for (i32 s : symbols) ++counts[s];
  double h = 0.0;
  double n = double(symbols.size());
  for (const auto& [sym, c] : counts) {
    double p = double(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

std::vector<DensitySample> sampled_density_curve(std::span<const Vec3i> positions,
                                                 std::span<const double> ratios,
                                                 u64 seed) {
  if (positions.empty()) fail(ErrorKind::kUsage, "empty cloud");
  std::vector<u32> perm(positions.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = u32(i);
  seeded_shuffle(perm, seed);

  std::vector<DensitySample> out;
  for (double ratio : ratios) {
    if (!(ratio > 0.0) || ratio > 1.0)
      fail(ErrorKind::kUsage, "sampling ratio must be in (0,1]");
    std::size_t m = std::max<std::size_t>(1,
      std::size_t(std::llround(ratio * double(positions.size()))));
    m = std::min(m, positions.size());
    std::vector<Vec3i> sub(m);
    for (std::size_t i = 0; i < m; ++i) sub[i] = positions[perm[i]];
    out.push_back({ratio, nn_density(sub), m});
  }
  return out;
}

std::string density_curve_csv(std::span<const DensitySample> samples) {
  std::ostringstream ss;
  ss << "ratio,nn,points\n";
  for (const auto& s : samples)
    ss << s.ratio << "," << s.nn << "," << s.points << "\n";
  return ss.str();
}

}  // namespace dpcc
