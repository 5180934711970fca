#pragma once

#include <span>
#include <string>
#include <vector>

#include "dpcc/common.hpp"
#include "dpcc/io.hpp"

namespace dpcc {

/// Density metric NN: mean number of points (self included) inside the
/// (2r+1)^3 voxel window around each point; r=2 gives the 5x5x5 kernel.
double nn_density(std::span<const Vec3i> positions, int kernel_radius = 2);

/// Shannon entropy of the empirical symbol distribution, bits per symbol.
double empirical_entropy(std::span<const i32> symbols);

struct DensitySample {
  double ratio;
  double nn;
  std::size_t points;
};

/// NN along a seeded subsampling curve. Samples are nested (prefixes of one
/// seeded permutation) so the curve is directly comparable across ratios.
std::vector<DensitySample> sampled_density_curve(std::span<const Vec3i> positions,
                                                 std::span<const double> ratios,
                                                 u64 seed);

std::string density_curve_csv(std::span<const DensitySample> samples);

}  // namespace dpcc
