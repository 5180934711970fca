#include "dpcc/predict.hpp"

#include <cmath>

namespace dpcc {

i32 idw_predict(std::span<const i32> neighbor_attrs, std::span<const i64> neighbor_dists) {
  if (neighbor_attrs.empty() || neighbor_attrs.size() != neighbor_dists.size())
    fail(ErrorKind::kInternal, "idw_predict needs equal-length non-empty lists");
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < neighbor_attrs.size(); ++j) {
    i64 d = neighbor_dists[j];
    if (d < 1) fail(ErrorKind::kInternal, "neighbor distance must be >= 1");
    double w = 1.0 / (double(d) * double(d));
    num += w * double(neighbor_attrs[j]);
    den += w;
  }
  return i32(std::llround(num / den));  // llround ties away from zero
}

i32 idw_predict_point(std::span<const i32> channel_values,
                      std::span<const Neighbor> neighbors) {
  double num = 0.0, den = 0.0;
  if (neighbors.empty()) fail(ErrorKind::kInternal, "point has no prediction context");
  for (const Neighbor& nb : neighbors) {
    double w = 1.0 / (double(nb.dist) * double(nb.dist));
    num += w * double(channel_values[nb.index]);
    den += w;
  }
  return i32(std::llround(num / den));
}

std::vector<i32> residuals_for_layer(std::span<const i32> channel_values,
                                     const LodStructure& lod, int layer_index) {
  const auto& layer = lod.layers[std::size_t(layer_index)];
  std::vector<i32> out(layer.size(), 0);
  for (std::size_t i = 0; i < layer.size(); ++i) {
    u32 p = layer[i];
    const auto& nbs = lod.neighbors[p];
    if (nbs.empty()) continue;  // raw-literal point
    out[i] = channel_values[p] - idw_predict_point(channel_values, nbs);
  }
  return out;
}

}  // namespace dpcc
