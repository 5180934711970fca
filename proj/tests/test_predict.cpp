#include <doctest.h>

#include "dpcc/metrics.hpp"
#include "dpcc/predict.hpp"
#include "helpers.hpp"

using namespace dpcc;

TEST_CASE("IDW prediction on pinned examples") {
  std::vector<i32> a1 = {37};
  std::vector<i64> d1 = {5};
  CHECK(idw_predict(a1, d1) == 37);

  std::vector<i32> a2 = {10, 20};
  std::vector<i64> d2 = {1, 1};
  CHECK(idw_predict(a2, d2) == 15);

  std::vector<i32> a3 = {8, 16};
  std::vector<i64> d3 = {1, 2};
  CHECK(idw_predict(a3, d3) == 10);  // round(9.6)
}

TEST_CASE("half-away-from-zero tie handling") {
  std::vector<i32> a = {10, 21};
  std::vector<i64> d = {1, 1};
  CHECK(idw_predict(a, d) == 16);  // 15.5 rounds away
  std::vector<i32> an = {-10, -21};
  CHECK(idw_predict(an, d) == -16);
}

TEST_CASE("IDW double path matches exact rational oracle") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 2000; ++trial) {
    int k = 1 + int(rng.next_below(11));
    std::vector<i32> attrs(static_cast<std::size_t>(k));
    std::vector<i64> dists(static_cast<std::size_t>(k));
    bool chroma = rng.next_below(2) == 0;
    for (int j = 0; j < k; ++j) {
      attrs[std::size_t(j)] = chroma ? i32(rng.next_below(511)) - 255 : i32(rng.next_below(256));
      dists[std::size_t(j)] = 1 + i64(rng.next_below(64));
    }
    CHECK(idw_predict(attrs, dists) == testing::idw_oracle(attrs, dists));
  }
}

TEST_CASE("prediction is scale-consistent in distances") {
  std::vector<i32> attrs = {12, 200, 77, 3};
  std::vector<i64> d = {1, 3, 4, 9};
  i32 base = idw_predict(attrs, d);
  for (i64 scale : {2, 5, 11}) {
    std::vector<i64> ds = d;
    for (auto& v : ds) v *= scale;
    CHECK(idw_predict(attrs, ds) == base);
  }
}

TEST_CASE("IDW rejects bad input") {
  std::vector<i32> none;
  std::vector<i64> d0;
  CHECK_THROWS_AS(idw_predict(none, d0), CodecError);
  std::vector<i32> a = {1};
  std::vector<i64> zero = {0};
  CHECK_THROWS_AS(idw_predict(a, zero), CodecError);
}

TEST_CASE("residuals: constant cloud and the definition") {
  PointCloud cloud = testing::constant_cloud(testing::random_positions(400, 64, 51), {99});
  LodConfig cfg{2, 6, 4, {}};
  LodStructure lod = build_lod(cloud.positions, cfg);
  for (int t = 0; t < int(lod.layers.size()); ++t)
    for (i32 r : residuals_for_layer(cloud.channels[0], lod, t)) CHECK(r == 0);

  CHECK(reconstruct(97, 3) == 100);
  CHECK(reconstruct(0, 0) == 0);
  CHECK(reconstruct(255, -255) == 0);
}

TEST_CASE("linear ramp with symmetric neighbors predicts exactly") {
  // Hand-built structure: interior point with neighbors one step left/right
  // on a ramp a(x) = 5x.
  LodStructure lod;
  lod.base_layer_count = 1;
  lod.layers = {{0, 2}, {1}};
  lod.layer_of_point = {1, 2, 1};
  lod.neighbors.resize(3);
  lod.neighbors[1] = {{0, 1}, {2, 1}};
  std::vector<i32> values = {0, 5, 10};
  auto res = residuals_for_layer(values, lod, 1);
  REQUIRE(res.size() == 1);
  CHECK(res[0] == 0);
}

TEST_CASE("losslessness identity per point") {
  SplitMix64 rng(4242);
  for (int trial = 0; trial < 500; ++trial) {
    int k = 1 + int(rng.next_below(8));
    std::vector<i32> attrs(static_cast<std::size_t>(k));
    std::vector<i64> dists(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
      attrs[std::size_t(j)] = i32(rng.next_below(256));
      dists[std::size_t(j)] = 1 + i64(rng.next_below(20));
    }
    i32 a = i32(rng.next_below(256));
    i32 pred = idw_predict(attrs, dists);
    CHECK(reconstruct(pred, a - pred) == a);
  }
}

TEST_CASE("residual entropy does not exceed raw entropy on smooth clouds") {
  PointCloud cloud = testing::gradient_cloud(testing::grid_positions(14), 0.05);
  LodConfig cfg{4, 10, 5, {}};
  LodStructure lod = build_lod(cloud.positions, cfg);
  std::vector<i32> all_res;
  for (int t = 0; t < int(lod.layers.size()); ++t) {
    auto res = residuals_for_layer(cloud.channels[0], lod, t);
    all_res.insert(all_res.end(), res.begin(), res.end());
  }
  CHECK(empirical_entropy(all_res) <= empirical_entropy(cloud.channels[0]));
}
