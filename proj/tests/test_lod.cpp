#include <doctest.h>

#include <numeric>
#include <set>

#include "dpcc/lod.hpp"
#include "helpers.hpp"

using namespace dpcc;

TEST_CASE("single point cloud forms one base layer") {
  std::vector<Vec3i> pos = {{3, 3, 3}};
  std::vector<u32> schedule = {4};
  BaseLayers b = build_base_layers(pos, 1, schedule);
  REQUIRE(b.layers.size() == 1);
  CHECK(b.layers[0] == std::vector<u32>{0});
  CHECK(b.remainder.empty());
}

TEST_CASE("greedy distance rule on collinear points") {
  // x = 0,4,8,12 with schedule (7,3): R1={0,8}, R2={4,12}
  std::vector<Vec3i> pos = {{0, 0, 0}, {4, 0, 0}, {8, 0, 0}, {12, 0, 0}};
  std::vector<u32> schedule = {7, 3};
  BaseLayers b = build_base_layers(pos, 2, schedule);
  CHECK(b.layers[0] == std::vector<u32>{0, 2});
  CHECK(b.layers[1] == std::vector<u32>{1, 3});
  CHECK(b.remainder.empty());
}

TEST_CASE("zero threshold accepts every point") {
  auto pos = testing::grid_positions(4);
  std::vector<u32> schedule = {0};
  BaseLayers b = build_base_layers(pos, 1, schedule);
  CHECK(b.layers[0].size() == pos.size());
}

TEST_CASE("base layer construction input validation") {
  std::vector<Vec3i> none;
  std::vector<u32> schedule = {4, 2};
  CHECK_THROWS_AS(build_base_layers(none, 2, schedule), CodecError);
  std::vector<Vec3i> one = {{0, 0, 0}};
  std::vector<u32> wrong = {4};
  CHECK_THROWS_AS(build_base_layers(one, 2, wrong), CodecError);
  std::vector<u32> not_decreasing = {4, 4};
  CHECK_THROWS_AS(build_base_layers(one, 2, not_decreasing), CodecError);
}

TEST_CASE("inference layers are modulo-assigned and balanced") {
  std::vector<u32> rem(14);
  std::iota(rem.begin(), rem.end(), 100u);
  auto layers = build_inference_layers(rem, 2);
  CHECK(layers[0].size() == 7);
  CHECK(layers[1].size() == 7);

  std::vector<u32> six = {0, 1, 2, 3, 4, 5};
  auto three = build_inference_layers(six, 3);
  CHECK(three[0] == std::vector<u32>{0, 3});
  CHECK(three[1] == std::vector<u32>{1, 4});
  CHECK(three[2] == std::vector<u32>{2, 5});

  std::vector<u32> none;
  auto empty = build_inference_layers(none, 4);
  CHECK(empty.size() == 4);
  for (const auto& l : empty) CHECK(l.empty());

  CHECK_THROWS_AS(build_inference_layers(six, 0), CodecError);
}

TEST_CASE("knn_for_layer on pinned examples") {
  std::vector<Vec3i> pos = {{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {3, 3, 3}};
  std::vector<u32> queries = {0};
  std::vector<u32> cands = {1, 2, 3};
  auto nbs = knn_for_layer(pos, queries, cands, 2);
  REQUIRE(nbs[0].size() == 2);
  CHECK(nbs[0][0].index == 1);
  CHECK(nbs[0][0].dist == 1);
  CHECK(nbs[0][1].index == 2);
  CHECK(nbs[0][1].dist == 2);

  std::vector<u32> single = {3};
  auto one = knn_for_layer(pos, queries, single, 1);
  CHECK(one[0][0].index == 3);

  // equal distance 1: Morton keys 1 ((1,0,0)) and 2 ((0,1,0)); key 1 first
  std::vector<Vec3i> tie_pos = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  std::vector<u32> tie_cands = {1, 2};
  auto tie = knn_for_layer(tie_pos, queries, tie_cands, 1);
  CHECK(tie[0][0].index == 1);
}

TEST_CASE("scarce candidates pad by repeating the nearest") {
  std::vector<Vec3i> pos = {{0, 0, 0}, {2, 0, 0}, {5, 0, 0}};
  std::vector<u32> queries = {0};
  std::vector<u32> cands = {1, 2};
  auto nbs = knn_for_layer(pos, queries, cands, 5);
  REQUIRE(nbs[0].size() == 5);
  int nearest_copies = 0;
  for (const auto& n : nbs[0])
    if (n.index == 1) ++nearest_copies;
  CHECK(nearest_copies == 4);
  for (std::size_t i = 1; i < 5; ++i) CHECK(nbs[0][i - 1].dist <= nbs[0][i].dist);
}

TEST_CASE("kd-tree knn matches the exhaustive oracle") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 20 + rng.next_below(180);
    auto pos = testing::random_positions(n, 24, 1000 + u64(trial));  // dense: many ties
    std::vector<u32> cands(pos.size() - 1);
    std::iota(cands.begin(), cands.end(), 1u);
    int k = 1 + int(rng.next_below(11));
    std::vector<u32> queries = {0};
    auto got = knn_for_layer(pos, queries, cands, k);
    auto want = testing::knn_oracle(pos, pos[0], cands, k);
    REQUIRE(got[0].size() >= want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      CHECK(got[0][i].index == want[i].index);
      CHECK(got[0][i].dist == want[i].dist);
    }
  }
}

TEST_CASE("full LoD structure: coverage, disjointness, causality") {
  PointCloud cloud = testing::gradient_cloud(testing::random_positions(3000, 128, 21));
  LodConfig cfg{4, 10, 5, {}};
  LodStructure lod = build_lod(cloud.positions, cfg);

  REQUIRE(lod.layers.size() == 10);
  std::set<u32> seen;
  std::size_t total = 0;
  for (const auto& layer : lod.layers) {
    total += layer.size();
    for (u32 p : layer) CHECK(seen.insert(p).second);
  }
  CHECK(total == cloud.size());

  // layer ranks available for every point
  for (std::size_t p = 0; p < cloud.size(); ++p) CHECK(lod.layer_of_point[p] >= 1);

  // base: neighbors from LoD_{t-1} or preorder of the same layer; inference:
  // strictly earlier layers
  std::vector<u32> order_in_layer(cloud.size(), 0);
  for (const auto& layer : lod.layers)
    for (std::size_t i = 0; i < layer.size(); ++i) order_in_layer[layer[i]] = u32(i);

  for (std::size_t p = 0; p < cloud.size(); ++p) {
    int tp = lod.layer_of_point[p];
    for (const auto& nb : lod.neighbors[p]) {
      CHECK(nb.dist >= 1);
      int tn = lod.layer_of_point[nb.index];
      if (tp <= lod.base_layer_count) {
        bool earlier_layer = tn < tp;
        bool preorder_same = tn == tp && order_in_layer[nb.index] < order_in_layer[u32(p)];
        CHECK((earlier_layer || preorder_same));
      } else {
        CHECK(tn < tp);
      }
    }
  }

  // neighbor lists sorted and fixed-length (first point exempt)
  for (std::size_t p = 0; p < cloud.size(); ++p) {
    const auto& nbs = lod.neighbors[p];
    if (p == 0) {
      CHECK(nbs.empty());
      continue;
    }
    REQUIRE(int(nbs.size()) == cfg.neighbors);
    for (std::size_t i = 1; i < nbs.size(); ++i) CHECK(nbs[i - 1].dist <= nbs[i].dist);
  }
}

TEST_CASE("LoD construction replays bit-identically") {
  PointCloud cloud = testing::gradient_rgb_cloud(testing::random_positions(2000, 200, 33));
  LodConfig cfg{8, 16, 7, {}};
  LodStructure a = build_lod(cloud.positions, cfg);
  LodStructure b = build_lod(cloud.positions, cfg);
  CHECK(a.digest() == b.digest());
  CHECK(a.realized_schedule == b.realized_schedule);
}

TEST_CASE("calibrated schedule lands the base layer near 5%") {
  auto pos = testing::grid_positions(30);  // 27000 points
  LodConfig cfg{8, 16, 7, {}};
  LodStructure lod = build_lod(pos, cfg);
  std::size_t base = 0;
  for (int t = 0; t < lod.base_layer_count; ++t) base += lod.layers[std::size_t(t)].size();
  double frac = double(base) / double(pos.size());
  CHECK(frac > 0.01);
  CHECK(frac < 0.15);
}

TEST_CASE("intra-layer chunked search stays exact on a large single layer") {
  // One base layer with threshold 0 accepts everything, forcing the periodic
  // prefix-tree + tail path; verify a few preorder KNN lists against the oracle.
  auto pos = testing::random_positions(2600, 64, 77);
  LodConfig cfg{1, 2, 4, {0}};
  LodStructure lod = build_lod(pos, cfg);
  const auto& layer = lod.layers[0];
  REQUIRE(layer.size() == pos.size());
  SplitMix64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t m = 1 + rng.next_below(layer.size() - 1);
    std::vector<u32> preorder(layer.begin(), layer.begin() + i64(m));
    auto want = testing::knn_oracle(pos, pos[layer[m]], preorder, 4);
    const auto& got = lod.neighbors[layer[m]];
    REQUIRE(got.size() >= want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      CHECK(got[i].index == want[i].index);
      CHECK(got[i].dist == want[i].dist);
    }
  }
}
