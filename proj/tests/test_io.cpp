#include <doctest.h>

#include <sstream>

#include "dpcc/io.hpp"
#include "helpers.hpp"

using namespace dpcc;

namespace {

std::vector<u8> ascii_ply(const std::string& body, std::size_t count,
                          const std::string& props) {
  std::ostringstream ss;
  ss << "ply\nformat ascii 1.0\nelement vertex " << count << "\n" << props
     << "end_header\n" << body;
  std::string s = ss.str();
  return std::vector<u8>(s.begin(), s.end());
}

const std::string kRgbProps =
  "property int x\nproperty int y\nproperty int z\n"
  "property uchar red\nproperty uchar green\nproperty uchar blue\n";

}  // namespace

TEST_CASE("morton code matches the stated interleave") {
  CHECK(morton_code({0, 0, 0}) == 0);
  CHECK(morton_code({1, 0, 0}) == 1);
  CHECK(morton_code({0, 1, 0}) == 2);
  CHECK(morton_code({0, 0, 1}) == 4);
  CHECK(morton_code({3, 3, 3}) == 63);
}

TEST_CASE("morton code agrees with the bit-interleave oracle") {
  SplitMix64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    Vec3i p{i32(rng.next_below(1u << 21)), i32(rng.next_below(1u << 21)),
            i32(rng.next_below(1u << 21))};
    u64 code = morton_code(p);
    CHECK(code == testing::morton_oracle(p));
    Vec3i back = morton_decode(code);
    CHECK(back == p);
  }
  CHECK_THROWS_AS(morton_code({1 << 21, 0, 0}), CodecError);
}

TEST_CASE("two-point PLY loads in Morton order") {
  auto bytes = ascii_ply("1 0 0 20 20 20\n0 0 0 10 10 10\n", 2, kRgbProps);
  PointCloud c = load_ply(bytes);
  REQUIRE(c.size() == 2);
  CHECK(c.positions[0] == Vec3i{0, 0, 0});
  CHECK(c.positions[1] == Vec3i{1, 0, 0});
  CHECK(c.channels[0][0] == 10);
  CHECK(c.channels[0][1] == 20);
}

TEST_CASE("duplicate positions keep the first occurrence") {
  auto bytes = ascii_ply("5 5 5 1 2 3\n5 5 5 9 9 9\n", 2, kRgbProps);
  PointCloud c = load_ply(bytes);
  REQUIRE(c.size() == 1);
  CHECK(c.channels[0][0] == 1);
  CHECK(c.channels[2][0] == 3);
}

TEST_CASE("eight cube corners sort into canonical Morton order") {
  std::ostringstream body;
  // shuffled corner order
  for (auto p : {Vec3i{1, 1, 1}, Vec3i{0, 0, 0}, Vec3i{0, 1, 1}, Vec3i{1, 0, 0},
                 Vec3i{0, 0, 1}, Vec3i{1, 1, 0}, Vec3i{0, 1, 0}, Vec3i{1, 0, 1}})
    body << p.x << " " << p.y << " " << p.z << " 1 1 1\n";
  PointCloud c = load_ply(ascii_ply(body.str(), 8, kRgbProps));
  std::vector<Vec3i> expected = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0},
                                 {0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
  REQUIRE(c.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(c.positions[i] == expected[i]);
}

TEST_CASE("canonicalization is idempotent") {
  PointCloud c = testing::noise_cloud(testing::random_positions(500, 64, 1), 3, 2);
  PointCloud twice = c;
  canonicalize(twice);
  CHECK(twice.positions == c.positions);
  CHECK(twice.channels == c.channels);
}

TEST_CASE("save/load roundtrip is bit-exact") {
  for (PointCloud c : {testing::noise_cloud(testing::random_positions(300, 200, 3), 3, 4),
                       testing::noise_cloud(testing::random_positions(300, 200, 5), 1, 6)}) {
    PointCloud back = load_ply(save_ply(c));
    CHECK(back.positions == c.positions);
    CHECK(back.channels == c.channels);
    CHECK(back.attributes.mode == c.attributes.mode);
  }
}

TEST_CASE("empty and small clouds serialize with correct counts") {
  PointCloud empty;
  empty.attributes.mode = AttributeMode::kSingleChannel;
  empty.attributes.names = {"reflectance"};
  auto bytes = save_ply(empty);
  std::string header(bytes.begin(), bytes.end());
  CHECK(header.find("element vertex 0") != std::string::npos);

  PointCloud three = testing::noise_cloud(testing::random_positions(3, 16, 7), 1, 8);
  auto b3 = save_ply(three);
  std::string h3(b3.begin(), b3.begin() + 80);
  CHECK(h3.find("element vertex 3") != std::string::npos);
}

TEST_CASE("float coordinates accepted only when integral") {
  std::string props =
    "property float x\nproperty float y\nproperty float z\n"
    "property uchar reflectance\n";
  PointCloud ok = load_ply(ascii_ply("1.0 2.0 3.0 7\n", 1, props));
  CHECK(ok.positions[0] == Vec3i{1, 2, 3});
  CHECK_THROWS_AS(load_ply(ascii_ply("1.5 2.0 3.0 7\n", 1, props)), CodecError);
}

TEST_CASE("malformed inputs are rejected") {
  std::string junk = "not a ply";
  CHECK_THROWS_AS(load_ply(std::vector<u8>(junk.begin(), junk.end())), CodecError);
  // missing attribute property
  auto no_attr = ascii_ply("0 0 0\n", 1,
                           "property int x\nproperty int y\nproperty int z\n");
  CHECK_THROWS_AS(load_ply(no_attr), CodecError);
  // coordinate above declared depth
  auto big = ascii_ply("1024 0 0 1 1 1\n", 1, kRgbProps);
  CHECK_THROWS_AS(load_ply(big, 10), CodecError);
  CHECK(load_ply(big, 11).geometry_bits == 11);
  // negative coordinate
  auto neg = ascii_ply("-1 0 0 1 1 1\n", 1, kRgbProps);
  CHECK_THROWS_AS(load_ply(neg), CodecError);
}

TEST_CASE("geometry bit depth is inferred as the smallest cover") {
  auto bytes = ascii_ply("0 0 0 1 1 1\n130 0 0 2 2 2\n", 2, kRgbProps);
  CHECK(load_ply(bytes).geometry_bits == 8);
}
