#include <doctest.h>

#include "dpcc/pipeline.hpp"
#include "helpers.hpp"
#include "nn_check.hpp"

using namespace dpcc;

namespace {

CodecConfig micro_codec() {
  CodecConfig cfg;
  cfg.lod = {2, 6, 2, {}};
  cfg.partition.batch_size = 32;
  cfg.n_el = 1;
  cfg.n_ea = 1;
  cfg.n_er = 0;
  cfg.heads = 2;
  return cfg;
}

bool clouds_equal(const PointCloud& a, const PointCloud& b) {
  return a.positions == b.positions && a.channels == b.channels
    && a.attributes.mode == b.attributes.mode;
}

}  // namespace

TEST_CASE("baseline roundtrip is lossless, single and RGB") {
  CodecConfig cfg = micro_codec();
  EncodeOptions opts;
  opts.baseline = true;
  opts.embed_geometry = true;
  for (PointCloud cloud :
       {testing::gradient_cloud(testing::random_positions(800, 64, 3)),
        testing::noise_cloud(testing::random_positions(700, 90, 4), 3, 5),
        testing::gradient_rgb_cloud(testing::sphere_positions(900, 60.0, 6))}) {
    EncodeResult enc = encode(cloud, cfg, opts);
    PointCloud back = decode(enc.bytes, {});
    CHECK(clouds_equal(back, cloud));
  }
}

TEST_CASE("learned-model roundtrip is lossless with an untrained model") {
  CodecConfig cfg = micro_codec();
  PointCloud cloud = testing::gradient_rgb_cloud(testing::random_positions(600, 48, 7));
  EntropyModel model(cfg.model_config(AttributeMode::kRgbColor), 3);
  model.finalize_for_coding();
  EncodeOptions opts;
  opts.model = &model;
  opts.embed_geometry = true;
  EncodeResult enc = encode(cloud, cfg, opts);
  DecodeOptions dopts;
  dopts.model = &model;
  PointCloud back = decode(enc.bytes, dopts);
  CHECK(clouds_equal(back, cloud));
  CHECK(enc.report.inference_bits > 0);
}

TEST_CASE("one-point cloud degenerates to header plus raw literal") {
  CodecConfig cfg = micro_codec();
  PointCloud cloud = testing::constant_cloud({{5, 6, 7}}, {1, 2, 3});
  EncodeOptions opts;
  opts.baseline = true;
  opts.embed_geometry = true;
  EncodeResult enc = encode(cloud, cfg, opts);
  PointCloud back = decode(enc.bytes, {});
  CHECK(clouds_equal(back, cloud));
}

TEST_CASE("constant cloud compresses far below 1 bpp") {
  CodecConfig cfg = micro_codec();
  cfg.partition.batch_size = 256;
  PointCloud cloud = testing::constant_cloud(testing::grid_positions(22), {200});  // 10648 pts
  EncodeOptions opts;
  opts.baseline = true;
  EncodeResult enc = encode(cloud, cfg, opts);
  CHECK(enc.report.bpp() < 0.5);
  PointCloud back = decode(enc.bytes, {.model = nullptr, .geometry = cloud, .threads = 1});
  CHECK(clouds_equal(back, cloud));
}

TEST_CASE("noise attributes sit near the 8 bpp floor per channel") {
  CodecConfig cfg = micro_codec();
  cfg.partition.batch_size = 256;
  PointCloud cloud = testing::noise_cloud(testing::grid_positions(20), 1, 17);  // 8000 pts
  EncodeOptions opts;
  opts.baseline = true;
  EncodeResult enc = encode(cloud, cfg, opts);
  CHECK(enc.report.bpp() > 7.8);
  CHECK(enc.report.bpp() < 9.0);
}

TEST_CASE("encoding is deterministic byte for byte") {
  CodecConfig cfg = micro_codec();
  PointCloud cloud = testing::gradient_rgb_cloud(testing::random_positions(900, 80, 23));
  EncodeOptions opts;
  opts.baseline = true;
  opts.embed_geometry = true;
  CHECK(encode(cloud, cfg, opts).bytes == encode(cloud, cfg, opts).bytes);
}

TEST_CASE("tampered stream is rejected by section checksums") {
  CodecConfig cfg = micro_codec();
  PointCloud cloud = testing::gradient_cloud(testing::random_positions(500, 48, 29));
  EncodeOptions opts;
  opts.baseline = true;
  opts.embed_geometry = true;
  EncodeResult enc = encode(cloud, cfg, opts);
  auto bad = enc.bytes;
  bad[bad.size() - 3] ^= 0x10;  // inside the last section blob
  bool integrity = false;
  try {
    decode(bad, {});
  } catch (const CodecError& e) {
    integrity = e.kind() == ErrorKind::kIntegrity;
  }
  CHECK(integrity);
}

TEST_CASE("wrong model is rejected by hash before decoding") {
  CodecConfig cfg = micro_codec();
  PointCloud cloud = testing::gradient_cloud(testing::random_positions(400, 48, 31));
  EntropyModel model(cfg.model_config(AttributeMode::kSingleChannel), 3);
  model.finalize_for_coding();
  EncodeOptions opts;
  opts.model = &model;
  opts.embed_geometry = true;
  EncodeResult enc = encode(cloud, cfg, opts);

  EntropyModel other(cfg.model_config(AttributeMode::kSingleChannel), 4);
  other.finalize_for_coding();
  DecodeOptions dopts;
  dopts.model = &other;
  bool integrity = false;
  try {
    decode(enc.bytes, dopts);
  } catch (const CodecError& e) {
    integrity = e.kind() == ErrorKind::kIntegrity;
  }
  CHECK(integrity);
}

TEST_CASE("geometry carriage: embedded and side-file workflows") {
  CodecConfig cfg = micro_codec();
  PointCloud cloud = testing::gradient_cloud(testing::random_positions(600, 100, 37));
  EncodeOptions opts;
  opts.baseline = true;

  // side-file mode: geometry required
  EncodeResult side = encode(cloud, cfg, opts);
  CHECK_THROWS_AS(decode(side.bytes, {}), CodecError);
  DecodeOptions with_geo;
  with_geo.geometry = cloud;
  CHECK(clouds_equal(decode(side.bytes, with_geo), cloud));
  CHECK(side.report.geometry_bits == 0);

  // mismatched geometry is caught
  DecodeOptions wrong_geo;
  wrong_geo.geometry = testing::gradient_cloud(testing::random_positions(600, 100, 38));
  bool integrity = false;
  try {
    decode(side.bytes, wrong_geo);
  } catch (const CodecError& e) {
    integrity = e.kind() == ErrorKind::kIntegrity;
  }
  CHECK(integrity);

  // embedded mode decodes standalone and reports carriage bits separately
  opts.embed_geometry = true;
  EncodeResult emb = encode(cloud, cfg, opts);
  CHECK(emb.report.geometry_bits > 0);
  CHECK(emb.report.total_attribute_bits()
        == emb.report.header_bits + emb.report.base_bits + emb.report.inference_bits
           + emb.report.overflow_bits);
  CHECK(clouds_equal(decode(emb.bytes, {}), cloud));
}

TEST_CASE("chroma overflow escapes roundtrip") {
  // saturated colors produce Co/Cg residual spikes beyond [-255,255]
  SplitMix64 rng(91);
  auto pos = testing::random_positions(1200, 40, 41);
  std::vector<std::vector<i32>> ch(3);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    bool spike = rng.next_below(7) == 0;
    ch[0].push_back(spike ? 255 : 0);
    ch[1].push_back(spike ? 0 : 255);
    ch[2].push_back(spike ? 255 : i32(rng.next_below(2)));
  }
  PointCloud cloud = testing::finalize_cloud(pos, std::move(ch));
  CodecConfig cfg = micro_codec();
  EncodeOptions opts;
  opts.baseline = true;
  opts.embed_geometry = true;
  EncodeResult enc = encode(cloud, cfg, opts);
  CHECK(clouds_equal(decode(enc.bytes, {}), cloud));
}

TEST_CASE("rate report arithmetic") {
  RateReport r;
  r.points = 1000;
  r.header_bits = 0;
  r.base_bits = 5000;
  CHECK(r.bpp() == doctest::Approx(5.0));

  CodecConfig cfg = micro_codec();
  PointCloud cloud = testing::gradient_cloud(testing::random_positions(800, 64, 43));
  EncodeOptions opts;
  opts.baseline = true;
  EncodeResult enc = encode(cloud, cfg, opts);
  RateReport rep = rate_report(enc.bytes);
  CHECK(rep.points == cloud.size());
  CHECK(rep.overflow_bits == 0);  // single channel: no chroma overflow
  CHECK(rep.total_attribute_bits()
        == rep.header_bits + rep.base_bits + rep.inference_bits + rep.overflow_bits);
  CHECK(rep.to_json().find("bpp") != std::string::npos);
}

TEST_CASE("training batches carry exact residuals") {
  CodecConfig cfg = micro_codec();
  PointCloud cloud = testing::gradient_cloud(testing::random_positions(900, 64, 47));
  auto batches = prepare_training_batches(cloud, cfg);
  REQUIRE(!batches.empty());
  std::size_t real_total = 0;
  for (const auto& b : batches) {
    REQUIRE(b.residuals.size() == std::size_t(b.desc.count));
    real_total += std::size_t(b.desc.real_count());
    for (std::size_t i = 0; i < std::size_t(b.desc.count); ++i)
      if (!b.desc.real_mask[i]) CHECK(b.residuals[i] == 0);
  }
  // every inference point appears exactly once as a real batch entry
  LodStructure lod = build_lod(cloud.positions, cfg.lod);
  std::size_t base = 0;
  for (int t = 0; t < lod.base_layer_count; ++t) base += lod.layers[std::size_t(t)].size();
  CHECK(real_total == cloud.size() - base);
}
