#include "dpcc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "dpcc/coder.hpp"
#include "dpcc/color.hpp"
#include "dpcc/predict.hpp"

namespace dpcc {

//============================================================================
// Config
//============================================================================

ModelConfig CodecConfig::model_config(AttributeMode mode) const {
  ModelConfig m;
  m.mode = mode;
  m.k = lod.neighbors;
  m.dald = dald;
  m.n_el = n_el;
  m.n_ea = n_ea;
  m.n_er = n_er;
  m.layers = layers;
  m.heads = heads;
  return m;
}

CodecConfig CodecConfig::object_default() {
  CodecConfig c;
  c.lod = {8, 24, 11, {}};
  c.dald = DaldConfig::object_default();
  c.partition.batch_size = 1024;
  return c;
}

CodecConfig CodecConfig::lidar_default() {
  CodecConfig c;
  c.lod = {8, 16, 9, {}};
  c.dald = DaldConfig::lidar_default();
  c.partition.batch_size = 4096;
  return c;
}

CodecConfig CodecConfig::desk_default() {
  CodecConfig c;
  c.lod = {8, 16, 7, {}};
  c.dald = DaldConfig::object_default();
  c.partition.batch_size = 256;
  return c;
}

//============================================================================
// Container
//============================================================================

namespace {

constexpr u16 kStreamVersion = 1;

void write_header(ByteWriter& w, const BitstreamHeader& h) {
  w.bytes("DPCC", 4);
  w.u16v(h.version);
  u16 flags = (h.embed_geometry ? 1 : 0) | (h.rgb_mode ? 2 : 0) | (h.baseline ? 4 : 0);
  w.u16v(flags);
  w.u64v(h.point_count);
  w.u8v(h.geometry_bits);
  w.u8v(u8(h.channel_names.size()));
  for (const auto& name : h.channel_names) w.str(name);
  for (i32 a : h.first_point_attrs) w.i32v(a);
  w.u16v(h.lod_t);
  w.u16v(h.lod_l);
  w.u16v(h.lod_k);
  for (u32 s : h.schedule) w.u32v(s);
  w.u16v(h.dald_n);
  for (const auto& axis : h.thresholds)
    for (double t : axis) w.f64v(t);
  w.u64v(h.partition_seed);
  w.u32v(h.num_clusters);
  w.u32v(h.batch_size);
  w.u32v(h.batches_per_block);
  w.u64v(h.model_hash);
  w.u32v(h.geometry_crc);
  w.u64v(h.lod_digest);
  w.u64v(h.partition_digest);
  w.u64v(h.batch_digest);
}

BitstreamHeader read_header(ByteReader& r) {
  char magic[4];
  r.bytes(magic, 4);
  if (std::string(magic, 4) != "DPCC") fail(ErrorKind::kFormat, "bad bitstream magic");
  BitstreamHeader h;
  h.version = r.u16v();
  if (h.version != kStreamVersion) fail(ErrorKind::kFormat, "unsupported bitstream version");
  u16 flags = r.u16v();
  h.embed_geometry = flags & 1;
  h.rgb_mode = flags & 2;
  h.baseline = flags & 4;
  h.point_count = r.u64v();
  h.geometry_bits = r.u8v();
  u8 nch = r.u8v();
  for (u8 i = 0; i < nch; ++i) h.channel_names.push_back(r.str());
  h.first_point_attrs.resize(nch);
  for (auto& a : h.first_point_attrs) a = r.i32v();
  h.lod_t = r.u16v();
  h.lod_l = r.u16v();
  h.lod_k = r.u16v();
  h.schedule.resize(h.lod_t);
  for (auto& s : h.schedule) s = r.u32v();
  h.dald_n = r.u16v();
  for (auto& axis : h.thresholds) {
    axis.resize(std::size_t(h.dald_n) + 1);
    for (auto& t : axis) t = r.f64v();
  }
  h.partition_seed = r.u64v();
  h.num_clusters = r.u32v();
  h.batch_size = r.u32v();
  h.batches_per_block = r.u32v();
  h.model_hash = r.u64v();
  h.geometry_crc = r.u32v();
  h.lod_digest = r.u64v();
  h.partition_digest = r.u64v();
  h.batch_digest = r.u64v();
  return h;
}

}  // namespace

std::vector<u8> Container::serialize() const {
  std::vector<u8> out;
  ByteWriter w(out);
  write_header(w, header);
  w.u32v(u32(sections.size()));
  std::size_t table_at = out.size();
  std::size_t blob_at = table_at + sections.size() * 24;
  for (const auto& s : sections) {
    w.u32v(s.id);
    w.u64v(blob_at);
    w.u64v(s.bytes.size());
    w.u32v(crc32(s.bytes.data(), s.bytes.size()));
    blob_at += s.bytes.size();
  }
  for (const auto& s : sections) w.bytes(s.bytes.data(), s.bytes.size());
  return out;
}

Container Container::parse(const std::vector<u8>& bytes) {
  ByteReader r(bytes.data(), bytes.size());
  Container ct;
  ct.header = read_header(r);
  u32 count = r.u32v();
  struct Entry { u32 id; u64 off, len; u32 crc; };
  std::vector<Entry> entries(count);
  for (auto& e : entries) {
    e.id = r.u32v();
    e.off = r.u64v();
    e.len = r.u64v();
    e.crc = r.u32v();
  }
  ct.header_size_ = r.pos();
  for (const auto& e : entries) {
    if (e.off + e.len > bytes.size()) fail(ErrorKind::kIntegrity, "section out of bounds");
    Section s;
    s.id = e.id;
    s.bytes.assign(bytes.begin() + i64(e.off), bytes.begin() + i64(e.off + e.len));
    if (crc32(s.bytes.data(), s.bytes.size()) != e.crc)
      fail(ErrorKind::kIntegrity, "section checksum mismatch (id " + std::to_string(e.id) + ")");
    ct.sections.push_back(std::move(s));
  }
  return ct;
}

const Section* Container::find(u32 id) const {
  for (const auto& s : sections)
    if (s.id == id) return &s;
  return nullptr;
}

std::size_t Container::header_bytes() const {
  if (header_size_) return header_size_;
  std::vector<u8> tmp;
  ByteWriter w(tmp);
  write_header(w, header);
  return tmp.size() + 4 + sections.size() * 24;
}

//============================================================================
// Channel transform plumbing
//============================================================================

namespace {

std::vector<std::vector<i32>> transformed_channels(const PointCloud& cloud) {
  const std::size_t n = cloud.size();
  if (cloud.attributes.mode == AttributeMode::kRgbColor) {
    std::vector<std::vector<i32>> out(3, std::vector<i32>(n));
    for (std::size_t i = 0; i < n; ++i) {
      YCoCg c = rgb_to_ycocgr(cloud.channels[0][i], cloud.channels[1][i], cloud.channels[2][i]);
      out[0][i] = c.y;
      out[1][i] = c.co;
      out[2][i] = c.cg;
    }
    return out;
  }
  return {cloud.channels[0]};
}

void untransform_channels(const std::vector<std::vector<i32>>& values, PointCloud& cloud) {
  const std::size_t n = values[0].size();
  if (cloud.attributes.mode == AttributeMode::kRgbColor) {
    cloud.channels.assign(3, std::vector<i32>(n));
    for (std::size_t i = 0; i < n; ++i) {
      i32 r, g, b;
      ycocgr_to_rgb({values[0][i], values[1][i], values[2][i]}, r, g, b);
      cloud.channels[0][i] = r;
      cloud.channels[1][i] = g;
      cloud.channels[2][i] = b;
    }
  } else {
    cloud.channels = {values[0]};
  }
}

u32 positions_crc(std::span<const Vec3i> positions) {
  std::vector<u8> bytes;
  ByteWriter w(bytes);
  for (const auto& p : positions) {
    w.u32v(u32(p.x));
    w.u32v(u32(p.y));
    w.u32v(u32(p.z));
  }
  return crc32(bytes.data(), bytes.size());
}

void value_range_check(i32 value, bool chroma) {
  if (chroma ? (value < -255 || value > 255) : (value < 0 || value > 255))
    fail(ErrorKind::kIntegrity, "reconstructed attribute out of range (corrupt stream)");
}

//============================================================================
// Geometry carriage: Morton deltas as LEB128 varints, bytes coded through
// an adaptive order-0 byte model. Plumbing only; excluded from bpp.
//============================================================================

void varint_append(std::vector<u8>& out, u64 v) {
  while (v >= 0x80) {
    out.push_back(u8(v) | 0x80);
    v >>= 7;
  }
  out.push_back(u8(v));
}

std::vector<u8> encode_geometry(std::span<const Vec3i> positions) {
  std::vector<u8> raw;
  u64 prev = 0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    u64 m = morton_code(positions[i]);
    varint_append(raw, i == 0 ? m : m - prev - 1);
    prev = m;
  }
  std::vector<u8> out;
  RangeEncoder rc(out);
  AdaptiveModel bytes_model(256);
  for (u8 b : raw) {
    rc.encode(bytes_model.cdf(), b);
    bytes_model.observe(b);
  }
  rc.finish();
  return out;
}

std::vector<Vec3i> decode_geometry(const std::vector<u8>& bytes, u64 count) {
  std::vector<Vec3i> out;
  out.reserve(count);
  RangeDecoder rc(bytes.data(), bytes.size());
  AdaptiveModel bytes_model(256);
  u64 prev = 0;
  for (u64 i = 0; i < count; ++i) {
    u64 v = 0;
    int shift = 0;
    for (;;) {
      int b = rc.decode(bytes_model.cdf());
      bytes_model.observe(b);
      v |= u64(b & 0x7f) << shift;
      if (!(b & 0x80)) break;
      shift += 7;
      if (shift > 63) fail(ErrorKind::kIntegrity, "geometry varint overflow");
    }
    u64 m = i == 0 ? v : prev + 1 + v;
    prev = m;
    out.push_back(morton_decode(m));
  }
  return out;
}

//============================================================================
// Shared encode/decode state
//============================================================================

struct PipelineState {
  std::vector<Vec3i> positions;
  LodStructure lod;
  BlockAssignment partition;
  std::vector<LayerBatch> batches;
  std::vector<std::vector<i32>> values;  // transformed, filled as decoded
  int channels = 0;
};

std::vector<i32> base_layer_residuals(const PipelineState& st, int channel) {
  std::vector<i32> out;
  for (int t = 0; t < st.lod.base_layer_count; ++t) {
    auto res = residuals_for_layer(st.values[std::size_t(channel)], st.lod, t);
    const auto& layer = st.lod.layers[std::size_t(t)];
    for (std::size_t i = 0; i < layer.size(); ++i)
      if (!st.lod.neighbors[layer[i]].empty())  // first point is a raw literal
        out.push_back(res[i]);
  }
  return out;
}

// Exact residuals for one batch, channel-major, padded rows zero.
std::vector<i32> batch_residuals(const PipelineState& st, const DescriptorBatch& desc,
                                 const LayerBatch& lb) {
  const std::size_t count = std::size_t(desc.count);
  std::vector<i32> res(std::size_t(st.channels) * count, 0);
  std::size_t n_real = count - lb.batch.pad_count;
  for (int c = 0; c < st.channels; ++c)
    for (std::size_t i = 0; i < n_real; ++i) {
      u32 p = lb.batch.points[i];
      res[std::size_t(c) * count + i] =
        st.values[std::size_t(c)][p] - desc.predicted_raw[i * std::size_t(st.channels) + std::size_t(c)];
    }
  return res;
}

}  // namespace

//============================================================================
// Encode
//============================================================================

EncodeResult encode(const PointCloud& cloud, const CodecConfig& config,
                    const EncodeOptions& options) {
  if (cloud.size() == 0) fail(ErrorKind::kUsage, "empty cloud");
  const bool rgb = cloud.attributes.mode == AttributeMode::kRgbColor;
  const int channels = rgb ? 3 : 1;

  std::optional<EntropyModel> model;
  if (!options.baseline) {
    if (!options.model) fail(ErrorKind::kUsage, "no model given and baseline mode not selected");
    if (!(options.model->config() == config.model_config(cloud.attributes.mode)))
      fail(ErrorKind::kUsage, "model file does not match the codec configuration");
    model = *options.model;  // mutable copy; forward passes keep caches
  }
  nn::set_matmul_threads(options.threads);

  PipelineState st;
  st.positions = cloud.positions;
  st.values = transformed_channels(cloud);
  st.channels = channels;
  st.lod = build_lod(st.positions, config.lod);
  const int T = st.lod.base_layer_count;
  const int L = int(st.lod.layers.size());

  Container ct;
  for (int c = 0; c < channels; ++c) {
    auto res = base_layer_residuals(st, c);
    ct.sections.push_back({kSectionBase0 + u32(c), run_length_encode(res)});
  }

  st.partition = compute_partition(st.positions, st.lod, st.values, config.partition);
  st.batches = make_batches(st.lod, st.partition, config.partition.batch_size);

  std::array<std::vector<i32>, 2> excess;  // Co, Cg escapes

  if (!options.baseline) {
    // One independent range-coded stream per batch, concatenated per layer
    // behind a length table.
    std::vector<u8> sec;
    ByteWriter w(sec);
    w.u16v(u16(L - T));
    std::size_t bi = 0;
    for (int t = T + 1; t <= L; ++t) {
      std::vector<std::vector<u8>> blobs;
      while (bi < st.batches.size() && st.batches[bi].layer == t) {
        const LayerBatch& lb = st.batches[bi];
        DescriptorBatch desc = build_descriptor_batch(st.positions, st.lod, lb.batch.points,
                                                      lb.batch.pad_count, st.values, config.dald);
        std::vector<i32> res = batch_residuals(st, desc, lb);
        const std::size_t count = std::size_t(desc.count);
        const std::size_t n_real = count - lb.batch.pad_count;

        std::vector<u8> blob;
        RangeEncoder rc(blob);
        nn::Mat ctx = model->contexts(desc);
        for (int c = 0; c < channels; ++c) {
          auto res_c = std::span<const i32>(res).subspan(std::size_t(c) * count, count);
          nn::Mat probs = model->channel_probs(
            c, ctx, std::span<const i32>(res).subspan(0, count),
            channels == 3 ? std::span<const i32>(res).subspan(count, count)
                          : std::span<const i32>());
          for (std::size_t i = 0; i < n_real; ++i) {
            i32 r = res_c[i];
            i32 main = clamp_residual(r);
            if (c > 0) excess[std::size_t(c - 1)].push_back(overflow_escape_value(r));
            QuantizedCdf cdf = quantize_cdf(
              std::span<const double>(probs.row(i), std::size_t(kResidualAlphabet)));
            rc.encode(cdf, main + 255);
          }
        }
        rc.finish();
        blobs.push_back(std::move(blob));
        ++bi;
      }
      w.u32v(u32(blobs.size()));
      for (const auto& b : blobs) w.u32v(u32(b.size()));
      for (const auto& b : blobs) w.bytes(b.data(), b.size());
    }
    ct.sections.push_back({kSectionInference, std::move(sec)});
  } else {
    // Baseline: one adaptive stream per channel spanning all layers.
    for (int c = 0; c < channels; ++c) {
      std::vector<u8> stream;
      RangeEncoder rc(stream);
      AdaptiveModel am = make_baseline_residual_model();
      for (const auto& lb : st.batches) {
        std::size_t n_real = lb.batch.points.size() - lb.batch.pad_count;
        for (std::size_t i = 0; i < n_real; ++i) {
          u32 p = lb.batch.points[i];
          i32 pred = idw_predict_point(st.values[std::size_t(c)], st.lod.neighbors[p]);
          i32 r = st.values[std::size_t(c)][p] - pred;
          i32 main = clamp_residual(r);
          if (c > 0) excess[std::size_t(c - 1)].push_back(overflow_escape_value(r));
          rc.encode(am.cdf(), main + 255);
          am.observe(main + 255);
        }
      }
      rc.finish();
      ct.sections.push_back({kSectionBaseline0 + u32(c), std::move(stream)});
    }
  }

  for (int c = 0; c < 2; ++c) {
    const auto& ex = excess[std::size_t(c)];
    bool any = std::any_of(ex.begin(), ex.end(), [](i32 v) { return v != 0; });
    if (any)
      ct.sections.push_back({kSectionOverflowCo + u32(c), run_length_encode(ex)});
  }

  if (options.embed_geometry)
    ct.sections.insert(ct.sections.begin(), {kSectionGeometry, encode_geometry(st.positions)});

  BitstreamHeader& h = ct.header;
  h.version = kStreamVersion;
  h.embed_geometry = options.embed_geometry;
  h.rgb_mode = rgb;
  h.baseline = options.baseline;
  h.point_count = cloud.size();
  h.geometry_bits = u8(cloud.geometry_bits);
  h.channel_names = cloud.attributes.names;
  u32 first_idx = st.lod.layers[0][0];
  for (int c = 0; c < channels; ++c)
    h.first_point_attrs.push_back(st.values[std::size_t(c)][first_idx]);
  h.lod_t = u16(T);
  h.lod_l = u16(L);
  h.lod_k = u16(config.lod.neighbors);
  h.schedule = st.lod.realized_schedule;
  h.dald_n = u16(config.dald.n);
  h.thresholds = config.dald.thresholds;
  h.partition_seed = config.partition.seed;
  h.num_clusters = st.partition.num_clusters;
  h.batch_size = config.partition.batch_size;
  h.batches_per_block = config.partition.batches_per_block;
  h.model_hash = options.baseline ? 0 : options.model->params_hash();
  h.geometry_crc = positions_crc(st.positions);
  h.lod_digest = st.lod.digest();
  h.partition_digest = st.partition.digest();
  h.batch_digest = batches_digest(st.batches);

  EncodeResult result;
  result.bytes = ct.serialize();
  result.report = rate_report(result.bytes);
  return result;
}

//============================================================================
// Decode
//============================================================================

PointCloud decode(const std::vector<u8>& bytes, const DecodeOptions& options) {
  Container ct = Container::parse(bytes);
  const BitstreamHeader& h = ct.header;
  const int channels = h.rgb_mode ? 3 : 1;
  nn::set_matmul_threads(options.threads);

  if (!h.baseline) {
    if (!options.model) fail(ErrorKind::kUsage, "bitstream needs a model for decoding");
    if (options.model->params_hash() != h.model_hash)
      fail(ErrorKind::kIntegrity, "model hash mismatch: wrong model file for this bitstream");
  }

  PipelineState st;
  st.channels = channels;
  if (h.embed_geometry) {
    const Section* gs = ct.find(kSectionGeometry);
    if (!gs) fail(ErrorKind::kIntegrity, "embedded geometry section missing");
    st.positions = decode_geometry(gs->bytes, h.point_count);
  } else {
    if (!options.geometry)
      fail(ErrorKind::kUsage, "geometry not embedded; a side geometry file is required");
    st.positions = options.geometry->positions;
  }
  if (st.positions.size() != h.point_count
      || positions_crc(st.positions) != h.geometry_crc)
    fail(ErrorKind::kIntegrity, "geometry does not match the encoded cloud");

  LodConfig lod_cfg{h.lod_t, h.lod_l, h.lod_k, h.schedule};
  st.lod = build_lod(st.positions, lod_cfg);
  if (st.lod.digest() != h.lod_digest)
    fail(ErrorKind::kIntegrity, "LoD replay digest mismatch");

  DaldConfig dald;
  dald.n = h.dald_n;
  dald.thresholds = h.thresholds;
  dald.validate();

  st.values.assign(std::size_t(channels), std::vector<i32>(h.point_count, 0));
  u32 first_idx = st.lod.layers[0][0];
  for (int c = 0; c < channels; ++c)
    st.values[std::size_t(c)][first_idx] = h.first_point_attrs[std::size_t(c)];

  // Base Layer: run-length residuals, layer-serial reconstruction.
  const int T = st.lod.base_layer_count;
  const int L = int(st.lod.layers.size());
  std::size_t n_base = 0;
  for (int t = 0; t < T; ++t) n_base += st.lod.layers[std::size_t(t)].size();
  for (int c = 0; c < channels; ++c) {
    const Section* bs = ct.find(kSectionBase0 + u32(c));
    if (!bs) fail(ErrorKind::kIntegrity, "missing base residual section");
    std::vector<i32> res = run_length_decode(bs->bytes, n_base - 1);
    std::size_t cursor = 0;
    for (int t = 0; t < T; ++t) {
      for (u32 p : st.lod.layers[std::size_t(t)]) {
        const auto& nbs = st.lod.neighbors[p];
        if (nbs.empty()) continue;
        i32 pred = idw_predict_point(st.values[std::size_t(c)], nbs);
        i32 a = reconstruct(pred, res[cursor++]);
        value_range_check(a, channels == 3 && c > 0);
        st.values[std::size_t(c)][p] = a;
      }
    }
  }

  PartitionConfig pc{h.batch_size, h.batches_per_block, h.partition_seed};
  st.partition = compute_partition(st.positions, st.lod, st.values, pc);
  if (st.partition.num_clusters != h.num_clusters || st.partition.digest() != h.partition_digest)
    fail(ErrorKind::kIntegrity, "partition replay digest mismatch");
  st.batches = make_batches(st.lod, st.partition, h.batch_size);
  if (batches_digest(st.batches) != h.batch_digest)
    fail(ErrorKind::kIntegrity, "batching replay digest mismatch");

  std::size_t n_infer = st.partition.inference_ids.size();
  std::array<std::vector<i32>, 2> excess;
  for (int c = 0; c < 2; ++c) {
    const Section* os = ct.find(kSectionOverflowCo + u32(c));
    excess[std::size_t(c)] = os ? run_length_decode(os->bytes, n_infer)
                                : std::vector<i32>(n_infer, 0);
  }
  std::array<std::size_t, 2> excess_cursor{0, 0};

  if (!h.baseline) {
    EntropyModel model = *options.model;
    const Section* is = ct.find(kSectionInference);
    if (!is) fail(ErrorKind::kIntegrity, "missing inference section");
    ByteReader r(is->bytes.data(), is->bytes.size());
    u16 n_layers = r.u16v();
    if (n_layers != u16(L - T)) fail(ErrorKind::kIntegrity, "layer count mismatch");

    std::size_t bi = 0;
    for (int t = T + 1; t <= L; ++t) {
      u32 n_batches = r.u32v();
      std::vector<u32> lens(n_batches);
      for (auto& len : lens) len = r.u32v();
      for (u32 b = 0; b < n_batches; ++b) {
        if (bi >= st.batches.size() || st.batches[bi].layer != t)
          fail(ErrorKind::kIntegrity, "batch table does not match replayed batching");
        const LayerBatch& lb = st.batches[bi];
        std::vector<u8> blob(lens[b]);
        r.bytes(blob.data(), blob.size());

        DescriptorBatch desc = build_descriptor_batch(st.positions, st.lod, lb.batch.points,
                                                      lb.batch.pad_count, st.values, dald);
        const std::size_t count = std::size_t(desc.count);
        const std::size_t n_real = count - lb.batch.pad_count;
        std::vector<i32> res(std::size_t(channels) * count, 0);

        RangeDecoder rc(blob.data(), blob.size());
        nn::Mat ctx = model.contexts(desc);
        for (int c = 0; c < channels; ++c) {
          nn::Mat probs = model.channel_probs(
            c, ctx, std::span<const i32>(res).subspan(0, count),
            channels == 3 ? std::span<const i32>(res).subspan(count, count)
                          : std::span<const i32>());
          for (std::size_t i = 0; i < n_real; ++i) {
            QuantizedCdf cdf = quantize_cdf(
              std::span<const double>(probs.row(i), std::size_t(kResidualAlphabet)));
            i32 main = rc.decode(cdf) - 255;
            i32 rres = main;
            if (c > 0)
              rres = restore_overflow(main,
                excess[std::size_t(c - 1)][excess_cursor[std::size_t(c - 1)]++]);
            res[std::size_t(c) * count + i] = rres;
            u32 p = lb.batch.points[i];
            i32 a = reconstruct(desc.predicted_raw[i * std::size_t(channels) + std::size_t(c)], rres);
            value_range_check(a, channels == 3 && c > 0);
            st.values[std::size_t(c)][p] = a;
          }
        }
        ++bi;
      }
    }
  } else {
    for (int c = 0; c < channels; ++c) {
      const Section* bs = ct.find(kSectionBaseline0 + u32(c));
      if (!bs) fail(ErrorKind::kIntegrity, "missing baseline inference section");
      RangeDecoder rc(bs->bytes.data(), bs->bytes.size());
      AdaptiveModel am = make_baseline_residual_model();
      for (const auto& lb : st.batches) {
        std::size_t n_real = lb.batch.points.size() - lb.batch.pad_count;
        for (std::size_t i = 0; i < n_real; ++i) {
          u32 p = lb.batch.points[i];
          i32 pred = idw_predict_point(st.values[std::size_t(c)], st.lod.neighbors[p]);
          int sym = rc.decode(am.cdf());
          am.observe(sym);
          i32 r = sym - 255;
          if (c > 0)
            r = restore_overflow(r,
              excess[std::size_t(c - 1)][excess_cursor[std::size_t(c - 1)]++]);
          i32 a = reconstruct(pred, r);
          value_range_check(a, channels == 3 && c > 0);
          st.values[std::size_t(c)][p] = a;
        }
      }
    }
  }

  PointCloud out;
  out.positions = std::move(st.positions);
  out.geometry_bits = h.geometry_bits;
  out.attributes.mode = h.rgb_mode ? AttributeMode::kRgbColor : AttributeMode::kSingleChannel;
  out.attributes.names = h.channel_names;
  out.attributes.bit_depths.assign(h.channel_names.size(), 8);
  untransform_channels(st.values, out);
  return out;
}

//============================================================================
// Rate report
//============================================================================

RateReport rate_report(const std::vector<u8>& bytes) {
  Container ct = Container::parse(bytes);
  RateReport rep;
  rep.points = ct.header.point_count;
  rep.header_bits = u64(ct.header_bytes()) * 8;
  for (const auto& s : ct.sections) {
    u64 bits = u64(s.bytes.size()) * 8;
    if (s.id == kSectionGeometry) rep.geometry_bits += bits;
    else if (s.id >= kSectionBase0 && s.id < kSectionBase0 + 3) rep.base_bits += bits;
    else if (s.id == kSectionInference || (s.id >= kSectionBaseline0 && s.id < kSectionBaseline0 + 3))
      rep.inference_bits += bits;
    else if (s.id == kSectionOverflowCo || s.id == kSectionOverflowCg)
      rep.overflow_bits += bits;
  }
  if (const Section* is = ct.find(kSectionInference)) {
    ByteReader r(is->bytes.data(), is->bytes.size());
    u16 n_layers = r.u16v();
    for (u16 t = 0; t < n_layers; ++t) {
      u32 n_batches = r.u32v();
      u64 layer_bits = 0;
      std::vector<u32> lens(n_batches);
      for (auto& len : lens) len = r.u32v();
      for (u32 len : lens) layer_bits += u64(len) * 8;
      r.seek(r.pos() + layer_bits / 8);
      rep.layer_bits.push_back({u16(ct.header.lod_t + 1 + t), layer_bits + n_batches * 32});
    }
  }
  return rep;
}

std::string RateReport::to_text() const {
  std::ostringstream ss;
  double total = double(total_attribute_bits());
  auto pct = [&](u64 bits) { return total > 0 ? 100.0 * double(bits) / total : 0.0; };
  ss << "points:          " << points << "\n";
  ss << "attribute bits:  " << total_attribute_bits() << "  (" << bpp() << " bpp)\n";
  ss << "  header:        " << header_bits << "  (" << pct(header_bits) << "%)\n";
  ss << "  base layer:    " << base_bits << "  (" << pct(base_bits) << "%)\n";
  ss << "  inference:     " << inference_bits << "  (" << pct(inference_bits) << "%)\n";
  ss << "  overflow:      " << overflow_bits << "  (" << pct(overflow_bits) << "%)\n";
  if (geometry_bits) ss << "geometry bits:   " << geometry_bits << "  (excluded from bpp)\n";
  for (const auto& [layer, bits] : layer_bits)
    ss << "  layer " << layer << ": " << bits << " bits\n";
  return ss.str();
}

std::string RateReport::to_json() const {
  nlohmann::json j;
  j["points"] = points;
  j["bpp"] = bpp();
  j["total_attribute_bits"] = total_attribute_bits();
  j["header_bits"] = header_bits;
  j["base_bits"] = base_bits;
  j["inference_bits"] = inference_bits;
  j["overflow_bits"] = overflow_bits;
  j["geometry_bits"] = geometry_bits;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& [layer, bits] : layer_bits)
    layers.push_back({{"layer", layer}, {"bits", bits}});
  j["layer_bits"] = layers;
  return j.dump(2);
}

//============================================================================
// Training data preparation
//============================================================================

std::vector<TrainBatch> prepare_training_batches(const PointCloud& cloud,
                                                 const CodecConfig& config) {
  if (cloud.size() == 0) fail(ErrorKind::kUsage, "empty cloud");
  PipelineState st;
  st.positions = cloud.positions;
  st.values = transformed_channels(cloud);
  st.channels = int(st.values.size());
  st.lod = build_lod(st.positions, config.lod);
  st.partition = compute_partition(st.positions, st.lod, st.values, config.partition);
  st.batches = make_batches(st.lod, st.partition, config.partition.batch_size);

  std::vector<TrainBatch> out;
  for (const auto& lb : st.batches) {
    TrainBatch tb;
    tb.desc = build_descriptor_batch(st.positions, st.lod, lb.batch.points,
                                     lb.batch.pad_count, st.values, config.dald);
    tb.residuals = batch_residuals(st, tb.desc, lb);
    out.push_back(std::move(tb));
  }
  return out;
}

}  // namespace dpcc
