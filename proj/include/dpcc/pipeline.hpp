#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dpcc/dald.hpp"
#include "dpcc/entropy.hpp"
#include "dpcc/io.hpp"
#include "dpcc/lod.hpp"
#include "dpcc/partition.hpp"

namespace dpcc {

//============================================================================
// Codec configuration (defaults follow the object-point-cloud column of the
// reference parameter set; desk_default is the CPU-friendly test scale).
//============================================================================

struct CodecConfig {
  LodConfig lod;
  DaldConfig dald = DaldConfig::object_default();
  PartitionConfig partition;
  int n_el = 6, n_ea = 3, n_er = 6;
  int layers = 3, heads = 3;

  ModelConfig model_config(AttributeMode mode) const;

  static CodecConfig object_default();  // T=8 L=24 k=11 N=1024
  static CodecConfig lidar_default();   // T=8 L=16 k=9  N=4096
  static CodecConfig desk_default();    // T=8 L=16 k=7  N=256
};

//============================================================================
// Container
//============================================================================

enum SectionId : u32 {
  kSectionGeometry = 1,
  kSectionBase0 = 2,  // +channel
  kSectionInference = 10,
  kSectionBaseline0 = 11,  // +channel
  kSectionOverflowCo = 20,
  kSectionOverflowCg = 21,
};

struct BitstreamHeader {
  u16 version = 1;
  bool embed_geometry = false;
  bool rgb_mode = false;
  bool baseline = false;
  u64 point_count = 0;
  u8 geometry_bits = 0;
  std::vector<std::string> channel_names;
  std::vector<i32> first_point_attrs;  // transformed space

  u16 lod_t = 0, lod_l = 0, lod_k = 0;
  std::vector<u32> schedule;
  u16 dald_n = 0;
  std::array<std::vector<double>, 3> thresholds;
  u64 partition_seed = 0;
  u32 num_clusters = 0;
  u32 batch_size = 0;
  u32 batches_per_block = 0;
  u64 model_hash = 0;
  u32 geometry_crc = 0;
  u64 lod_digest = 0, partition_digest = 0, batch_digest = 0;
};

struct Section {
  u32 id;
  std::vector<u8> bytes;
};

struct Container {
  BitstreamHeader header;
  std::vector<Section> sections;

  std::vector<u8> serialize() const;
  static Container parse(const std::vector<u8>& bytes);  // verifies section CRCs
  const Section* find(u32 id) const;
  std::size_t header_bytes() const;  // header + section table

  std::size_t header_size_ = 0;  // filled by parse()
};

//============================================================================
// Rate accounting
//============================================================================

struct RateReport {
  std::size_t points = 0;
  u64 header_bits = 0;
  u64 base_bits = 0;
  u64 inference_bits = 0;
  u64 overflow_bits = 0;   // R_out
  u64 geometry_bits = 0;   // carriage only; excluded from bpp
  std::vector<std::pair<u16, u64>> layer_bits;  // per refinement layer (model path)

  u64 total_attribute_bits() const {
    return header_bits + base_bits + inference_bits + overflow_bits;
  }
  double bpp() const {
    return points ? double(total_attribute_bits()) / double(points) : 0.0;
  }
  std::string to_text() const;
  std::string to_json() const;
};

//============================================================================
// Encode / decode
//============================================================================

struct EncodeOptions {
  bool baseline = false;
  bool embed_geometry = false;
  const EntropyModel* model = nullptr;  // required unless baseline
  int threads = 1;
};

struct EncodeResult {
  std::vector<u8> bytes;
  RateReport report;
};

EncodeResult encode(const PointCloud& cloud, const CodecConfig& config,
                    const EncodeOptions& options);

struct DecodeOptions {
  const EntropyModel* model = nullptr;  // required for non-baseline streams
  std::optional<PointCloud> geometry;   // required unless embedded
  int threads = 1;
};

PointCloud decode(const std::vector<u8>& bytes, const DecodeOptions& options);

RateReport rate_report(const std::vector<u8>& bytes);

/// Encoder front-end only: LoD, base reconstruction, partitioning, batching,
/// descriptors and exact residuals for every inference batch — the training
/// dataset for one cloud.
std::vector<TrainBatch> prepare_training_batches(const PointCloud& cloud,
                                                 const CodecConfig& config);

}  // namespace dpcc
