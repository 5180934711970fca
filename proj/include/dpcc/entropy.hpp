#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpcc/coder.hpp"
#include "dpcc/dald.hpp"
#include "dpcc/io.hpp"
#include "dpcc/nn.hpp"

namespace dpcc {

constexpr int kResidualAlphabet = 511;  // residual r in [-255,255] -> r+255

//============================================================================
// Model configuration. The model dimension equals the descriptor dimension:
//   k * (n_el + n_ea + n_er) + 3 + n_ea
// Table sizes: labels (2n+1)^3 x n_el; luma/single attributes 256 x n_ea and
// relatives 511 x n_er; chroma attributes 512 x n_ea and relatives 1023 x n_er.
//============================================================================

struct ModelConfig {
  AttributeMode mode = AttributeMode::kSingleChannel;
  int k = 7;
  DaldConfig dald = DaldConfig::object_default();
  int n_el = 6, n_ea = 3, n_er = 6;
  int layers = 3, heads = 3;

  int channels() const { return mode == AttributeMode::kRgbColor ? 3 : 1; }
  int descriptor_dim() const { return k * (n_el + n_ea + n_er) + 3 + n_ea; }
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

struct TrainConfig {
  double lr = 1e-3;
  int epochs = 8;
  int batch_count = 32;  // descriptor batches per optimizer step
  u64 seed = 1;
  bool verbose = false;
  std::string checkpoint_path;  // optional: saved after every epoch
};

struct TrainBatch {
  DescriptorBatch desc;
  std::vector<i32> residuals;  // channel-major: residuals[c*count + i], exact
};

struct TrainStats {
  std::vector<double> epoch_loss;  // mean batch loss (bits/point) per epoch
};

//============================================================================
// Learned entropy model
//============================================================================

struct HeadMlp {
  nn::Linear fc1, fc2;
  nn::Mat pre_act_cache_;

  void init(std::size_t in, std::size_t hidden, std::size_t out, SplitMix64& rng);
  nn::Mat forward(const nn::Mat& x);
  nn::Mat backward(const nn::Mat& dy);
  void collect(std::vector<nn::Param*>& out) { fc1.collect(out); fc2.collect(out); }
};

class EntropyModel {
public:
  explicit EntropyModel(const ModelConfig& config, u64 init_seed = 7);

  const ModelConfig& config() const { return cfg_; }

  /// Unmasked attention encoder over one batch's descriptors (Eq. pipeline:
  /// descriptors in, one context row per point out).
  nn::Mat contexts(const DescriptorBatch& batch);

  /// 511-way conditional distribution for one channel. Channel 1 conditions
  /// on the luma residuals, channel 2 on luma and first chroma; conditioning
  /// residuals are the exact decoded values, scaled by 1/255.
  nn::Mat channel_probs(int channel, const nn::Mat& contexts,
                        std::span<const i32> cond_y = {},
                        std::span<const i32> cond_u = {});

  /// Full forward + backward for one batch; accumulates parameter gradients
  /// scaled by `grad_scale` and returns the loss in bits per point.
  double backprop_loss(const DescriptorBatch& batch, std::span<const i32> residuals,
                       double grad_scale);

  /// Loss only (no gradient accumulation).
  double eval_loss(const DescriptorBatch& batch, std::span<const i32> residuals);

  std::vector<nn::Param*> parameters();
  std::size_t parameter_count();

  /// Round every parameter through f32. Coding always happens on f32-valued
  /// parameters so that an in-memory model and its reloaded serialization
  /// drive bit-identical CDFs.
  void finalize_for_coding();

  std::vector<u8> serialize() const;
  static EntropyModel deserialize(const std::vector<u8>& bytes);
  void save(const std::string& path) const;
  static EntropyModel load(const std::string& path);
  u64 params_hash() const;

  // Training with Adam; deterministic given config.seed. Checkpoints carry
  // f64 parameters and optimizer state, so resumed runs continue bit-exactly.
  TrainStats train(std::span<TrainBatch> dataset, const TrainConfig& config);
  void save_checkpoint(const std::string& path) const;
  static EntropyModel load_checkpoint(const std::string& path, int* epoch_done = nullptr);

private:
  nn::Mat assemble(const DescriptorBatch& batch);
  void assemble_backward(const DescriptorBatch& batch, const nn::Mat& dx);
  nn::Mat encoder_forward(const nn::Mat& x);
  nn::Mat encoder_backward(const nn::Mat& dc);
  nn::Mat head_input(int channel, const nn::Mat& contexts,
                     std::span<const i32> cond_y, std::span<const i32> cond_u);
  HeadMlp& head(int channel);
  void adam_step(double lr);

  ModelConfig cfg_;
  nn::Param e_label_, e_attr_y_, e_rel_y_, e_attr_c_, e_rel_c_;
  std::vector<nn::EncoderBlock> blocks_;
  nn::LayerNorm final_ln_;
  HeadMlp head_y_, head_u_, head_v_;

  // Adam state (aligned with parameters() order)
  std::vector<nn::Mat> adam_m_, adam_v_;
  u64 adam_step_ = 0;
  int epochs_done_ = 0;
};

/// Mean bits per non-padded point: -1/N' sum log2 q(r); channel terms summed.
/// Chroma entries whose residual overflows [-255,255] are excluded (they are
/// carried by the overflow escape stream). All-padded batches define 0.
double cross_entropy_bits(std::span<const nn::Mat> channel_probs,
                          std::span<const i32> residuals,
                          std::span<const u8> pad_mask);

/// Trainingless fallback: order-0 adaptive model over the 511 residual
/// symbols, counts starting at 1 and growing by 1 per observation.
AdaptiveModel make_baseline_residual_model();

}  // namespace dpcc
