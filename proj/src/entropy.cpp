#include "dpcc/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

namespace dpcc {

namespace {
constexpr double kLn2 = 0.6931471805599453;
constexpr u32 kModelVersion = 1;

void write_config(ByteWriter& w, const ModelConfig& cfg) {
  w.u8v(cfg.mode == AttributeMode::kRgbColor ? 1 : 0);
  w.u16v(u16(cfg.k));
  w.u16v(u16(cfg.dald.n));
  for (const auto& axis : cfg.dald.thresholds)
    for (double t : axis) w.f64v(t);
  w.u16v(u16(cfg.n_el));
  w.u16v(u16(cfg.n_ea));
  w.u16v(u16(cfg.n_er));
  w.u16v(u16(cfg.layers));
  w.u16v(u16(cfg.heads));
}

ModelConfig read_config(ByteReader& r) {
  ModelConfig cfg;
  cfg.mode = r.u8v() ? AttributeMode::kRgbColor : AttributeMode::kSingleChannel;
  cfg.k = r.u16v();
  cfg.dald.n = r.u16v();
  for (auto& axis : cfg.dald.thresholds) {
    axis.resize(std::size_t(cfg.dald.n) + 1);
    for (auto& t : axis) t = r.f64v();
  }
  cfg.n_el = r.u16v();
  cfg.n_ea = r.u16v();
  cfg.n_er = r.u16v();
  cfg.layers = r.u16v();
  cfg.heads = r.u16v();
  return cfg;
}

}  // namespace

void ModelConfig::validate() const {
  dald.validate();
  if (k < 1) fail(ErrorKind::kUsage, "model k must be >= 1");
  if (n_el < 0 || n_ea < 0 || n_er < 0)
    fail(ErrorKind::kUsage, "embedding widths must be non-negative");
  if (layers < 1 || heads < 1) fail(ErrorKind::kUsage, "need >= 1 layer and head");
  int d = descriptor_dim();
  if (d < 1) fail(ErrorKind::kUsage, "descriptor dimension must be positive");
  if (d % heads != 0)
    fail(ErrorKind::kUsage, "head count must divide the descriptor dimension");
}

//============================================================================
// HeadMlp
//============================================================================

void HeadMlp::init(std::size_t in, std::size_t hidden, std::size_t out, SplitMix64& rng) {
  fc1.init(in, hidden, rng);
  fc2.init(hidden, out, rng);
}

nn::Mat HeadMlp::forward(const nn::Mat& x) {
  pre_act_cache_ = fc1.forward(x);
  nn::Mat h = pre_act_cache_;
  for (auto& v : h.v) v = nn::gelu(v);
  return fc2.forward(h);
}

nn::Mat HeadMlp::backward(const nn::Mat& dy) {
  nn::Mat dh = fc2.backward(dy);
  for (std::size_t i = 0; i < dh.v.size(); ++i)
    dh.v[i] *= nn::gelu_grad(pre_act_cache_.v[i]);
  return fc1.backward(dh);
}

//============================================================================
// EntropyModel
//============================================================================

EntropyModel::EntropyModel(const ModelConfig& config, u64 init_seed) : cfg_(config) {
  cfg_.validate();
  SplitMix64 rng(init_seed);
  const std::size_t d = std::size_t(cfg_.descriptor_dim());

  auto init_table = [&](nn::Param& p, std::size_t rows, std::size_t cols) {
    p.alloc(rows, cols);
    for (auto& v : p.w.v) v = rng.next_gaussian() * 0.02;
  };
  init_table(e_label_, std::size_t(cfg_.dald.label_alphabet()), std::size_t(cfg_.n_el));
  init_table(e_attr_y_, 256, std::size_t(cfg_.n_ea));
  init_table(e_rel_y_, 511, std::size_t(cfg_.n_er));
  if (cfg_.mode == AttributeMode::kRgbColor) {
    init_table(e_attr_c_, 512, std::size_t(cfg_.n_ea));
    init_table(e_rel_c_, 1023, std::size_t(cfg_.n_er));
  }

  blocks_.resize(std::size_t(cfg_.layers));
  for (auto& b : blocks_) b.init(d, cfg_.heads, 4 * d, rng);
  final_ln_.init(d);

  head_y_.init(d, d, kResidualAlphabet, rng);
  if (cfg_.mode == AttributeMode::kRgbColor) {
    head_u_.init(d + 1, d, kResidualAlphabet, rng);
    head_v_.init(d + 2, d, kResidualAlphabet, rng);
  }
}

std::vector<nn::Param*> EntropyModel::parameters() {
  std::vector<nn::Param*> out;
  out.push_back(&e_label_);
  out.push_back(&e_attr_y_);
  out.push_back(&e_rel_y_);
  if (cfg_.mode == AttributeMode::kRgbColor) {
    out.push_back(&e_attr_c_);
    out.push_back(&e_rel_c_);
  }
  for (auto& b : blocks_) b.collect(out);
  final_ln_.collect(out);
  head_y_.collect(out);
  if (cfg_.mode == AttributeMode::kRgbColor) {
    head_u_.collect(out);
    head_v_.collect(out);
  }
  return out;
}

std::size_t EntropyModel::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->w.v.size();
  return n;
}

void EntropyModel::finalize_for_coding() {
  for (auto* p : parameters())
    for (auto& v : p->w.v) v = double(float(v));
}

//============================================================================
// Descriptor assembly (the embedding stage; gradients scatter back to tables)
//============================================================================

nn::Mat EntropyModel::assemble(const DescriptorBatch& batch) {
  if (batch.channels != cfg_.channels() || batch.k != cfg_.k)
    fail(ErrorKind::kUsage, "descriptor batch does not match model config");
  const std::size_t d = std::size_t(cfg_.descriptor_dim());
  const std::size_t n_el = std::size_t(cfg_.n_el);
  const std::size_t n_ea = std::size_t(cfg_.n_ea);
  const std::size_t n_er = std::size_t(cfg_.n_er);
  const std::size_t count = std::size_t(batch.count);
  const std::size_t k = std::size_t(batch.k);
  const std::size_t ch = std::size_t(batch.channels);

  auto table_row = [&](const nn::Param& table, i32 idx, const char* what) {
    if (idx < 0 || std::size_t(idx) >= table.w.rows)
      fail(ErrorKind::kUsage, std::string(what) + " embedding index out of table bounds");
    return table.w.row(std::size_t(idx));
  };

  nn::Mat x(count, d);
  for (std::size_t i = 0; i < count; ++i) {
    double* row = x.row(i);
    std::size_t off = 0;
    for (int a = 0; a < 3; ++a) row[off++] = batch.pos_norm[i * 3 + std::size_t(a)];
    for (std::size_t c = 0; c < ch; ++c) {
      const nn::Param& t = (c == 0) ? e_attr_y_ : e_attr_c_;
      const double* r = table_row(t, batch.pred_idx[i * ch + c], "predicted-attribute");
      for (std::size_t m = 0; m < n_ea; ++m) row[off + m] += r[m];
    }
    off += n_ea;
    for (std::size_t j = 0; j < k; ++j) {
      const double* lr = table_row(e_label_, batch.label_idx[i * k + j], "label");
      for (std::size_t m = 0; m < n_el; ++m) row[off + m] = lr[m];
      off += n_el;
      for (std::size_t c = 0; c < ch; ++c) {
        const nn::Param& t = (c == 0) ? e_attr_y_ : e_attr_c_;
        const double* r = table_row(t, batch.attr_idx[(i * k + j) * ch + c], "attribute");
        for (std::size_t m = 0; m < n_ea; ++m) row[off + m] += r[m];
      }
      off += n_ea;
      for (std::size_t c = 0; c < ch; ++c) {
        const nn::Param& t = (c == 0) ? e_rel_y_ : e_rel_c_;
        const double* r = table_row(t, batch.rel_idx[(i * k + j) * ch + c], "relative-attribute");
        for (std::size_t m = 0; m < n_er; ++m) row[off + m] += r[m];
      }
      off += n_er;
    }
    if (off != d) fail(ErrorKind::kInternal, "descriptor layout mismatch");
  }
  return x;
}

void EntropyModel::assemble_backward(const DescriptorBatch& batch, const nn::Mat& dx) {
  const std::size_t n_el = std::size_t(cfg_.n_el);
  const std::size_t n_ea = std::size_t(cfg_.n_ea);
  const std::size_t n_er = std::size_t(cfg_.n_er);
  const std::size_t count = std::size_t(batch.count);
  const std::size_t k = std::size_t(batch.k);
  const std::size_t ch = std::size_t(batch.channels);

  for (std::size_t i = 0; i < count; ++i) {
    const double* row = dx.row(i);
    std::size_t off = 3;  // positions are inputs, no gradient
    for (std::size_t c = 0; c < ch; ++c) {
      nn::Param& t = (c == 0) ? e_attr_y_ : e_attr_c_;
      double* g = t.g.row(std::size_t(batch.pred_idx[i * ch + c]));
      for (std::size_t m = 0; m < n_ea; ++m) g[m] += row[off + m];
    }
    off += n_ea;
    for (std::size_t j = 0; j < k; ++j) {
      double* lg = e_label_.g.row(std::size_t(batch.label_idx[i * k + j]));
      for (std::size_t m = 0; m < n_el; ++m) lg[m] += row[off + m];
      off += n_el;
      for (std::size_t c = 0; c < ch; ++c) {
        nn::Param& t = (c == 0) ? e_attr_y_ : e_attr_c_;
        double* g = t.g.row(std::size_t(batch.attr_idx[(i * k + j) * ch + c]));
        for (std::size_t m = 0; m < n_ea; ++m) g[m] += row[off + m];
      }
      off += n_ea;
      for (std::size_t c = 0; c < ch; ++c) {
        nn::Param& t = (c == 0) ? e_rel_y_ : e_rel_c_;
        double* g = t.g.row(std::size_t(batch.rel_idx[(i * k + j) * ch + c]));
        for (std::size_t m = 0; m < n_er; ++m) g[m] += row[off + m];
      }
      off += n_er;
    }
  }
}

nn::Mat EntropyModel::encoder_forward(const nn::Mat& x) {
  nn::Mat h = x;
  for (auto& b : blocks_) h = b.forward(h);
  return final_ln_.forward(h);
}

nn::Mat EntropyModel::encoder_backward(const nn::Mat& dc) {
  nn::Mat d = final_ln_.backward(dc);
  for (std::size_t i = blocks_.size(); i-- > 0;) d = blocks_[i].backward(d);
  return d;
}

nn::Mat EntropyModel::contexts(const DescriptorBatch& batch) {
  return encoder_forward(assemble(batch));
}

HeadMlp& EntropyModel::head(int channel) {
  if (channel == 0) return head_y_;
  if (channel == 1) return head_u_;
  return head_v_;
}

nn::Mat EntropyModel::head_input(int channel, const nn::Mat& contexts,
                                 std::span<const i32> cond_y, std::span<const i32> cond_u) {
  const std::size_t d = contexts.cols;
  if (channel == 0) return contexts;
  if ((channel >= 1 && cond_y.size() != contexts.rows)
      || (channel == 2 && cond_u.size() != contexts.rows))
    fail(ErrorKind::kInternal, "missing conditioning residuals for chroma head");
  nn::Mat x(contexts.rows, d + std::size_t(channel));
  for (std::size_t i = 0; i < contexts.rows; ++i) {
    std::copy(contexts.row(i), contexts.row(i) + d, x.row(i));
    x.at(i, d) = double(cond_y[i]) / 255.0;
    if (channel == 2) x.at(i, d + 1) = double(cond_u[i]) / 255.0;
  }
  return x;
}

nn::Mat EntropyModel::channel_probs(int channel, const nn::Mat& contexts,
                                    std::span<const i32> cond_y,
                                    std::span<const i32> cond_u) {
  if (channel < 0 || channel >= cfg_.channels())
    fail(ErrorKind::kUsage, "channel index out of range for model mode");
  nn::Mat logits = head(channel).forward(head_input(channel, contexts, cond_y, cond_u));
  nn::softmax_rows(logits);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    double* r = logits.row(i);
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.cols; ++j) sum += r[j];
    double inv = 1.0 / sum;
    for (std::size_t j = 0; j < logits.cols; ++j) r[j] *= inv;
  }
  return logits;
}

//============================================================================
// Loss
//============================================================================

namespace {

struct ChannelLoss {
  double bits = 0.0;
  int terms = 0;
};

// Stable log-softmax NLL over valid rows; fills dlogits when given.
ChannelLoss channel_nll(const nn::Mat& logits, std::span<const i32> residuals,
                        const std::vector<u8>& valid, nn::Mat* dlogits, double scale) {
  ChannelLoss out;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const double* r = logits.row(i);
    if (!valid[i]) continue;
    double mx = r[0];
    for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, r[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.cols; ++j) sum += std::exp(r[j] - mx);
    double lse = mx + std::log(sum);
    int target = residuals[i] + 255;
    if (target < 0 || target >= int(logits.cols))
      fail(ErrorKind::kInternal, "unmasked residual outside head alphabet");
    out.bits += (lse - r[std::size_t(target)]) / kLn2;
    ++out.terms;
    if (dlogits) {
      double* dr = dlogits->row(i);
      for (std::size_t j = 0; j < logits.cols; ++j)
        dr[j] = std::exp(r[j] - lse) * scale;
      dr[std::size_t(target)] -= scale;
    }
  }
  return out;
}

}  // namespace

double EntropyModel::backprop_loss(const DescriptorBatch& batch,
                                   std::span<const i32> residuals, double grad_scale) {
  const int channels = cfg_.channels();
  const std::size_t count = std::size_t(batch.count);
  if (residuals.size() != count * std::size_t(channels))
    fail(ErrorKind::kInternal, "residual array shape mismatch");

  int n_real = batch.real_count();
  if (n_real == 0) {
    std::cerr << "warning: all-padded batch contributes zero loss\n";
    return 0.0;
  }

  nn::Mat x = assemble(batch);
  nn::Mat c_mat = encoder_forward(x);
  const std::size_t d = c_mat.cols;

  auto res_ch = [&](int c) { return residuals.subspan(std::size_t(c) * count, count); };

  double total_bits = 0.0;
  bool want_grad = grad_scale != 0.0;
  nn::Mat dc(count, d);
  double scale = want_grad ? grad_scale / (double(n_real) * kLn2) : 0.0;

  for (int c = 0; c < channels; ++c) {
    std::vector<u8> valid(count, 0);
    auto res = res_ch(c);
    for (std::size_t i = 0; i < count; ++i) {
      bool in_range = res[i] >= -255 && res[i] <= 255;  // chroma overflow masked
      valid[i] = batch.real_mask[i] && (c == 0 || in_range);
      if (c == 0 && batch.real_mask[i] && !in_range)
        fail(ErrorKind::kInternal, "luma residual outside [-255,255]");
    }
    nn::Mat hin = head_input(c, c_mat, res_ch(0), channels == 3 ? res_ch(1) : res_ch(0));
    nn::Mat logits = head(c).forward(hin);
    nn::Mat dlogits(logits.rows, logits.cols);
    ChannelLoss cl = channel_nll(logits, res, valid, want_grad ? &dlogits : nullptr, scale);
    total_bits += cl.bits;
    if (want_grad) {
      nn::Mat dhin = head(c).backward(dlogits);
      for (std::size_t i = 0; i < count; ++i) {
        const double* src = dhin.row(i);
        double* dst = dc.row(i);
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
      }
    }
  }

  if (want_grad) assemble_backward(batch, encoder_backward(dc));
  return total_bits / double(n_real);
}

double EntropyModel::eval_loss(const DescriptorBatch& batch, std::span<const i32> residuals) {
  return backprop_loss(batch, residuals, 0.0);
}

double cross_entropy_bits(std::span<const nn::Mat> channel_probs,
                          std::span<const i32> residuals,
                          std::span<const u8> pad_mask) {
  if (channel_probs.empty()) fail(ErrorKind::kUsage, "no channel distributions");
  const std::size_t count = channel_probs[0].rows;
  int n_real = 0;
  for (u8 m : pad_mask) n_real += m;
  if (n_real == 0) {
    std::cerr << "warning: cross entropy over all-padded batch is 0\n";
    return 0.0;
  }
  double bits = 0.0;
  for (std::size_t c = 0; c < channel_probs.size(); ++c) {
    const nn::Mat& probs = channel_probs[c];
    for (std::size_t i = 0; i < count; ++i) {
      if (!pad_mask[i]) continue;
      i32 r = residuals[c * count + i];
      if (r < -255 || r > 255) continue;  // overflow handled out of band
      bits -= std::log2(probs.at(i, std::size_t(r + 255)));
    }
  }
  return bits / double(n_real);
}

//============================================================================
// Training
//============================================================================

void EntropyModel::adam_step(double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  auto params = parameters();
  if (adam_m_.empty()) {
    for (auto* p : params) {
      adam_m_.emplace_back(p->w.rows, p->w.cols);
      adam_v_.emplace_back(p->w.rows, p->w.cols);
    }
  }
  ++adam_step_;
  double c1 = 1.0 - std::pow(b1, double(adam_step_));
  double c2 = 1.0 - std::pow(b2, double(adam_step_));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& w = params[pi]->w.v;
    auto& g = params[pi]->g.v;
    auto& m = adam_m_[pi].v;
    auto& v = adam_v_[pi].v;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
}

TrainStats EntropyModel::train(std::span<TrainBatch> dataset, const TrainConfig& config) {
  if (dataset.empty() && config.epochs > epochs_done_)
    fail(ErrorKind::kUsage, "empty training dataset");
  TrainStats stats;
  auto params = parameters();

  for (int epoch = epochs_done_; epoch < config.epochs; ++epoch) {
    std::vector<u32> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = u32(i);
    seeded_shuffle(order, config.seed + 0x9e3779b97f4a7c15ull * u64(epoch + 1));

    double epoch_bits = 0.0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      std::size_t group = std::min<std::size_t>(std::size_t(config.batch_count),
                                                order.size() - pos);
      for (auto* p : params) p->zero_grad();
      for (std::size_t g = 0; g < group; ++g) {
        const TrainBatch& tb = dataset[order[pos + g]];
        double bits = backprop_loss(tb.desc, tb.residuals, 1.0 / double(group));
        if (!std::isfinite(bits))
          fail(ErrorKind::kInternal, "non-finite training loss at epoch "
               + std::to_string(epoch) + ", batch " + std::to_string(pos + g));
        epoch_bits += bits;
      }
      adam_step(config.lr);
      pos += group;
    }

    double mean = order.empty() ? 0.0 : epoch_bits / double(order.size());
    stats.epoch_loss.push_back(mean);
    epochs_done_ = epoch + 1;
    if (config.verbose)
      std::cerr << "epoch " << (epoch + 1) << "/" << config.epochs
                << " loss " << mean << " bits/point\n";
    if (!config.checkpoint_path.empty()) save_checkpoint(config.checkpoint_path);
  }

  finalize_for_coding();
  return stats;
}

//============================================================================
// Serialization
//============================================================================

std::vector<u8> EntropyModel::serialize() const {
  std::vector<u8> out;
  ByteWriter w(out);
  w.bytes("DALD", 4);
  w.u16v(u16(kModelVersion));
  write_config(w, cfg_);
  auto params = const_cast<EntropyModel*>(this)->parameters();
  w.u32v(u32(params.size()));
  for (auto* p : params) {
    w.u32v(u32(p->w.rows));
    w.u32v(u32(p->w.cols));
    for (double v : p->w.v) w.f32v(float(v));
  }
  w.u32v(crc32(out.data(), out.size()));
  return out;
}

EntropyModel EntropyModel::deserialize(const std::vector<u8>& bytes) {
  if (bytes.size() < 10) fail(ErrorKind::kIntegrity, "model file too short");
  u32 expect = crc32(bytes.data(), bytes.size() - 4);
  ByteReader tail(bytes.data() + bytes.size() - 4, 4);
  if (tail.u32v() != expect) fail(ErrorKind::kIntegrity, "model file checksum mismatch");

  ByteReader r(bytes.data(), bytes.size() - 4);
  char magic[4];
  r.bytes(magic, 4);
  if (std::string(magic, 4) != "DALD") fail(ErrorKind::kFormat, "bad model magic");
  if (r.u16v() != kModelVersion) fail(ErrorKind::kFormat, "unsupported model version");
  ModelConfig cfg = read_config(r);
  EntropyModel model(cfg, 0);
  auto params = model.parameters();
  u32 n = r.u32v();
  if (n != params.size()) fail(ErrorKind::kFormat, "model tensor count mismatch");
  for (auto* p : params) {
    u32 rows = r.u32v(), cols = r.u32v();
    if (rows != p->w.rows || cols != p->w.cols)
      fail(ErrorKind::kFormat, "model tensor shape mismatch");
    for (auto& v : p->w.v) v = double(r.f32v());
  }
  return model;
}

void EntropyModel::save(const std::string& path) const {
  auto bytes = serialize();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kUsage, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

EntropyModel EntropyModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kUsage, "cannot open model file " + path);
  std::vector<u8> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

u64 EntropyModel::params_hash() const {
  auto bytes = serialize();
  return fnv1a64(bytes.data(), bytes.size());
}

void EntropyModel::save_checkpoint(const std::string& path) const {
  std::vector<u8> out;
  ByteWriter w(out);
  w.bytes("DALC", 4);
  w.u16v(u16(kModelVersion));
  write_config(w, cfg_);
  auto params = const_cast<EntropyModel*>(this)->parameters();
  w.u32v(u32(params.size()));
  for (auto* p : params) {
    w.u32v(u32(p->w.rows));
    w.u32v(u32(p->w.cols));
    for (double v : p->w.v) w.f64v(v);
  }
  bool have_adam = !adam_m_.empty();
  w.u8v(have_adam ? 1 : 0);
  if (have_adam) {
    for (const auto& m : adam_m_) for (double v : m.v) w.f64v(v);
    for (const auto& m : adam_v_) for (double v : m.v) w.f64v(v);
  }
  w.u64v(adam_step_);
  w.u32v(u32(epochs_done_));
  w.u32v(crc32(out.data(), out.size()));

  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::kUsage, "cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
}

EntropyModel EntropyModel::load_checkpoint(const std::string& path, int* epoch_done) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kUsage, "cannot open checkpoint " + path);
  std::vector<u8> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 10) fail(ErrorKind::kIntegrity, "checkpoint too short");
  u32 expect = crc32(bytes.data(), bytes.size() - 4);
  ByteReader tail(bytes.data() + bytes.size() - 4, 4);
  if (tail.u32v() != expect) fail(ErrorKind::kIntegrity, "checkpoint checksum mismatch");

  ByteReader r(bytes.data(), bytes.size() - 4);
  char magic[4];
  r.bytes(magic, 4);
  if (std::string(magic, 4) != "DALC") fail(ErrorKind::kFormat, "bad checkpoint magic");
  if (r.u16v() != kModelVersion) fail(ErrorKind::kFormat, "unsupported checkpoint version");
  ModelConfig cfg = read_config(r);
  EntropyModel model(cfg, 0);
  auto params = model.parameters();
  u32 n = r.u32v();
  if (n != params.size()) fail(ErrorKind::kFormat, "checkpoint tensor count mismatch");
  for (auto* p : params) {
    u32 rows = r.u32v(), cols = r.u32v();
    if (rows != p->w.rows || cols != p->w.cols)
      fail(ErrorKind::kFormat, "checkpoint tensor shape mismatch");
    for (auto& v : p->w.v) v = r.f64v();
  }
  if (r.u8v()) {
    for (auto* p : params) model.adam_m_.emplace_back(p->w.rows, p->w.cols);
    for (auto& m : model.adam_m_) for (auto& v : m.v) v = r.f64v();
    for (auto* p : params) model.adam_v_.emplace_back(p->w.rows, p->w.cols);
    for (auto& m : model.adam_v_) for (auto& v : m.v) v = r.f64v();
  }
  model.adam_step_ = r.u64v();
  model.epochs_done_ = int(r.u32v());
  if (epoch_done) *epoch_done = model.epochs_done_;
  return model;
}

AdaptiveModel make_baseline_residual_model() {
  return AdaptiveModel(kResidualAlphabet, 1, 65504);
}

}  // namespace dpcc
