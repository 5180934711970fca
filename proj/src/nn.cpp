#include "dpcc/nn.hpp"

#include <cmath>

namespace dpcc::nn {

namespace {
int g_threads = 1;
constexpr std::size_t kParallelFlopThreshold = 1u << 18;
}  // namespace

void set_matmul_threads(int threads) { g_threads = std::max(1, threads); }
int matmul_threads() { return g_threads; }

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) fail(ErrorKind::kInternal, "matmul shape mismatch");
  Mat c(a.rows, b.cols);
  int threads = (a.rows * a.cols * b.cols >= kParallelFlopThreshold) ? g_threads : 1;
  parallel_for(a.rows, threads, [&](std::size_t i) {
    const double* ar = a.row(i);
    double* cr = c.row(i);
    for (std::size_t p = 0; p < a.cols; ++p) {
      double av = ar[p];
      if (av == 0.0) continue;
      const double* br = b.row(p);
      for (std::size_t j = 0; j < b.cols; ++j) cr[j] += av * br[j];
    }
  });
  return c;
}

Mat matmul_nt(const Mat& a, const Mat& bt) {
  if (a.cols != bt.cols) fail(ErrorKind::kInternal, "matmul_nt shape mismatch");
  Mat c(a.rows, bt.rows);
  int threads = (a.rows * a.cols * bt.rows >= kParallelFlopThreshold) ? g_threads : 1;
  parallel_for(a.rows, threads, [&](std::size_t i) {
    const double* ar = a.row(i);
    double* cr = c.row(i);
    for (std::size_t j = 0; j < bt.rows; ++j) {
      const double* br = bt.row(j);
      double acc = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) acc += ar[p] * br[p];
      cr[j] = acc;
    }
  });
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows != b.rows) fail(ErrorKind::kInternal, "matmul_tn shape mismatch");
  Mat c(a.cols, b.cols);
  for (std::size_t p = 0; p < a.rows; ++p) {
    const double* ar = a.row(p);
    const double* br = b.row(p);
    for (std::size_t i = 0; i < a.cols; ++i) {
      double av = ar[i];
      if (av == 0.0) continue;
      double* cr = c.row(i);
      for (std::size_t j = 0; j < b.cols; ++j) cr[j] += av * br[j];
    }
  }
  return c;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865476)); }

double gelu_grad(double x) {
  double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865476));
  double pdf = 0.3989422804014327 * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

void softmax_rows(Mat& m) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* r = m.row(i);
    double mx = r[0];
    for (std::size_t j = 1; j < m.cols; ++j) mx = std::max(mx, r[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) {
      r[j] = std::exp(r[j] - mx);
      sum += r[j];
    }
    double inv = 1.0 / sum;
    for (std::size_t j = 0; j < m.cols; ++j) r[j] *= inv;
  }
}

//============================================================================
// Linear
//============================================================================

void Linear::init(std::size_t in, std::size_t out, SplitMix64& rng) {
  weight.alloc(out, in);
  bias.alloc(1, out);
  double scale = 1.0 / std::sqrt(double(in));
  for (auto& w : weight.w.v) w = rng.next_gaussian() * scale;
}

Mat Linear::forward(const Mat& x) {
  x_cache_ = x;
  Mat y = matmul_nt(x, weight.w);
  for (std::size_t i = 0; i < y.rows; ++i) {
    double* r = y.row(i);
    const double* b = bias.w.row(0);
    for (std::size_t j = 0; j < y.cols; ++j) r[j] += b[j];
  }
  return y;
}

Mat Linear::backward(const Mat& dy) {
  Mat dw = matmul_tn(dy, x_cache_);  // (out x N)^T form: dy^T * x
  for (std::size_t i = 0; i < dw.v.size(); ++i) weight.g.v[i] += dw.v[i];
  for (std::size_t i = 0; i < dy.rows; ++i) {
    const double* r = dy.row(i);
    double* bg = bias.g.row(0);
    for (std::size_t j = 0; j < dy.cols; ++j) bg[j] += r[j];
  }
  return matmul(dy, weight.w);
}

//============================================================================
// LayerNorm
//============================================================================

void LayerNorm::init(std::size_t d) {
  gamma.alloc(1, d);
  beta.alloc(1, d);
  for (auto& g : gamma.w.v) g = 1.0;
}

Mat LayerNorm::forward(const Mat& x) {
  const std::size_t d = x.cols;
  xhat_cache_ = Mat(x.rows, d);
  inv_std_cache_.assign(x.rows, 0.0);
  Mat y(x.rows, d);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* r = x.row(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += r[j];
    mean /= double(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double e = r[j] - mean;
      var += e * e;
    }
    var /= double(d);
    double inv = 1.0 / std::sqrt(var + kEps);
    inv_std_cache_[i] = inv;
    double* xh = xhat_cache_.row(i);
    double* yr = y.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      xh[j] = (r[j] - mean) * inv;
      yr[j] = xh[j] * gamma.w.v[j] + beta.w.v[j];
    }
  }
  return y;
}

Mat LayerNorm::backward(const Mat& dy) {
  const std::size_t d = dy.cols;
  Mat dx(dy.rows, d);
  for (std::size_t i = 0; i < dy.rows; ++i) {
    const double* dyr = dy.row(i);
    const double* xh = xhat_cache_.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      gamma.g.v[j] += dyr[j] * xh[j];
      beta.g.v[j] += dyr[j];
    }
    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double dxhat = dyr[j] * gamma.w.v[j];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * xh[j];
    }
    double inv = inv_std_cache_[i];
    double* dxr = dx.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      double dxhat = dyr[j] * gamma.w.v[j];
      dxr[j] = inv * (dxhat - sum_dxhat / double(d) - xh[j] * sum_dxhat_xhat / double(d));
    }
  }
  return dx;
}

//============================================================================
// Multi-head self-attention (unmasked)
//============================================================================

void MultiHeadSelfAttention::init(std::size_t d, int num_heads, SplitMix64& rng) {
  if (num_heads < 1 || d % std::size_t(num_heads) != 0)
    fail(ErrorKind::kUsage, "head count must divide the model dimension");
  heads = num_heads;
  dim = d;
  wq.init(d, d, rng);
  wk.init(d, d, rng);
  wv.init(d, d, rng);
  wo.init(d, d, rng);
}

namespace {

Mat head_slice(const Mat& m, int head, std::size_t dh) {
  Mat s(m.rows, dh);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* r = m.row(i) + std::size_t(head) * dh;
    std::copy(r, r + dh, s.row(i));
  }
  return s;
}

void head_unslice(Mat& full, const Mat& s, int head, std::size_t dh) {
  for (std::size_t i = 0; i < s.rows; ++i)
    std::copy(s.row(i), s.row(i) + dh, full.row(i) + std::size_t(head) * dh);
}

}  // namespace

Mat MultiHeadSelfAttention::forward(const Mat& x) {
  q_cache_ = wq.forward(x);
  k_cache_ = wk.forward(x);
  v_cache_ = wv.forward(x);
  const std::size_t dh = dim / std::size_t(heads);
  const double scale = 1.0 / std::sqrt(double(dh));

  Mat concat(x.rows, dim);
  probs_cache_.assign(std::size_t(heads), Mat());
  for (int h = 0; h < heads; ++h) {
    Mat qh = head_slice(q_cache_, h, dh);
    Mat kh = head_slice(k_cache_, h, dh);
    Mat vh = head_slice(v_cache_, h, dh);
    Mat scores = matmul_nt(qh, kh);
    for (auto& s : scores.v) s *= scale;
    softmax_rows(scores);
    Mat oh = matmul(scores, vh);
    probs_cache_[std::size_t(h)] = std::move(scores);
    head_unslice(concat, oh, h, dh);
  }
  return wo.forward(concat);
}

Mat MultiHeadSelfAttention::backward(const Mat& dy) {
  const std::size_t dh = dim / std::size_t(heads);
  const double scale = 1.0 / std::sqrt(double(dh));

  Mat dconcat = wo.backward(dy);
  Mat dq(dy.rows, dim), dk(dy.rows, dim), dv(dy.rows, dim);
  for (int h = 0; h < heads; ++h) {
    Mat doh = head_slice(dconcat, h, dh);
    Mat qh = head_slice(q_cache_, h, dh);
    Mat kh = head_slice(k_cache_, h, dh);
    Mat vh = head_slice(v_cache_, h, dh);
    const Mat& probs = probs_cache_[std::size_t(h)];

    Mat dvh = matmul_tn(probs, doh);
    Mat dprobs = matmul_nt(doh, vh);

    // Softmax backward per row: ds = (dp - sum(dp*p)) * p, then the score
    // scale folds in.
    Mat dscores(dprobs.rows, dprobs.cols);
    for (std::size_t i = 0; i < dprobs.rows; ++i) {
      const double* dp = dprobs.row(i);
      const double* p = probs.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < dprobs.cols; ++j) dot += dp[j] * p[j];
      double* ds = dscores.row(i);
      for (std::size_t j = 0; j < dprobs.cols; ++j) ds[j] = (dp[j] - dot) * p[j] * scale;
    }

    Mat dqh = matmul(dscores, kh);
    Mat dkh = matmul_tn(dscores, qh);
    head_unslice(dq, dqh, h, dh);
    head_unslice(dk, dkh, h, dh);
    head_unslice(dv, dvh, h, dh);
  }

  Mat dx = wq.backward(dq);
  Mat dxk = wk.backward(dk);
  Mat dxv = wv.backward(dv);
  for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dxk.v[i] + dxv.v[i];
  return dx;
}

void MultiHeadSelfAttention::collect(std::vector<Param*>& out) {
  wq.collect(out);
  wk.collect(out);
  wv.collect(out);
  wo.collect(out);
}

//============================================================================
// FeedForward
//============================================================================

void FeedForward::init(std::size_t d, std::size_t hidden, SplitMix64& rng) {
  fc1.init(d, hidden, rng);
  fc2.init(hidden, d, rng);
}

Mat FeedForward::forward(const Mat& x) {
  pre_act_cache_ = fc1.forward(x);
  Mat h = pre_act_cache_;
  for (auto& v : h.v) v = gelu(v);
  return fc2.forward(h);
}

Mat FeedForward::backward(const Mat& dy) {
  Mat dh = fc2.backward(dy);
  for (std::size_t i = 0; i < dh.v.size(); ++i)
    dh.v[i] *= gelu_grad(pre_act_cache_.v[i]);
  return fc1.backward(dh);
}

//============================================================================
// EncoderBlock
//============================================================================

void EncoderBlock::init(std::size_t d, int heads, std::size_t ff_hidden, SplitMix64& rng) {
  ln1.init(d);
  ln2.init(d);
  attn.init(d, heads, rng);
  ff.init(d, ff_hidden, rng);
}

Mat EncoderBlock::forward(const Mat& x) {
  Mat x1 = x;
  {
    Mat a = attn.forward(ln1.forward(x));
    for (std::size_t i = 0; i < x1.v.size(); ++i) x1.v[i] += a.v[i];
  }
  Mat out = x1;
  {
    Mat f = ff.forward(ln2.forward(x1));
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += f.v[i];
  }
  return out;
}

Mat EncoderBlock::backward(const Mat& dy) {
  Mat dx1 = dy;
  {
    Mat d = ln2.backward(ff.backward(dy));
    for (std::size_t i = 0; i < dx1.v.size(); ++i) dx1.v[i] += d.v[i];
  }
  Mat dx = dx1;
  {
    Mat d = ln1.backward(attn.backward(dx1));
    for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += d.v[i];
  }
  return dx;
}

void EncoderBlock::collect(std::vector<Param*>& out) {
  ln1.collect(out);
  attn.collect(out);
  ln2.collect(out);
  ff.collect(out);
}

}  // namespace dpcc::nn
