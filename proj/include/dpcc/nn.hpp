#pragma once

#include <span>
#include <vector>

#include "dpcc/common.hpp"

namespace dpcc::nn {

//============================================================================
// Row-major matrix in doubles. All reductions run in fixed left-to-right
// order; thread parallelism only ever splits output rows, so results are
// bit-identical to the serial path.
//============================================================================

struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

  double* row(std::size_t i) { return v.data() + i * cols; }
  const double* row(std::size_t i) const { return v.data() + i * cols; }
  double& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

void set_matmul_threads(int threads);
int matmul_threads();

Mat matmul(const Mat& a, const Mat& b);      // a (m x k) * b (k x n)
Mat matmul_nt(const Mat& a, const Mat& bt);  // a (m x k) * bt^T, bt (n x k)
Mat matmul_tn(const Mat& a, const Mat& b);   // a^T (k x m)^T: (m x k)^T * b (m x n)

double gelu(double x);
double gelu_grad(double x);

struct Param {
  Mat w;
  Mat g;

  void alloc(std::size_t r, std::size_t c) { w = Mat(r, c); g = Mat(r, c); }
  void zero_grad() { g.zero(); }
};

//============================================================================
// Layers. forward() caches whatever backward() needs; backward() returns
// the gradient w.r.t. its input and accumulates parameter gradients.
//============================================================================

struct Linear {
  Param weight;  // out x in
  Param bias;    // 1 x out

  void init(std::size_t in, std::size_t out, SplitMix64& rng);
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);
  void collect(std::vector<Param*>& out) { out.push_back(&weight); out.push_back(&bias); }

  Mat x_cache_;
};

struct LayerNorm {
  Param gamma;  // 1 x d
  Param beta;   // 1 x d
  static constexpr double kEps = 1e-5;

  void init(std::size_t d);
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);
  void collect(std::vector<Param*>& out) { out.push_back(&gamma); out.push_back(&beta); }

  Mat xhat_cache_;
  std::vector<double> inv_std_cache_;
};

struct MultiHeadSelfAttention {
  int heads = 1;
  std::size_t dim = 0;
  Linear wq, wk, wv, wo;

  void init(std::size_t d, int num_heads, SplitMix64& rng);
  Mat forward(const Mat& x);  // unmasked self-attention over the batch
  Mat backward(const Mat& dy);
  void collect(std::vector<Param*>& out);

  Mat q_cache_, k_cache_, v_cache_;
  std::vector<Mat> probs_cache_;  // one N x N per head
};

struct FeedForward {
  Linear fc1, fc2;

  void init(std::size_t d, std::size_t hidden, SplitMix64& rng);
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);
  void collect(std::vector<Param*>& out) { fc1.collect(out); fc2.collect(out); }

  Mat pre_act_cache_;
};

/// Pre-layer-norm residual block: x + attn(ln1(x)), then + ff(ln2(.)).
struct EncoderBlock {
  LayerNorm ln1, ln2;
  MultiHeadSelfAttention attn;
  FeedForward ff;

  void init(std::size_t d, int heads, std::size_t ff_hidden, SplitMix64& rng);
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);
  void collect(std::vector<Param*>& out);
};

/// Row-wise softmax; subtracts the row max first.
void softmax_rows(Mat& m);

}  // namespace dpcc::nn
