#include "dpcc/coder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dpcc {

//============================================================================
// CDF quantization
//============================================================================

QuantizedCdf quantize_cdf(std::span<const u64> weights) {
  const std::size_t a = weights.size();
  if (a == 0 || a > QuantizedCdf::kTotal)
    fail(ErrorKind::kInternal, "bad alphabet size for CDF quantization");

  u64 w_total = 0;
  for (u64 w : weights) w_total += w;
  if (w_total == 0) fail(ErrorKind::kInternal, "all-zero weight vector");

  std::vector<u64> q(a), rem(a);
  u64 assigned = 0;
  for (std::size_t i = 0; i < a; ++i) {
    u64 scaled = weights[i] * u64(QuantizedCdf::kTotal);
    q[i] = scaled / w_total;
    rem[i] = scaled % w_total;
    assigned += q[i];
  }

  // Leftover units to the largest remainders, ties to the lower index.
  u64 leftover = u64(QuantizedCdf::kTotal) - assigned;
  if (leftover > 0) {
    std::vector<u32> order(a);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](u32 x, u32 y) {
      if (rem[x] != rem[y]) return rem[x] > rem[y];
      return x < y;
    });
    for (u64 i = 0; i < leftover; ++i) ++q[order[std::size_t(i)]];
  }

  // Floor at 1; excess comes out of the largest bucket.
  u64 excess = 0;
  for (std::size_t i = 0; i < a; ++i)
    if (q[i] == 0) { q[i] = 1; ++excess; }
  if (excess > 0) {
    std::size_t largest = 0;
    for (std::size_t i = 1; i < a; ++i)
      if (q[i] > q[largest]) largest = i;
    if (q[largest] <= excess)
      fail(ErrorKind::kInternal, "CDF quantization cannot satisfy count floor");
    q[largest] -= excess;
  }

  QuantizedCdf cdf;
  cdf.cum.resize(a + 1);
  cdf.cum[0] = 0;
  for (std::size_t i = 0; i < a; ++i) cdf.cum[i + 1] = cdf.cum[i] + u32(q[i]);
  if (cdf.cum[a] != QuantizedCdf::kTotal)
    fail(ErrorKind::kInternal, "CDF quantization total mismatch");
  return cdf;
}

QuantizedCdf quantize_cdf(std::span<const double> probs) {
  std::vector<u64> weights(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    double p = probs[i];
    weights[i] = p > 0 ? u64(std::llround(p * 1073741824.0)) : 0;
  }
  return quantize_cdf(std::span<const u64>(weights));
}

//============================================================================
// Range coder
//============================================================================

namespace {
constexpr u32 kRenormThreshold = 1u << 24;
constexpr int kProbBits = 16;
}  // namespace

void RangeEncoder::shift_low() {
  if (u32(low_ >> 32) != 0 || u32(low_) < 0xff000000u) {
    u8 carry = u8(low_ >> 32);
    if (!first_byte_) out_.push_back(u8(cache_ + carry));
    first_byte_ = false;
    for (; cache_size_ > 1; --cache_size_) out_.push_back(u8(0xff + carry));
    cache_ = u8(low_ >> 24);
    cache_size_ = 0;
  }
  ++cache_size_;
  low_ = (low_ << 8) & 0xffffffffull;
}

void RangeEncoder::encode(const QuantizedCdf& cdf, int symbol) {
  if (symbol < 0 || symbol >= cdf.alphabet())
    fail(ErrorKind::kInternal, "symbol outside CDF alphabet");
  u32 r = range_ >> kProbBits;
  u32 lo = cdf.low(symbol);
  low_ += u64(r) * lo;
  // The top symbol absorbs the truncation slack of range>>16.
  if (lo + cdf.freq(symbol) == QuantizedCdf::kTotal)
    range_ -= r * lo;
  else
    range_ = r * cdf.freq(symbol);
  while (range_ < kRenormThreshold) {
    shift_low();
    range_ <<= 8;
  }
}

void RangeEncoder::finish() {
  if (finished_) fail(ErrorKind::kInternal, "RangeEncoder::finish called twice");
  finished_ = true;
  for (int i = 0; i < 5; ++i) shift_low();
}

RangeDecoder::RangeDecoder(const u8* data, std::size_t len) : data_(data), len_(len) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

u8 RangeDecoder::next_byte() {
  if (pos_ >= len_) fail(ErrorKind::kIntegrity, "range decode past end of stream");
  return data_[pos_++];
}

int RangeDecoder::decode(const QuantizedCdf& cdf) {
  u32 r = range_ >> kProbBits;
  u32 dv = std::min(code_ / r, QuantizedCdf::kTotal - 1);

  // Largest s with cdf.low(s) <= dv.
  const auto& cum = cdf.cum;
  int lo = 0, hi = cdf.alphabet() - 1;
  while (lo < hi) {
    int mid = (lo + hi + 1) >> 1;
    if (cum[std::size_t(mid)] <= dv) lo = mid;
    else hi = mid - 1;
  }
  int symbol = lo;

  u32 base = cdf.low(symbol);
  code_ -= r * base;
  if (base + cdf.freq(symbol) == QuantizedCdf::kTotal)
    range_ -= r * base;
  else
    range_ = r * cdf.freq(symbol);
  while (range_ < kRenormThreshold) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
  return symbol;
}

//============================================================================
// Adaptive model
//============================================================================

AdaptiveModel::AdaptiveModel(int alphabet, u32 increment, u32 cap)
  : counts_(std::size_t(alphabet), 1u),
    total_(u64(alphabet)),
    increment_(increment),
    cap_(cap) {
  if (alphabet < 1 || u64(alphabet) > u64(cap))
    fail(ErrorKind::kInternal, "adaptive model alphabet too large for cap");
}

QuantizedCdf AdaptiveModel::cdf() const {
  std::vector<u64> w(counts_.begin(), counts_.end());
  return quantize_cdf(std::span<const u64>(w));
}

void AdaptiveModel::observe(int symbol) {
  counts_[std::size_t(symbol)] += increment_;
  total_ += increment_;
  if (total_ > cap_) {
    total_ = 0;
    for (auto& c : counts_) {
      c = (c + 1) >> 1;
      total_ += c;
    }
  }
}

double AdaptiveModel::probability(int symbol) const {
  return double(counts_[std::size_t(symbol)]) / double(total_);
}

//============================================================================
// Run-length coding
//============================================================================

std::vector<u8> run_length_encode(std::span<const i32> residuals) {
  std::vector<u8> out;
  RangeEncoder rc(out);
  AdaptiveModel run_model(kRleRunAlphabet);
  AdaptiveModel value_model(kRleValueAlphabet);

  auto emit_run = [&](u64 run) {
    while (run >= 255) {
      rc.encode(run_model.cdf(), 255);
      run_model.observe(255);
      run -= 255;
    }
    rc.encode(run_model.cdf(), int(run));
    run_model.observe(int(run));
  };
  auto emit_value = [&](int token) {
    rc.encode(value_model.cdf(), token);
    value_model.observe(token);
  };

  u64 run = 0;
  for (i32 v : residuals) {
    if (v == 0) {
      ++run;
      continue;
    }
    u32 zz = zigzag_encode(v);
    if (zz >= u32(kRleValueAlphabet))
      fail(ErrorKind::kInternal, "residual outside run-length alphabet");
    emit_run(run);
    emit_value(int(zz));
    run = 0;
  }
  emit_run(run);
  emit_value(0);  // terminator
  rc.finish();
  return out;
}

std::vector<i32> run_length_decode(const std::vector<u8>& bytes, std::size_t count) {
  std::vector<i32> out;
  out.reserve(count);
  RangeDecoder rc(bytes.data(), bytes.size());
  AdaptiveModel run_model(kRleRunAlphabet);
  AdaptiveModel value_model(kRleValueAlphabet);

  auto read_run = [&]() -> u64 {
    u64 run = 0;
    for (;;) {
      int tok = rc.decode(run_model.cdf());
      run_model.observe(tok);
      run += u64(tok);
      if (tok != 255) break;
    }
    return run;
  };

  for (;;) {
    u64 run = read_run();
    for (u64 i = 0; i < run; ++i) out.push_back(0);
    int tok = rc.decode(value_model.cdf());
    value_model.observe(tok);
    if (tok == 0) break;
    out.push_back(zigzag_decode(u32(tok)));
  }
  if (out.size() != count)
    fail(ErrorKind::kIntegrity, "run-length stream decodes to wrong count");
  return out;
}

}  // namespace dpcc
