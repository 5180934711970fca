#pragma once

#include <span>
#include <vector>

#include "dpcc/common.hpp"

namespace dpcc {

//============================================================================
// Quantized CDFs. The coded contract between encoder and decoder is this
// integer table, never the floating-point probabilities behind it.
//============================================================================

struct QuantizedCdf {
  static constexpr u32 kTotal = 65536;

  std::vector<u32> cum;  // size alphabet+1, cum[0]=0, cum.back()=kTotal

  int alphabet() const { return int(cum.size()) - 1; }
  u32 low(int s) const { return cum[std::size_t(s)]; }
  u32 freq(int s) const { return cum[std::size_t(s) + 1] - cum[std::size_t(s)]; }
  u64 checksum() const { return fnv1a64(cum.data(), cum.size() * sizeof(u32)); }
};

/// Largest-remainder quantization of non-negative integer weights to a
/// 65536-total CDF with every count >= 1. Integer arithmetic throughout:
///   q_i = floor(w_i * 65536 / W), leftover units go to the largest
///   remainders (ties to lower index), zero counts are raised to 1 with the
///   excess removed from the largest bucket.
QuantizedCdf quantize_cdf(std::span<const u64> weights);

/// Probability route into the same quantizer: weights = llround(p * 2^30),
/// so identical probability vectors quantize identically.
QuantizedCdf quantize_cdf(std::span<const double> probs);

//============================================================================
// Range coder: 32-bit range, 16-bit probability precision, byte-wise
// renormalization with carry propagation. Stream tail is 4 bytes.
//============================================================================

class RangeEncoder {
public:
  explicit RangeEncoder(std::vector<u8>& out) : out_(out) {}

  void encode(const QuantizedCdf& cdf, int symbol);
  /// Flushes the tail. Must be called exactly once, after all symbols.
  void finish();

private:
  void shift_low();

  std::vector<u8>& out_;
  u64 low_ = 0;
  u32 range_ = 0xffffffffu;
  u8 cache_ = 0;
  u64 cache_size_ = 1;
  bool first_byte_ = true;  // leading cache byte is always zero; suppressed
  bool finished_ = false;
};

class RangeDecoder {
public:
  RangeDecoder(const u8* data, std::size_t len);

  int decode(const QuantizedCdf& cdf);
  std::size_t consumed() const { return pos_; }

private:
  u8 next_byte();

  const u8* data_;
  std::size_t len_;
  std::size_t pos_ = 0;
  u32 range_ = 0xffffffffu;
  u32 code_ = 0;
};

//============================================================================
// Order-0 adaptive frequency model. Counts start at 1, grow by `increment`
// per observed symbol, and are halved (rounding up, so none drops below 1)
// whenever the total would exceed 2^16-32. Encoder and decoder call
// cdf()/observe() in the same order, so both sides evolve identically.
//============================================================================

class AdaptiveModel {
public:
  AdaptiveModel(int alphabet, u32 increment = 32, u32 cap = 65504);

  QuantizedCdf cdf() const;
  void observe(int symbol);
  double probability(int symbol) const;

private:
  std::vector<u32> counts_;
  u64 total_;
  u32 increment_;
  u32 cap_;
};

//============================================================================
// Run-length coding of signed residual streams. Token stream is
//   { (zero_run, zigzag(value)) }* (trailing_zero_run, 0)
// with 0 in the value alphabet reserved as the terminator. Runs >= 255 are
// carried by repeated 255 tokens. Both token kinds are range-coded with
// independent adaptive models (increment 32).
//============================================================================

constexpr int kRleValueAlphabet = 1021;  // terminator + zigzag of [-510,510]
constexpr int kRleRunAlphabet = 256;

std::vector<u8> run_length_encode(std::span<const i32> residuals);
std::vector<i32> run_length_decode(const std::vector<u8>& bytes, std::size_t count);

//============================================================================
// Chroma overflow escape: residuals beyond [-255,255] appear in the main
// stream as the boundary symbols +-255 while the side stream carries one
// entry per point -- the exact residual for overflowing points, 0 otherwise
// -- which run-length codes to almost nothing when overflow is absent.
//============================================================================

inline i32 clamp_residual(i32 r) { return r < -255 ? -255 : (r > 255 ? 255 : r); }
inline i32 overflow_escape_value(i32 r) { return (r < -255 || r > 255) ? r : 0; }
inline i32 restore_overflow(i32 main, i32 escape) { return escape != 0 ? escape : main; }

}  // namespace dpcc
