#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dpcc {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i8 = std::int8_t;
using i16 = std::int16_t;
using i32 = std::int32_t;
using i64 = std::int64_t;

//============================================================================
// Errors. Exit-code mapping: kUsage -> 1, kIntegrity -> 2.
//============================================================================

enum class ErrorKind { kUsage, kFormat, kIntegrity, kInternal };

class CodecError : public std::runtime_error {
public:
  CodecError(ErrorKind kind, const std::string& msg)
    : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw CodecError(kind, msg);
}

//============================================================================
// Geometry
//============================================================================

struct Vec3i {
  i32 x = 0, y = 0, z = 0;

  i32 operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  friend bool operator==(const Vec3i& a, const Vec3i& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
  }
};

inline i64 manhattan(const Vec3i& a, const Vec3i& b) {
  return std::abs(i64(a.x) - b.x) + std::abs(i64(a.y) - b.y)
    + std::abs(i64(a.z) - b.z);
}

inline i64 euclidean_sq(const Vec3i& a, const Vec3i& b) {
  i64 dx = i64(a.x) - b.x, dy = i64(a.y) - b.y, dz = i64(a.z) - b.z;
  return dx * dx + dy * dy + dz * dz;
}

inline i64 chebyshev(const Vec3i& a, const Vec3i& b) {
  i64 dx = std::abs(i64(a.x) - b.x);
  i64 dy = std::abs(i64(a.y) - b.y);
  i64 dz = std::abs(i64(a.z) - b.z);
  return std::max(dx, std::max(dy, dz));
}

//============================================================================
// Deterministic RNG (splitmix64). Used everywhere a seed appears so that
// encoder and decoder replay identical sequences on any platform.
//============================================================================

class SplitMix64 {
public:
  explicit SplitMix64(u64 seed) : state_(seed) {}

  u64 next_u64() {
    u64 z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). Modulo bias is irrelevant here; the pinned contract
  // is reproducibility, not statistical perfection.
  u64 next_below(u64 n) { return n ? next_u64() % n : 0; }

  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double next_gaussian() {
    // Box-Muller on two uniforms; both draws consumed unconditionally.
    double u1 = next_double(), u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

private:
  u64 state_;
};

inline void seeded_shuffle(std::vector<u32>& v, u64 seed) {
  SplitMix64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = std::size_t(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

//============================================================================
// Hashing
//============================================================================

inline u64 fnv1a64(const void* data, std::size_t len, u64 h = 0xcbf29ce484222325ull) {
  const u8* p = static_cast<const u8*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline u64 fnv1a64_append(u64 h, u64 value) {
  return fnv1a64(&value, sizeof(value), h);
}

u32 crc32(const void* data, std::size_t len, u32 crc = 0);

//============================================================================
// Zigzag mapping for signed residuals: 0,-1,1,-2,2 -> 0,1,2,3,4
//============================================================================

inline u32 zigzag_encode(i32 v) {
  return (u32(v) << 1) ^ u32(v >> 31);
}

inline i32 zigzag_decode(u32 z) {
  return i32(z >> 1) ^ -i32(z & 1);
}

//============================================================================
// Little-endian byte packing for headers and model files
//============================================================================

class ByteWriter {
public:
  explicit ByteWriter(std::vector<u8>& out) : out_(out) {}

  void u8v(u8 v) { out_.push_back(v); }
  void u16v(u16 v) { put(v); }
  void u32v(u32 v) { put(v); }
  void u64v(u64 v) { put(v); }
  void i32v(i32 v) { put(u32(v)); }
  void f32v(float v) { u32 bits; std::memcpy(&bits, &v, 4); put(bits); }
  void f64v(double v) { u64 bits; std::memcpy(&bits, &v, 8); put(bits); }
  void bytes(const void* p, std::size_t n) {
    const u8* b = static_cast<const u8*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void str(const std::string& s) {
    u16v(u16(s.size()));
    bytes(s.data(), s.size());
  }
  std::size_t size() const { return out_.size(); }

private:
  template <typename T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
      out_.push_back(u8((v >> (8 * i)) & 0xff));
  }
  std::vector<u8>& out_;
};

class ByteReader {
public:
  ByteReader(const u8* data, std::size_t len) : data_(data), len_(len) {}

  u8 u8v() { need(1); return data_[pos_++]; }
  u16 u16v() { return take<u16>(); }
  u32 u32v() { return take<u32>(); }
  u64 u64v() { return take<u64>(); }
  i32 i32v() { return i32(take<u32>()); }
  float f32v() { u32 b = take<u32>(); float v; std::memcpy(&v, &b, 4); return v; }
  double f64v() { u64 b = take<u64>(); double v; std::memcpy(&v, &b, 8); return v; }
  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, data_ + pos_, n);
    pos_ += n;
  }
  std::string str() {
    u16 n = u16v();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return len_ - pos_; }
  void seek(std::size_t p) {
    if (p > len_) fail(ErrorKind::kIntegrity, "seek past end of stream");
    pos_ = p;
  }

private:
  template <typename T>
  T take() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= T(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) {
    if (pos_ + n > len_) fail(ErrorKind::kIntegrity, "truncated stream");
  }
  const u8* data_;
  std::size_t len_;
  std::size_t pos_ = 0;
};

//============================================================================
// Deterministic parallel loop: index range is split into contiguous chunks,
// one per worker, so each output slot is written by exactly one thread.
//============================================================================

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

int hardware_threads();

}  // namespace dpcc
