#include "dpcc/common.hpp"

#include <array>

namespace dpcc {

namespace {

std::array<u32, 256> make_crc_table() {
  std::array<u32, 256> table{};
  for (u32 i = 0; i < 256; ++i) {
    u32 c = i;
    for (int b = 0; b < 8; ++b)
      c = (c & 1) ? (0xedb88320u ^ (c >> 1)) : (c >> 1);
    table[i] = c;
  }
  return table;
}

}  // namespace

u32 crc32(const void* data, std::size_t len, u32 crc) {
  static const std::array<u32, 256> table = make_crc_table();
  const u8* p = static_cast<const u8*>(data);
  u32 c = crc ^ 0xffffffffu;
  for (std::size_t i = 0; i < len; ++i)
    c = table[(c ^ p[i]) & 0xff] ^ (c >> 8);
  return c ^ 0xffffffffu;
}

int hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n ? int(n) : 1;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  int workers = std::max(1, threads);
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = int(std::min<std::size_t>(std::size_t(workers), n));
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(workers));
  std::size_t chunk = (n + std::size_t(workers) - 1) / std::size_t(workers);
  for (int w = 0; w < workers; ++w) {
    std::size_t lo = std::size_t(w) * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace dpcc
