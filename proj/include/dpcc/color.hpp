#pragma once

#include "dpcc/common.hpp"

namespace dpcc {

/// Lossless reversible color transform. Y stays 8-bit; Co/Cg are 9-bit
/// signed in [-255, 255]. Exact inverse for every 8-bit RGB triple.
struct YCoCg {
  i32 y = 0;
  i32 co = 0;
  i32 cg = 0;
};

// Shifts on negative values are arithmetic (floor), which is what makes the
// transform exactly invertible.
inline YCoCg rgb_to_ycocgr(i32 r, i32 g, i32 b) {
  if (r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
    fail(ErrorKind::kUsage, "RGB component out of [0,255]");
  i32 co = r - b;
  i32 t = b + (co >> 1);
  i32 cg = g - t;
  i32 y = t + (cg >> 1);
  return {y, co, cg};
}

inline void ycocgr_to_rgb(const YCoCg& c, i32& r, i32& g, i32& b) {
  i32 t = c.y - (c.cg >> 1);
  g = c.cg + t;
  b = t - (c.co >> 1);
  r = b + c.co;
}

}  // namespace dpcc
