#pragma once

#include "rebarscan/raster.hpp"

namespace rebarscan {

/// Inclusive box in HSV space (hue on [0,179], saturation/value on [0,255]).
struct HsvRange {
  int h_min = 0;
  int h_max = 179;
  int s_min = 0;
  int s_max = 255;
  int v_min = 0;
  int v_max = 255;

  /// Throws PreconditionError on min > max or out-of-scale bounds.
  void validate() const;

  bool contains(HsvPixel p) const noexcept {
    return h_min <= p.h && p.h <= h_max && s_min <= p.s && p.s <= s_max && v_min <= p.v &&
           p.v <= v_max;
  }

  friend bool operator==(const HsvRange&, const HsvRange&) = default;
};

/// Rust candidates: H[0,177] S[31,135] V[28,142].
HsvRange rust_range() noexcept;

/// Low-saturation, high-value pixels typical of white signboards.
HsvRange white_signboard_range() noexcept;

BinaryMask hsv_filter(const RasterImage& image, const HsvRange& range);
BinaryMask hsv_filter(const HsvImage& hsv, const HsvRange& range);

}  // namespace rebarscan
