#include "rebarscan/colorfilter.hpp"

namespace rebarscan {

void HsvRange::validate() const {
  auto check = [](int lo, int hi, int top, const char* channel) {
    if (lo < 0 || hi > top || lo > hi) {
      throw PreconditionError(std::string("hsv range: invalid ") + channel + " bounds");
    }
  };
  check(h_min, h_max, 179, "hue");
  check(s_min, s_max, 255, "saturation");
  check(v_min, v_max, 255, "value");
}

HsvRange rust_range() noexcept { return HsvRange{0, 177, 31, 135, 28, 142}; }

HsvRange white_signboard_range() noexcept { return HsvRange{0, 179, 0, 40, 180, 255}; }

BinaryMask hsv_filter(const HsvImage& hsv, const HsvRange& range) {
  range.validate();
  if (hsv.empty()) return {};
  BinaryMask out(hsv.width(), hsv.height(), 0);
  const auto n = static_cast<std::ptrdiff_t>(hsv.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out[idx] = range.contains(hsv[idx]) ? 1 : 0;
  }
  return out;
}

BinaryMask hsv_filter(const RasterImage& image, const HsvRange& range) {
  range.validate();
  if (image.empty()) return {};
  BinaryMask out(image.width(), image.height(), 0);
  const auto n = static_cast<std::ptrdiff_t>(image.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out[idx] = range.contains(rgb_to_hsv(image[idx])) ? 1 : 0;
  }
  return out;
}

}  // namespace rebarscan
