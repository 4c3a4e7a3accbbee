#include "rebarscan/serial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace rebarscan::serial {

HsvImage rgb_to_hsv(const RasterImage& image) {
  if (image.empty()) return {};
  HsvImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) out(x, y) = rebarscan::rgb_to_hsv(image(x, y));
  }
  return out;
}

BinaryMask hsv_filter(const RasterImage& image, const HsvRange& range) {
  range.validate();
  if (image.empty()) return {};
  BinaryMask out(image.width(), image.height(), 0);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const HsvPixel p = rebarscan::rgb_to_hsv(image(x, y));
      const bool in = p.h >= range.h_min && p.h <= range.h_max && p.s >= range.s_min &&
                      p.s <= range.s_max && p.v >= range.v_min && p.v <= range.v_max;
      out(x, y) = in ? 1 : 0;
    }
  }
  return out;
}

RasterImage gaussian_blur(const RasterImage& image, int half_width, double sigma) {
  if (half_width < 1) throw PreconditionError("gaussian_blur: half width must be >= 1");
  if (!(sigma > 0.0)) throw PreconditionError("gaussian_blur: sigma must be > 0");
  if (image.empty()) return {};
  const int k = half_width;
  const int side = 2 * k + 1;
  std::vector<double> kernel(static_cast<std::size_t>(side) * side);
  double total = 0.0;
  for (int dy = -k; dy <= k; ++dy) {
    for (int dx = -k; dx <= k; ++dx) {
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      kernel[static_cast<std::size_t>((dy + k) * side + dx + k)] = w;
      total += w;
    }
  }
  for (double& w : kernel) w /= total;

  RasterImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double r = 0.0, g = 0.0, b = 0.0;
      for (int dy = -k; dy <= k; ++dy) {
        const int sy = std::clamp(y + dy, 0, image.height() - 1);
        for (int dx = -k; dx <= k; ++dx) {
          const int sx = std::clamp(x + dx, 0, image.width() - 1);
          const double w = kernel[static_cast<std::size_t>((dy + k) * side + dx + k)];
          const Rgb p = image(sx, sy);
          r += w * p.r;
          g += w * p.g;
          b += w * p.b;
        }
      }
      auto to8 = [](double v) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      };
      out(x, y) = Rgb{to8(r), to8(g), to8(b)};
    }
  }
  return out;
}

BinaryMask threshold_mask(const ConfidenceMap& conf, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw PreconditionError("threshold_mask: tau outside [0,1]");
  if (conf.empty()) return {};
  BinaryMask out(conf.width(), conf.height(), 0);
  for (std::size_t i = 0; i < conf.size(); ++i) out[i] = conf[i] >= tau ? 1 : 0;
  return out;
}

void color_affinity(const HsvImage& hsv, std::span<const HsvPixel> colors, double sigma,
                    ConfidenceMap& affinity, BinaryMask& within) {
  if (!(sigma > 0.0)) throw PreconditionError("color_affinity: sigma must be > 0");
  affinity = ConfidenceMap(hsv.width(), hsv.height(), 0.0f);
  within = BinaryMask(hsv.width(), hsv.height(), 0);
  for (std::size_t i = 0; i < hsv.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const HsvPixel& c : colors) {
      const int raw = std::abs(int{hsv[i].h} - int{c.h});
      const double dh = 2.0 * std::min(raw, 180 - raw);
      const double ds = int{hsv[i].s} - int{c.s};
      const double dv = int{hsv[i].v} - int{c.v};
      best = std::min(best, dh * dh + ds * ds + dv * dv);
    }
    if (colors.empty()) continue;
    affinity[i] = static_cast<float>(std::exp(-best / (2.0 * sigma * sigma)));
    within[i] = best <= 4.0 * sigma * sigma ? 1 : 0;
  }
}

}  // namespace rebarscan::serial
