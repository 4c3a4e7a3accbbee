#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "otsu.hpp"
#include "rebarscan/cluster.hpp"
#include "rebarscan/privacy.hpp"

namespace rebarscan {

namespace {

std::uint8_t to8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

std::uint8_t luma(Rgb p) {
  return to8(0.299 * p.r + 0.587 * p.g + 0.114 * p.b);
}

// Gray levels <= the returned value form the dark class; -1 when the crop
// has a single level.
int dark_threshold(const RasterImage& image) {
  std::array<double, 256> hist{};
  for (const Rgb& p : image.values()) hist[luma(p)] += 1.0;
  const std::optional<double> k = detail::otsu_split(hist);
  return k ? static_cast<int>(std::floor(*k)) : -1;
}

RasterImage binarize(const RasterImage& crop) {
  int t = dark_threshold(crop);
  if (t < 0) t = 127;
  RasterImage out(crop.width(), crop.height());
  for (std::size_t i = 0; i < crop.size(); ++i) {
    const std::uint8_t v = luma(crop[i]) > t ? 255 : 0;
    out[i] = Rgb{v, v, v};
  }
  return out;
}

// Nearest-rank percentile of a 256-bin histogram.
int percentile(const std::array<std::size_t, 256>& hist, std::size_t total, double q) {
  const auto rank = static_cast<std::size_t>(std::floor(q * static_cast<double>(total - 1)));
  std::size_t seen = 0;
  for (int v = 0; v < 256; ++v) {
    seen += hist[static_cast<std::size_t>(v)];
    if (seen > rank) return v;
  }
  return 255;
}

RasterImage contrast_stretch(const RasterImage& crop) {
  std::array<std::array<std::size_t, 256>, 3> hist{};
  for (const Rgb& p : crop.values()) {
    ++hist[0][p.r];
    ++hist[1][p.g];
    ++hist[2][p.b];
  }
  std::array<int, 3> lo{}, hi{};
  for (int c = 0; c < 3; ++c) {
    lo[c] = percentile(hist[c], crop.size(), 0.02);
    hi[c] = percentile(hist[c], crop.size(), 0.98);
  }
  auto stretch = [&](std::uint8_t v, int c) -> std::uint8_t {
    if (hi[c] <= lo[c]) return v;
    return to8((static_cast<double>(v) - lo[c]) * 255.0 / (hi[c] - lo[c]));
  };
  RasterImage out(crop.width(), crop.height());
  for (std::size_t i = 0; i < crop.size(); ++i) {
    out[i] = Rgb{stretch(crop[i].r, 0), stretch(crop[i].g, 1), stretch(crop[i].b, 2)};
  }
  return out;
}

RasterImage median3(const RasterImage& crop) {
  RasterImage out(crop.width(), crop.height());
  std::array<std::uint8_t, 9> r{}, g{}, b{};
  for (int y = 0; y < crop.height(); ++y) {
    for (int x = 0; x < crop.width(); ++x) {
      std::size_t n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const Rgb p = crop(std::clamp(x + dx, 0, crop.width() - 1),
                             std::clamp(y + dy, 0, crop.height() - 1));
          r[n] = p.r;
          g[n] = p.g;
          b[n] = p.b;
          ++n;
        }
      }
      std::nth_element(r.begin(), r.begin() + 4, r.end());
      std::nth_element(g.begin(), g.begin() + 4, g.end());
      std::nth_element(b.begin(), b.begin() + 4, b.end());
      out(x, y) = Rgb{r[4], g[4], b[4]};
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(OcrMethod method) noexcept {
  switch (method) {
    case OcrMethod::Binarize: return "binarize";
    case OcrMethod::ContrastStretch: return "contrast_stretch";
    case OcrMethod::Denoise: return "denoise";
    case OcrMethod::Deskew: return "deskew";
  }
  return "unknown";
}

OcrMethod parse_ocr_method(std::string_view name) {
  for (OcrMethod m : {OcrMethod::Binarize, OcrMethod::ContrastStretch, OcrMethod::Denoise,
                      OcrMethod::Deskew}) {
    if (to_string(m) == name) return m;
  }
  throw PreconditionError("unknown OCR method \"" + std::string(name) + "\"");
}

double dominant_text_angle(const RasterImage& crop) {
  if (crop.empty()) return 0.0;
  const int t = dark_threshold(crop);
  if (t < 0) return 0.0;
  std::vector<Point2D> dark;
  for (int y = 0; y < crop.height(); ++y) {
    for (int x = 0; x < crop.width(); ++x) {
      if (luma(crop(x, y)) <= t) dark.push_back(Point2D{static_cast<double>(x), static_cast<double>(y)});
    }
  }
  if (dark.size() < 2) return 0.0;
  double angle = 0.0;
  try {
    angle = fit_line(dark).angle_deg;
  } catch (const PreconditionError&) {
    return 0.0;
  }
  return angle > 90.0 ? angle - 180.0 : angle;
}

RasterImage rotate_image(const RasterImage& image, double degrees) {
  if (image.empty()) return {};
  const double rad = degrees * std::acos(-1.0) / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  const double cx = (image.width() - 1) / 2.0;
  const double cy = (image.height() - 1) / 2.0;
  RasterImage out(image.width(), image.height());
  auto at = [&](int x, int y) {
    return image(std::clamp(x, 0, image.width() - 1), std::clamp(y, 0, image.height() - 1));
  };
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      // inverse map: rotate the output position back by -degrees
      const double dx = x - cx;
      const double dy = y - cy;
      const double sxf = cx + c * dx + s * dy;
      const double syf = cy - s * dx + c * dy;
      const int x0 = static_cast<int>(std::floor(sxf));
      const int y0 = static_cast<int>(std::floor(syf));
      const double fx = sxf - x0;
      const double fy = syf - y0;
      const Rgb p00 = at(x0, y0), p10 = at(x0 + 1, y0), p01 = at(x0, y0 + 1),
                p11 = at(x0 + 1, y0 + 1);
      auto mix = [&](std::uint8_t a, std::uint8_t b, std::uint8_t cc, std::uint8_t d) {
        return to8((1 - fx) * (1 - fy) * a + fx * (1 - fy) * b + (1 - fx) * fy * cc +
                   fx * fy * d);
      };
      out(x, y) = Rgb{mix(p00.r, p10.r, p01.r, p11.r), mix(p00.g, p10.g, p01.g, p11.g),
                      mix(p00.b, p10.b, p01.b, p11.b)};
    }
  }
  return out;
}

RasterImage ocr_preprocess(const RasterImage& image, const BBox& region, OcrMethod method) {
  if (!region.valid() || region.x_min < 0 || region.y_min < 0 || region.x_max >= image.width() ||
      region.y_max >= image.height()) {
    throw PreconditionError("ocr_preprocess: region outside the image");
  }
  RasterImage crop(region.width(), region.height());
  for (int y = 0; y < crop.height(); ++y) {
    for (int x = 0; x < crop.width(); ++x) crop(x, y) = image(region.x_min + x, region.y_min + y);
  }
  switch (method) {
    case OcrMethod::Binarize: return binarize(crop);
    case OcrMethod::ContrastStretch: return contrast_stretch(crop);
    case OcrMethod::Denoise: return median3(crop);
    case OcrMethod::Deskew: {
      const double angle = dominant_text_angle(crop);
      return angle == 0.0 ? crop : rotate_image(crop, -angle);
    }
  }
  return crop;
}

}  // namespace rebarscan
