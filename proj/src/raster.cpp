#include "rebarscan/raster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace rebarscan {

std::size_t popcount(const BinaryMask& mask) {
  std::size_t n = 0;
  for (auto bit : mask.values()) n += bit != 0;
  return n;
}

void validate_confidence(const ConfidenceMap& conf) {
  for (float v : conf.values()) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw PreconditionError("confidence value outside [0,1]");
    }
  }
}

BBox intersect(const BBox& a, const BBox& b) noexcept {
  return BBox{std::max(a.x_min, b.x_min), std::max(a.y_min, b.y_min),
              std::min(a.x_max, b.x_max), std::min(a.y_max, b.y_max)};
}

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::Auto:
      return "auto";
    case Stage::HsvGrid:
      return "hsv_grid";
    case Stage::Pattern:
      return "pattern";
  }
  return "unknown";
}

BinaryMask Region::full_mask() const {
  BinaryMask out(frame_width, frame_height, 0);
  paint(out, *this);
  return out;
}

Region region_from_pixels(std::span<const std::size_t> pixels, int frame_width,
                          int frame_height) {
  if (pixels.empty()) throw PreconditionError("region_from_pixels: empty pixel list");
  const auto w = static_cast<std::size_t>(frame_width);

  Region r;
  r.frame_width = frame_width;
  r.frame_height = frame_height;
  r.bbox = BBox{frame_width, frame_height, -1, -1};
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t idx : pixels) {
    const int x = static_cast<int>(idx % w);
    const int y = static_cast<int>(idx / w);
    r.bbox.x_min = std::min(r.bbox.x_min, x);
    r.bbox.y_min = std::min(r.bbox.y_min, y);
    r.bbox.x_max = std::max(r.bbox.x_max, x);
    r.bbox.y_max = std::max(r.bbox.y_max, y);
    sx += x;
    sy += y;
  }
  r.mask = BinaryMask(r.bbox.width(), r.bbox.height(), 0);
  for (std::size_t idx : pixels) {
    const int x = static_cast<int>(idx % w);
    const int y = static_cast<int>(idx / w);
    r.mask(x - r.bbox.x_min, y - r.bbox.y_min) = 1;
  }
  r.area = static_cast<long long>(pixels.size());
  r.centroid = Point2D{sx / static_cast<double>(r.area), sy / static_cast<double>(r.area)};
  const double bw = r.bbox.width();
  const double bh = r.bbox.height();
  r.aspect_ratio = std::max(bw, bh) / std::min(bw, bh);
  return r;
}

namespace {

// Flood fill from `seed` over true pixels not yet labelled; appends the
// visited linear indices to `out`.
void flood(const BinaryMask& mask, std::vector<std::int32_t>& labels, std::size_t seed,
           std::int32_t label, Connectivity connectivity, std::vector<std::size_t>& out) {
  static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int n_dirs = connectivity == Connectivity::Four ? 4 : 8;
  const int w = mask.width();

  std::deque<std::size_t> queue{seed};
  labels[seed] = label;
  while (!queue.empty()) {
    const std::size_t idx = queue.front();
    queue.pop_front();
    out.push_back(idx);
    const int x = static_cast<int>(idx % static_cast<std::size_t>(w));
    const int y = static_cast<int>(idx / static_cast<std::size_t>(w));
    for (int d = 0; d < n_dirs; ++d) {
      const int nx = x + kDx[d];
      const int ny = y + kDy[d];
      if (!mask.contains(nx, ny)) continue;
      const std::size_t n = mask.index(nx, ny);
      if (mask[n] == 0 || labels[n] >= 0) continue;
      labels[n] = label;
      queue.push_back(n);
    }
  }
}

}  // namespace

std::vector<Region> connected_components(const BinaryMask& mask, Connectivity connectivity) {
  std::vector<Region> regions;
  if (mask.empty()) return regions;
  std::vector<std::int32_t> labels(mask.size(), -1);
  std::vector<std::size_t> pixels;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0 || labels[i] >= 0) continue;
    pixels.clear();
    const auto label = static_cast<std::int32_t>(regions.size());
    flood(mask, labels, i, label, connectivity, pixels);
    Region r = region_from_pixels(pixels, mask.width(), mask.height());
    r.id = label;
    regions.push_back(std::move(r));
  }
  return regions;
}

std::optional<Region> component_at(const BinaryMask& mask, int x, int y,
                                   Connectivity connectivity) {
  if (!mask.contains(x, y)) throw PreconditionError("component_at: pixel outside the mask");
  if (mask(x, y) == 0) return std::nullopt;
  std::vector<std::int32_t> labels(mask.size(), -1);
  std::vector<std::size_t> pixels;
  flood(mask, labels, mask.index(x, y), 0, connectivity, pixels);
  return region_from_pixels(pixels, mask.width(), mask.height());
}

long long overlap_area(const Region& a, const Region& b) {
  const BBox box = intersect(a.bbox, b.bbox);
  if (!box.valid()) return 0;
  long long n = 0;
  for (int y = box.y_min; y <= box.y_max; ++y) {
    for (int x = box.x_min; x <= box.x_max; ++x) {
      n += a.covers(x, y) && b.covers(x, y);
    }
  }
  return n;
}

void paint(BinaryMask& frame_mask, const Region& region) {
  for (int y = region.bbox.y_min; y <= region.bbox.y_max; ++y) {
    for (int x = region.bbox.x_min; x <= region.bbox.x_max; ++x) {
      if (region.mask(x - region.bbox.x_min, y - region.bbox.y_min) != 0) frame_mask(x, y) = 1;
    }
  }
}

double mean_over(const ConfidenceMap& conf, const Region& region) {
  if (region.area == 0) return 0.0;
  double sum = 0.0;
  for (int y = region.bbox.y_min; y <= region.bbox.y_max; ++y) {
    for (int x = region.bbox.x_min; x <= region.bbox.x_max; ++x) {
      if (region.covers(x, y)) sum += conf(x, y);
    }
  }
  return sum / static_cast<double>(region.area);
}

// Color conversion -----------------------------------------------------------

HsvPixel rgb_to_hsv(Rgb rgb) noexcept {
  const int r = rgb.r;
  const int g = rgb.g;
  const int b = rgb.b;
  const int v = std::max({r, g, b});
  const int delta = v - std::min({r, g, b});

  HsvPixel out;
  out.v = static_cast<std::uint8_t>(v);
  if (v == 0 || delta == 0) return out;
  // round(255 * delta / v) in integer arithmetic
  out.s = static_cast<std::uint8_t>((2 * 255 * delta + v) / (2 * v));

  double deg = 0.0;
  if (v == r) {
    deg = 60.0 * (g - b) / delta;
  } else if (v == g) {
    deg = 120.0 + 60.0 * (b - r) / delta;
  } else {
    deg = 240.0 + 60.0 * (r - g) / delta;
  }
  if (deg < 0.0) deg += 360.0;
  out.h = static_cast<std::uint8_t>(static_cast<int>(std::floor(deg / 2.0 + 0.5)) % 180);
  return out;
}

Rgb hsv_to_rgb(HsvPixel hsv) noexcept {
  const double value = hsv.v / 255.0;
  const double chroma = value * (hsv.s / 255.0);
  const double sector = (hsv.h * 2.0) / 60.0;
  const double x = chroma * (1.0 - std::fabs(std::fmod(sector, 2.0) - 1.0));
  const double m = value - chroma;

  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  switch (static_cast<int>(sector) % 6) {
    case 0: r = chroma; g = x; break;
    case 1: r = x; g = chroma; break;
    case 2: g = chroma; b = x; break;
    case 3: g = x; b = chroma; break;
    case 4: r = x; b = chroma; break;
    default: r = chroma; b = x; break;
  }
  auto to8 = [m](double c) {
    return static_cast<std::uint8_t>(std::clamp(std::floor((c + m) * 255.0 + 0.5), 0.0, 255.0));
  };
  return Rgb{to8(r), to8(g), to8(b)};
}

HsvImage rgb_to_hsv(const RasterImage& image) {
  if (image.empty()) return {};
  HsvImage out(image.width(), image.height());
  const auto n = static_cast<std::ptrdiff_t>(image.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = rgb_to_hsv(image[static_cast<std::size_t>(i)]);
  }
  return out;
}

// Gaussian blur --------------------------------------------------------------

std::vector<double> gaussian_kernel_1d(int half_width, double sigma) {
  if (half_width < 1) throw PreconditionError("gaussian kernel: half width must be >= 1");
  if (!(sigma > 0.0)) throw PreconditionError("gaussian kernel: sigma must be > 0");
  std::vector<double> w(static_cast<std::size_t>(2 * half_width + 1));
  const double denom = 2.0 * sigma * sigma;
  for (int i = -half_width; i <= half_width; ++i) {
    w[static_cast<std::size_t>(i + half_width)] = std::exp(-(i * i) / denom);
  }
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= sum;
  return w;
}

RasterImage gaussian_blur(const RasterImage& image, int half_width, double sigma) {
  const std::vector<double> w = gaussian_kernel_1d(half_width, sigma);
  if (image.empty()) return {};
  const int width = image.width();
  const int height = image.height();
  const int k = half_width;

  // horizontal pass into a float buffer, 3 channels interleaved
  std::vector<float> tmp(image.size() * 3);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (int i = -k; i <= k; ++i) {
        const int sx = std::clamp(x + i, 0, width - 1);
        const Rgb& p = image(sx, y);
        const double wi = w[static_cast<std::size_t>(i + k)];
        acc[0] += wi * p.r;
        acc[1] += wi * p.g;
        acc[2] += wi * p.b;
      }
      float* dst = &tmp[image.index(x, y) * 3];
      dst[0] = static_cast<float>(acc[0]);
      dst[1] = static_cast<float>(acc[1]);
      dst[2] = static_cast<float>(acc[2]);
    }
  }

  RasterImage out(width, height);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (int i = -k; i <= k; ++i) {
        const int sy = std::clamp(y + i, 0, height - 1);
        const float* src = &tmp[image.index(x, sy) * 3];
        const double wi = w[static_cast<std::size_t>(i + k)];
        acc[0] += wi * src[0];
        acc[1] += wi * src[1];
        acc[2] += wi * src[2];
      }
      auto q = [](double v) {
        return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      };
      out(x, y) = Rgb{q(acc[0]), q(acc[1]), q(acc[2])};
    }
  }
  return out;
}

RasterImage blur_within(const RasterImage& image, const BinaryMask& mask, int half_width,
                        double sigma) {
  if (!same_dims(image, mask)) throw PreconditionError("blur_within: mask dimensions differ");
  (void)gaussian_kernel_1d(half_width, sigma);  // parameter validation

  BBox box{image.width(), image.height(), -1, -1};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y) == 0) continue;
      box.x_min = std::min(box.x_min, x);
      box.y_min = std::min(box.y_min, y);
      box.x_max = std::max(box.x_max, x);
      box.y_max = std::max(box.y_max, y);
    }
  }
  RasterImage out = image;
  if (!box.valid()) return out;

  // Blurring a window padded by the kernel half-width reproduces the
  // whole-image result for every pixel of the box: interior sides see the
  // same neighbours and clamped sides coincide with the image border.
  const BBox window{std::max(0, box.x_min - half_width), std::max(0, box.y_min - half_width),
                    std::min(image.width() - 1, box.x_max + half_width),
                    std::min(image.height() - 1, box.y_max + half_width)};
  RasterImage crop(window.width(), window.height());
  for (int y = 0; y < crop.height(); ++y) {
    for (int x = 0; x < crop.width(); ++x) crop(x, y) = image(window.x_min + x, window.y_min + y);
  }
  const RasterImage blurred = gaussian_blur(crop, half_width, sigma);
  for (int y = box.y_min; y <= box.y_max; ++y) {
    for (int x = box.x_min; x <= box.x_max; ++x) {
      if (mask(x, y) != 0) out(x, y) = blurred(x - window.x_min, y - window.y_min);
    }
  }
  return out;
}

}  // namespace rebarscan
