#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rebarscan/errors.hpp"

namespace rebarscan {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Hue on the 8-bit half-degree scale [0,179]; saturation and value on [0,255].
struct HsvPixel {
  std::uint8_t h = 0;
  std::uint8_t s = 0;
  std::uint8_t v = 0;
  friend bool operator==(const HsvPixel&, const HsvPixel&) = default;
};

struct Point2D {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2D&, const Point2D&) = default;
};

/// Row-major pixel grid. A default-constructed grid is empty (0x0); every
/// other grid has width, height >= 1.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    check_dims(width, height);
    values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  Grid(int width, int height, std::vector<T> values)
      : width_(width), height_(height), values_(std::move(values)) {
    check_dims(width, height);
    if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw PreconditionError("grid: value count does not match width*height");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  T& operator()(int x, int y) noexcept { return values_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return values_[index(x, y)]; }

  T& at(int x, int y) {
    if (!contains(x, y)) throw PreconditionError("grid: coordinate out of bounds");
    return values_[index(x, y)];
  }
  const T& at(int x, int y) const {
    if (!contains(x, y)) throw PreconditionError("grid: coordinate out of bounds");
    return values_[index(x, y)];
  }

  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static void check_dims(int width, int height) {
    if (width < 1 || height < 1) throw PreconditionError("grid: width and height must be >= 1");
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
};

template <typename A, typename B>
bool same_dims(const Grid<A>& a, const Grid<B>& b) noexcept {
  return a.width() == b.width() && a.height() == b.height();
}

using RasterImage = Grid<Rgb>;
using HsvImage = Grid<HsvPixel>;
/// Per-pixel segmentation confidence in [0,1].
using ConfidenceMap = Grid<float>;
/// Membership grid; every cell holds 0 or 1.
using BinaryMask = Grid<std::uint8_t>;

std::size_t popcount(const BinaryMask& mask);

/// Throws PreconditionError unless every value lies in [0,1] (NaN rejected).
void validate_confidence(const ConfidenceMap& conf);

/// Inclusive pixel rectangle.
struct BBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = -1;
  int y_max = -1;

  int width() const noexcept { return x_max - x_min + 1; }
  int height() const noexcept { return y_max - y_min + 1; }
  long long area() const noexcept {
    return valid() ? static_cast<long long>(width()) * height() : 0;
  }
  bool valid() const noexcept { return x_max >= x_min && y_max >= y_min; }
  bool contains(int x, int y) const noexcept {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  friend bool operator==(const BBox&, const BBox&) = default;
};

BBox intersect(const BBox& a, const BBox& b) noexcept;

enum class Stage { Auto, HsvGrid, Pattern };

std::string_view to_string(Stage stage) noexcept;

enum class Connectivity { Four, Eight };

/// A connected set of pixels inside a frame. The mask is stored cropped to
/// the bounding box; `full_mask()` materializes the frame-sized version.
struct Region {
  int id = 0;
  int frame_width = 0;
  int frame_height = 0;
  BBox bbox;
  BinaryMask mask;
  long long area = 0;
  Point2D centroid;
  double aspect_ratio = 1.0;
  double mean_confidence = 0.0;
  std::optional<Stage> stage;

  bool covers(int x, int y) const noexcept {
    return bbox.contains(x, y) && mask(x - bbox.x_min, y - bbox.y_min) != 0;
  }

  BinaryMask full_mask() const;
};

/// Builds a region from linear pixel indices into a `frame_width` x
/// `frame_height` frame. Indices must be distinct and non-empty.
Region region_from_pixels(std::span<const std::size_t> pixels, int frame_width, int frame_height);

/// Labels maximal connected sets of true pixels. Regions are numbered in
/// raster order of their first pixel.
std::vector<Region> connected_components(const BinaryMask& mask,
                                         Connectivity connectivity = Connectivity::Eight);

/// The component containing (x, y), or nullopt when that pixel is false.
/// Throws PreconditionError when (x, y) is outside the mask.
std::optional<Region> component_at(const BinaryMask& mask, int x, int y,
                                   Connectivity connectivity = Connectivity::Eight);

/// Number of pixels covered by both regions.
long long overlap_area(const Region& a, const Region& b);

/// Sets every pixel of `region` to 1 in a frame-sized mask.
void paint(BinaryMask& frame_mask, const Region& region);

/// Mean of `conf` over the region's pixels.
double mean_over(const ConfidenceMap& conf, const Region& region);

// Color conversion -----------------------------------------------------------

HsvPixel rgb_to_hsv(Rgb rgb) noexcept;
Rgb hsv_to_rgb(HsvPixel hsv) noexcept;

HsvImage rgb_to_hsv(const RasterImage& image);

// Gaussian blur --------------------------------------------------------------

/// Kernel half-width used for privacy blurring (51x51 footprint).
inline constexpr int kPrivacyBlurHalfWidth = 25;

/// sigma = k/3 so that the footprint covers +-3 sigma.
inline constexpr double default_blur_sigma(int half_width) noexcept {
  return static_cast<double>(half_width) / 3.0;
}

/// Normalized 1D Gaussian weights, 2k+1 taps. The 2D kernel is the outer
/// product of this vector with itself.
std::vector<double> gaussian_kernel_1d(int half_width, double sigma);

/// Gaussian blur with clamp-to-edge borders; separable, parallel over rows.
RasterImage gaussian_blur(const RasterImage& image, int half_width, double sigma);

/// Pixels under `mask` take the whole-image blur value; all others are
/// copied unchanged.
RasterImage blur_within(const RasterImage& image, const BinaryMask& mask, int half_width,
                        double sigma);

}  // namespace rebarscan
