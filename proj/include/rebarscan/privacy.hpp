#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rebarscan/colorfilter.hpp"
#include "rebarscan/raster.hpp"
#include "rebarscan/segbackend.hpp"

namespace rebarscan {

struct PrivacyConfig {
  HsvRange white_range = white_signboard_range();
  long long min_sign_area = 400;
  double min_rectangularity = 0.6;
  int kernel_half_width = kPrivacyBlurHalfWidth;
  double sigma = default_blur_sigma(kPrivacyBlurHalfWidth);
  std::size_t k = 3;
  double cell_px = 128.0;

  void validate() const;
};

struct SignRegion {
  Region region;
  /// area / bbox area, in (0,1].
  double rectangularity = 0.0;
  bool blurred = false;
  /// Output of the external OCR command, when one is configured.
  std::optional<std::string> text;
};

struct PublishedCell {
  long long cell_x = 0;
  long long cell_y = 0;
  std::size_t count = 0;
  friend bool operator==(const PublishedCell&, const PublishedCell&) = default;
};

struct KAnonymity {
  /// Cells with occupancy >= k, sorted by (cell_x, cell_y).
  std::vector<PublishedCell> published;
  /// Number of occupied cells with occupancy < k.
  std::size_t suppressed_cells = 0;
};

struct PrivacyActions {
  std::vector<SignRegion> signs;
  int kernel_half_width = kPrivacyBlurHalfWidth;
  double sigma = default_blur_sigma(kPrivacyBlurHalfWidth);
  std::size_t k = 3;
  KAnonymity cells;
};

double rectangularity(const Region& region) noexcept;

/// White-range candidates that pass the area and rectangularity gates,
/// each refined by one foreground prompt at the candidate pixel nearest
/// its centroid. Falls back to the raw component if the refined mask does
/// not contain the prompt.
std::vector<SignRegion> detect_signboards(const RasterImage& image, SegmentationSession& session,
                                          const PrivacyConfig& config);
std::vector<SignRegion> detect_signboards(const RasterImage& image,
                                          const SegmentationBackend& backend,
                                          const PrivacyConfig& config);

/// Frame mask covering the union of the signs' bounding boxes.
BinaryMask sign_bbox_mask(int width, int height, std::span<const SignRegion> signs);

/// Blurs the union of sign bounding boxes; every other pixel is untouched.
RasterImage anonymize(const RasterImage& image, std::span<const SignRegion> signs,
                      int kernel_half_width = kPrivacyBlurHalfWidth,
                      double sigma = default_blur_sigma(kPrivacyBlurHalfWidth));

/// Quantizes points to a cell_px grid and publishes only cells holding at
/// least k points.
KAnonymity k_anonymize_locations(std::span<const Point2D> points, double cell_px, std::size_t k);

// OCR preprocessing --------------------------------------------------------------

enum class OcrMethod { Binarize, ContrastStretch, Denoise, Deskew };

std::string_view to_string(OcrMethod method) noexcept;
/// Inverse of to_string; throws PreconditionError on an unknown name.
OcrMethod parse_ocr_method(std::string_view name);

/// Crops `region` out of `image` and conditions it for text recognition.
/// Throws PreconditionError when the box is not inside the image.
RasterImage ocr_preprocess(const RasterImage& image, const BBox& region, OcrMethod method);

/// Orientation in degrees, (-90, 90], of the dark text in `crop`: the
/// total-least-squares line through all dark (below Otsu) pixels. Returns
/// 0 when there is not enough dark content.
double dominant_text_angle(const RasterImage& crop);

/// Rotates about the image centre by `degrees` (image axes, y down, so
/// positive turns +x toward +y). Bilinear, clamp-to-edge, same size.
RasterImage rotate_image(const RasterImage& image, double degrees);

}  // namespace rebarscan
