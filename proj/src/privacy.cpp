#include "rebarscan/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace rebarscan {

void PrivacyConfig::validate() const {
  white_range.validate();
  if (min_sign_area < 1) throw PreconditionError("privacy config: min_sign_area must be >= 1");
  if (!(min_rectangularity >= 0.0 && min_rectangularity <= 1.0)) {
    throw PreconditionError("privacy config: min_rectangularity must be in [0,1]");
  }
  (void)gaussian_kernel_1d(kernel_half_width, sigma);
  if (k < 1) throw PreconditionError("privacy config: k must be >= 1");
  if (!(cell_px > 0.0)) throw PreconditionError("privacy config: cell_px must be > 0");
}

double rectangularity(const Region& region) noexcept {
  const long long box = region.bbox.area();
  return box > 0 ? static_cast<double>(region.area) / static_cast<double>(box) : 0.0;
}

namespace {

std::pair<int, int> nearest_pixel_to_centroid(const Region& region) {
  const int cx = static_cast<int>(std::lround(region.centroid.x));
  const int cy = static_cast<int>(std::lround(region.centroid.y));
  if (region.covers(cx, cy)) return {cx, cy};
  std::pair<int, int> best{region.bbox.x_min, region.bbox.y_min};
  double best_d = std::numeric_limits<double>::infinity();
  for (int y = region.bbox.y_min; y <= region.bbox.y_max; ++y) {
    for (int x = region.bbox.x_min; x <= region.bbox.x_max; ++x) {
      if (!region.covers(x, y)) continue;
      const double dx = x - region.centroid.x;
      const double dy = y - region.centroid.y;
      const double d = dx * dx + dy * dy;
      if (d < best_d) {
        best_d = d;
        best = {x, y};
      }
    }
  }
  return best;
}

}  // namespace

std::vector<SignRegion> detect_signboards(const RasterImage& image, SegmentationSession& session,
                                          const PrivacyConfig& config) {
  config.validate();
  if (image.empty()) return {};
  if (image.width() != session.width() || image.height() != session.height()) {
    throw PreconditionError("detect_signboards: session bound to a different image size");
  }
  std::vector<SignRegion> signs;
  int n = 0;
  for (Region& cand : connected_components(hsv_filter(image, config.white_range))) {
    if (cand.area < config.min_sign_area) continue;
    if (rectangularity(cand) < config.min_rectangularity) continue;

    const auto [px, py] = nearest_pixel_to_centroid(cand);
    const SegmentationRequest request{"sign-" + std::to_string(n),
                                      {PointPrompt{px, py, PromptLabel::Foreground}}};
    const ConfidenceMap conf = session.segment(request);
    std::optional<Region> refined = component_at(threshold_mask(conf, adaptive_tau(conf)), px, py);
    Region chosen = refined ? std::move(*refined) : std::move(cand);
    chosen.mean_confidence = mean_over(conf, chosen);
    chosen.id = n++;
    const double rect = rectangularity(chosen);
    signs.push_back(SignRegion{std::move(chosen), rect, false, std::nullopt});
  }
  return signs;
}

std::vector<SignRegion> detect_signboards(const RasterImage& image,
                                          const SegmentationBackend& backend,
                                          const PrivacyConfig& config) {
  if (image.empty()) return {};
  return detect_signboards(image, *backend.open(image), config);
}

BinaryMask sign_bbox_mask(int width, int height, std::span<const SignRegion> signs) {
  BinaryMask mask(width, height, 0);
  for (const SignRegion& s : signs) {
    if (s.region.frame_width != width || s.region.frame_height != height) {
      throw PreconditionError("sign region belongs to a different frame");
    }
    const BBox b = intersect(s.region.bbox, BBox{0, 0, width - 1, height - 1});
    if (!b.valid()) continue;
    for (int y = b.y_min; y <= b.y_max; ++y) {
      for (int x = b.x_min; x <= b.x_max; ++x) mask(x, y) = 1;
    }
  }
  return mask;
}

RasterImage anonymize(const RasterImage& image, std::span<const SignRegion> signs,
                      int kernel_half_width, double sigma) {
  (void)gaussian_kernel_1d(kernel_half_width, sigma);
  if (image.empty() || signs.empty()) return image;
  return blur_within(image, sign_bbox_mask(image.width(), image.height(), signs),
                     kernel_half_width, sigma);
}

KAnonymity k_anonymize_locations(std::span<const Point2D> points, double cell_px, std::size_t k) {
  if (!(cell_px > 0.0)) throw PreconditionError("k-anonymity: cell size must be > 0");
  if (k < 1) throw PreconditionError("k-anonymity: k must be >= 1");
  std::map<std::pair<long long, long long>, std::size_t> cells;
  for (const Point2D& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw PreconditionError("k-anonymity: non-finite location");
    }
    ++cells[{static_cast<long long>(std::floor(p.x / cell_px)),
             static_cast<long long>(std::floor(p.y / cell_px))}];
  }
  KAnonymity out;
  for (const auto& [cell, count] : cells) {
    if (count >= k) {
      out.published.push_back(PublishedCell{cell.first, cell.second, count});
    } else {
      ++out.suppressed_cells;
    }
  }
  return out;
}

}  // namespace rebarscan
