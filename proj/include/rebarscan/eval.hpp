#pragma once

#include <cstdint>
#include <optional>

#include "rebarscan/raster.hpp"

namespace rebarscan {

struct DetectionReport;

struct ConfusionCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision, recall and F1. A zero denominator yields 0 for that score.
/// Throws PreconditionError when tp + fp + fn == 0.
PrfScores f1(const ConfusionCounts& counts);

ConfusionCounts pixel_confusion(const BinaryMask& pred, const BinaryMask& truth);

/// |a & b| / |a | b|, 0 for an empty union.
double iou(const BinaryMask& a, const BinaryMask& b);

/// IoU of two regions of the same frame, computed over their boxes.
double region_iou(const Region& a, const Region& b);

// Synthetic scenes ---------------------------------------------------------------

struct SceneSign {
  BBox bbox;
  std::uint64_t glyph_seed = 0;
};

/// Parallel rust stripes on grey concrete, optionally with a white sign.
/// Each stripe is a chain of rust segments (`segment_gap_px` = 0 renders a
/// continuous stripe).
struct SceneSpec {
  int width = 1024;
  int height = 768;
  int stripe_count = 3;
  double spacing_px = 133.0;
  double angle_deg = 0.35;
  double stripe_width_px = 8.0;
  double segment_length_px = 40.0;
  double segment_gap_px = 16.0;
  double margin_px = 40.0;
  HsvPixel rust_center{10, 110, 95};
  int background_gray = 128;
  std::optional<SceneSign> sign;
  double noise_sigma = 2.0;

  /// Throws PreconditionError on any violated invariant.
  void validate() const;
};

struct Scene {
  RasterImage image;
  BinaryMask rust_truth;
  std::optional<BBox> sign_bbox;
};

/// Deterministic per (spec, seed).
Scene generate_scene(const SceneSpec& spec, std::uint64_t seed);

// Report scoring -----------------------------------------------------------------

inline constexpr double kRegionMatchIou = 0.5;

struct ReportMetrics {
  ConfusionCounts pixel_counts;
  PrfScores pixel;
  ConfusionCounts region_counts;
  PrfScores region;
  double iou_threshold = kRegionMatchIou;
};

/// Scores, treating all-zero counts (nothing to find, nothing found) as a
/// perfect score instead of an error.
PrfScores scores_or_perfect(const ConfusionCounts& counts);

/// Greedy one-to-one matching by descending IoU; pairs below the threshold
/// never match.
ConfusionCounts match_regions(std::span<const Region> predicted, std::span<const Region> truth,
                              double iou_threshold = kRegionMatchIou);

/// Pixel-level confusion of the union of report regions against `truth`,
/// and region-level matching against the connected components of `truth`.
ReportMetrics score_report(const DetectionReport& report, const BinaryMask& truth,
                           double iou_threshold = kRegionMatchIou);

}  // namespace rebarscan
