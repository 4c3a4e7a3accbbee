#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rebarscan/cluster.hpp"
#include "rebarscan/eval.hpp"
#include "rebarscan/privacy.hpp"
#include "rebarscan/raster.hpp"
#include "rebarscan/segbackend.hpp"

namespace rebarscan {

enum class TauMode { Adaptive, Fixed };

struct PipelineConfig {
  int auto_grid_side = 32;
  /// Dense grid sides for small / medium / large candidate boxes.
  std::array<int, 3> dense_grid_sides{5, 7, 9};
  /// Box-area thresholds (px^2) between the small/medium and medium/large grids.
  long long dense_medium_area = 1000;
  long long dense_large_area = 10000;
  long long area_min = 70;
  long long area_max = 2000;
  double aspect_min = 2.0;
  /// Apply the aspect test to every stage, not only the HSV-grid stage.
  bool shape_filter_all_stages = false;
  double overlap_dedup_threshold = 0.5;
  PatternParams pattern;
  TauMode tau_mode = TauMode::Adaptive;
  double tau_fixed = 0.5;
  double online_skip_radius_px = 10.0;
  /// Skip a prompt already covered by a mask returned earlier in the same stage.
  bool skip_covered_prompts = true;

  void validate() const;
};

/// One single-prompt request per cell centre of an n x n lattice.
std::vector<SegmentationRequest> stage1_auto_prompts(const RasterImage& image,
                                                     const PipelineConfig& config);

/// Grid side for a candidate box of the given area.
int dense_grid_side(long long bbox_area, const PipelineConfig& config);

/// Rust-range candidates, each seeded with a dense foreground grid over its
/// bounding box; grid points off the candidate are dropped.
std::vector<SegmentationRequest> stage2_hsv_prompts(const RasterImage& image,
                                                    const PipelineConfig& config);

/// Keeps regions with aspect_min <= aspect and area_min <= area <= area_max.
std::vector<Region> shape_filter(std::vector<Region> regions, const PipelineConfig& config);

/// Prompts on, between and one spacing outside the lines of the winning
/// parallel group, sampled every mean_spacing/2 and clipped to the frame.
/// On-line prompts within `online_skip_radius_px` of an existing centroid
/// are skipped. Request ids are prefixed "pattern-online-",
/// "pattern-between-" or "pattern-outside-".
std::vector<SegmentationRequest> stage3_pattern_prompts(const RebarPattern& pattern, int width,
                                                        int height,
                                                        std::span<const Point2D> existing_centroids,
                                                        const PipelineConfig& config);

/// Greedy removal in (mean_confidence desc, area desc, id asc) order: a
/// region goes when overlap with an already-kept region covers at least
/// `threshold` of its own area. Survivors keep their input order.
std::vector<Region> dedup(std::vector<Region> regions, double threshold);

struct StageSummary {
  std::string name;
  std::size_t prompts = 0;
  std::size_t requests = 0;
  std::size_t regions_found = 0;
  /// Distinct regions (after dedup) accumulated up to and including this stage.
  std::size_t cumulative_regions = 0;
  bool executed = false;
  double ms = 0.0;
};

struct DetectionReport {
  std::string image;
  std::string config_hash;
  int width = 0;
  int height = 0;
  std::vector<StageSummary> stages;
  std::size_t regions_before_dedup = 0;
  /// Final regions, ids renumbered 0..n-1 in creation order.
  std::vector<Region> regions;
  RebarPattern pattern;
  PrivacyActions privacy;
  std::optional<ReportMetrics> metrics;
  double privacy_ms = 0.0;
  double total_ms = 0.0;
};

struct PipelineResult {
  DetectionReport report;
  RasterImage anonymized;
};

/// Auto grid, HSV-guided dense grids, pattern analysis and (when >= 2
/// parallel lines exist) pattern-predicted prompts, then dedup and the
/// privacy phase, which runs regardless of the pattern outcome.
PipelineResult run_pipeline(const RasterImage& image, const SegmentationBackend& backend,
                            const PipelineConfig& config, const PrivacyConfig& privacy);

}  // namespace rebarscan
