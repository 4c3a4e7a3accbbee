#include "rebarscan/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <utility>

#include "rebarscan/colorfilter.hpp"

namespace rebarscan {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string numbered(const std::string& prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", n);
  return prefix + buf;
}

SegmentationRequest single_prompt(std::string id, int x, int y) {
  return SegmentationRequest{std::move(id), {PointPrompt{x, y, PromptLabel::Foreground}}};
}

struct StageOutcome {
  std::vector<Region> regions;
  std::size_t requests = 0;
};

// Runs single-region requests: every request yields at most one region, the
// thresholded component containing the request's first foreground prompt.
StageOutcome execute(SegmentationSession& session, const std::vector<SegmentationRequest>& requests,
                     Stage stage, const PipelineConfig& config) {
  StageOutcome outcome;
  BinaryMask covered(session.width(), session.height(), 0);
  for (const SegmentationRequest& request : requests) {
    const auto anchor = std::find_if(request.prompts.begin(), request.prompts.end(),
                                     [](const PointPrompt& p) {
                                       return p.label == PromptLabel::Foreground;
                                     });
    if (anchor == request.prompts.end()) validate_request(request, covered.width(), covered.height());
    if (config.skip_covered_prompts && covered.contains(anchor->x, anchor->y) &&
        covered(anchor->x, anchor->y) != 0) {
      continue;
    }
    const ConfidenceMap conf = session.segment(request);
    ++outcome.requests;
    const double tau = config.tau_mode == TauMode::Adaptive ? adaptive_tau(conf) : config.tau_fixed;
    std::optional<Region> region = component_at(threshold_mask(conf, tau), anchor->x, anchor->y);
    if (!region) continue;
    paint(covered, *region);
    region->mean_confidence = mean_over(conf, *region);
    region->stage = stage;
    outcome.regions.push_back(std::move(*region));
  }
  return outcome;
}

std::vector<Region> area_filter(std::vector<Region> regions, const PipelineConfig& config) {
  if (config.shape_filter_all_stages) return shape_filter(std::move(regions), config);
  std::erase_if(regions, [&](const Region& r) {
    return r.area < config.area_min || r.area > config.area_max;
  });
  return regions;
}

std::vector<Point2D> centroids_of(std::span<const Region> regions) {
  std::vector<Point2D> out;
  out.reserve(regions.size());
  for (const Region& r : regions) out.push_back(r.centroid);
  return out;
}

// Parameter interval [t0, t1] over which origin + t*dir stays inside
// [0, limit] along one axis. Empty intervals come back with t0 > t1.
void clip_axis(double origin, double dir, double limit, double& t0, double& t1) {
  if (std::abs(dir) < 1e-12) {
    if (origin < 0.0 || origin > limit) {
      t0 = 1.0;
      t1 = 0.0;
    }
    return;
  }
  double a = (0.0 - origin) / dir;
  double b = (limit - origin) / dir;
  if (a > b) std::swap(a, b);
  t0 = std::max(t0, a);
  t1 = std::min(t1, b);
}

}  // namespace

void PipelineConfig::validate() const {
  if (auto_grid_side < 1) throw PreconditionError("pipeline config: auto_grid_side must be >= 1");
  for (int side : dense_grid_sides) {
    if (side < 1) throw PreconditionError("pipeline config: dense grid sides must be >= 1");
  }
  if (dense_medium_area < 0 || dense_large_area < dense_medium_area) {
    throw PreconditionError("pipeline config: dense grid area thresholds out of order");
  }
  if (area_min < 1 || area_max < area_min) {
    throw PreconditionError("pipeline config: need 1 <= area_min <= area_max");
  }
  if (!(aspect_min >= 1.0)) throw PreconditionError("pipeline config: aspect_min must be >= 1");
  if (!(overlap_dedup_threshold > 0.0 && overlap_dedup_threshold <= 1.0)) {
    throw PreconditionError("pipeline config: overlap_dedup_threshold must be in (0,1]");
  }
  if (!(pattern.eps > 0.0) || pattern.min_pts < 1 || !(pattern.angle_tol_deg > 0.0)) {
    throw PreconditionError("pipeline config: invalid pattern parameters");
  }
  if (!(tau_fixed >= 0.0 && tau_fixed <= 1.0)) {
    throw PreconditionError("pipeline config: tau_fixed must be in [0,1]");
  }
  if (!(online_skip_radius_px >= 0.0)) {
    throw PreconditionError("pipeline config: online_skip_radius_px must be >= 0");
  }
}

std::vector<SegmentationRequest> stage1_auto_prompts(const RasterImage& image,
                                                     const PipelineConfig& config) {
  const int n = config.auto_grid_side;
  if (n < 1) throw PreconditionError("auto prompts: grid side must be >= 1");
  if (image.width() < n || image.height() < n) {
    throw PreconditionError("auto prompts: image smaller than the prompt grid");
  }
  std::vector<SegmentationRequest> requests;
  requests.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const int y = static_cast<int>((j + 0.5) * image.height() / n);
    for (int i = 0; i < n; ++i) {
      const int x = static_cast<int>((i + 0.5) * image.width() / n);
      requests.push_back(single_prompt(numbered("auto-", requests.size()), x, y));
    }
  }
  return requests;
}

int dense_grid_side(long long bbox_area, const PipelineConfig& config) {
  if (bbox_area < config.dense_medium_area) return config.dense_grid_sides[0];
  if (bbox_area <= config.dense_large_area) return config.dense_grid_sides[1];
  return config.dense_grid_sides[2];
}

std::vector<SegmentationRequest> stage2_hsv_prompts(const RasterImage& image,
                                                    const PipelineConfig& config) {
  if (image.empty()) throw PreconditionError("hsv prompts: empty image");
  const std::vector<Region> candidates = connected_components(hsv_filter(image, rust_range()));
  std::vector<SegmentationRequest> requests;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Region& cand = candidates[c];
    const int side = dense_grid_side(cand.bbox.area(), config);
    const int bw = cand.bbox.width();
    const int bh = cand.bbox.height();
    std::set<std::pair<int, int>> seen;
    std::size_t k = 0;
    for (int j = 0; j < side; ++j) {
      const int y = cand.bbox.y_min + static_cast<int>((j + 0.5) * bh / side);
      for (int i = 0; i < side; ++i) {
        const int x = cand.bbox.x_min + static_cast<int>((i + 0.5) * bw / side);
        if (!cand.covers(x, y) || !seen.emplace(x, y).second) continue;
        requests.push_back(single_prompt(numbered(numbered("hsv-", c) + "-", k++), x, y));
      }
    }
  }
  return requests;
}

std::vector<Region> shape_filter(std::vector<Region> regions, const PipelineConfig& config) {
  std::erase_if(regions, [&](const Region& r) {
    return r.aspect_ratio < config.aspect_min || r.area < config.area_min ||
           r.area > config.area_max;
  });
  return regions;
}

std::vector<SegmentationRequest> stage3_pattern_prompts(const RebarPattern& pattern, int width,
                                                        int height,
                                                        std::span<const Point2D> existing_centroids,
                                                        const PipelineConfig& config) {
  if (!pattern.parallel || pattern.group_offsets.size() < 2) {
    throw PreconditionError("pattern prompts: need a parallel group of at least two lines");
  }
  if (!(pattern.mean_spacing_px > 0.0)) {
    throw PreconditionError("pattern prompts: spacing must be > 0");
  }
  if (width < 1 || height < 1) throw PreconditionError("pattern prompts: empty frame");

  const double rad = pattern.mean_angle_deg * std::acos(-1.0) / 180.0;
  const Point2D u{std::cos(rad), std::sin(rad)};
  const Point2D nrm{-std::sin(rad), std::cos(rad)};
  const double step = pattern.mean_spacing_px / 2.0;
  const double skip2 = config.online_skip_radius_px * config.online_skip_radius_px;

  std::vector<SegmentationRequest> requests;
  std::set<std::pair<int, int>> seen;
  std::size_t online = 0, between = 0, outside = 0;

  auto sample = [&](double offset, const char* kind, std::size_t& counter, bool skip_near) {
    const Point2D origin{nrm.x * offset, nrm.y * offset};
    double t0 = -1e18, t1 = 1e18;
    clip_axis(origin.x, u.x, width - 1, t0, t1);
    clip_axis(origin.y, u.y, height - 1, t0, t1);
    if (t0 > t1) return;
    const auto count = static_cast<long long>(std::floor((t1 - t0) / step)) + 1;
    const double start = t0 + ((t1 - t0) - static_cast<double>(count - 1) * step) / 2.0;
    for (long long s = 0; s < count; ++s) {
      const double t = start + static_cast<double>(s) * step;
      const int x = static_cast<int>(std::lround(origin.x + u.x * t));
      const int y = static_cast<int>(std::lround(origin.y + u.y * t));
      if (x < 0 || y < 0 || x >= width || y >= height) continue;
      if (skip_near) {
        const bool near = std::any_of(existing_centroids.begin(), existing_centroids.end(),
                                      [&](const Point2D& c) {
                                        const double dx = c.x - x, dy = c.y - y;
                                        return dx * dx + dy * dy <= skip2;
                                      });
        if (near) continue;
      }
      if (!seen.emplace(x, y).second) continue;
      requests.push_back(single_prompt(numbered(std::string("pattern-") + kind + "-", counter++), x, y));
    }
  };

  const std::vector<double>& offs = pattern.group_offsets;
  for (double o : offs) sample(o, "online", online, true);
  for (std::size_t i = 0; i + 1 < offs.size(); ++i) {
    sample((offs[i] + offs[i + 1]) / 2.0, "between", between, false);
  }
  sample(offs.front() - pattern.mean_spacing_px, "outside", outside, false);
  sample(offs.back() + pattern.mean_spacing_px, "outside", outside, false);
  return requests;
}

std::vector<Region> dedup(std::vector<Region> regions, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw PreconditionError("dedup: threshold must be in (0,1]");
  }
  std::vector<std::size_t> order(regions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Region& ra = regions[a];
    const Region& rb = regions[b];
    if (ra.mean_confidence != rb.mean_confidence) return ra.mean_confidence > rb.mean_confidence;
    if (ra.area != rb.area) return ra.area > rb.area;
    if (ra.id != rb.id) return ra.id < rb.id;
    return a < b;
  });
  std::vector<char> keep(regions.size(), 0);
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    const Region& r = regions[i];
    bool redundant = false;
    for (std::size_t k : kept) {
      const double frac =
          static_cast<double>(overlap_area(r, regions[k])) / static_cast<double>(r.area);
      if (frac >= threshold) {
        redundant = true;
        break;
      }
    }
    if (redundant) continue;
    keep[i] = 1;
    kept.push_back(i);
  }
  std::vector<Region> out;
  out.reserve(kept.size());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (keep[i] != 0) out.push_back(std::move(regions[i]));
  }
  return out;
}

PipelineResult run_pipeline(const RasterImage& image, const SegmentationBackend& backend,
                            const PipelineConfig& config, const PrivacyConfig& privacy) {
  config.validate();
  privacy.validate();
  if (image.empty()) throw PreconditionError("pipeline: empty image");
  const auto t_total = Clock::now();

  PipelineResult result;
  DetectionReport& report = result.report;
  report.width = image.width();
  report.height = image.height();

  std::unique_ptr<SegmentationSession> session = backend.open(image);
  std::vector<Region> all;
  int next_id = 0;
  auto absorb = [&](std::vector<Region> found, StageSummary& summary) {
    summary.regions_found = found.size();
    for (Region& r : found) {
      r.id = next_id++;
      all.push_back(std::move(r));
    }
    summary.cumulative_regions = dedup(all, config.overlap_dedup_threshold).size();
  };

  // Stage 1: auto grid
  {
    const auto t0 = Clock::now();
    StageSummary s{std::string(to_string(Stage::Auto))};
    const auto requests = stage1_auto_prompts(image, config);
    s.prompts = requests.size();
    StageOutcome out = execute(*session, requests, Stage::Auto, config);
    s.requests = out.requests;
    s.executed = true;
    absorb(area_filter(std::move(out.regions), config), s);
    s.ms = ms_since(t0);
    report.stages.push_back(s);
  }

  // Stage 2: HSV-guided dense grids
  {
    const auto t0 = Clock::now();
    StageSummary s{std::string(to_string(Stage::HsvGrid))};
    const auto requests = stage2_hsv_prompts(image, config);
    s.prompts = requests.size();
    StageOutcome out = execute(*session, requests, Stage::HsvGrid, config);
    s.requests = out.requests;
    s.executed = true;
    absorb(shape_filter(std::move(out.regions), config), s);
    s.ms = ms_since(t0);
    report.stages.push_back(s);
  }

  // Stage 3: pattern-predicted prompts
  {
    const auto t0 = Clock::now();
    StageSummary s{std::string(to_string(Stage::Pattern))};
    const std::vector<Region> so_far = dedup(all, config.overlap_dedup_threshold);
    const std::vector<Point2D> centroids = centroids_of(so_far);
    report.pattern = detect_pattern(centroids, config.pattern);
    if (report.pattern.parallel) {
      const auto requests =
          stage3_pattern_prompts(report.pattern, image.width(), image.height(), centroids, config);
      s.prompts = requests.size();
      StageOutcome out = execute(*session, requests, Stage::Pattern, config);
      s.requests = out.requests;
      s.executed = true;
      absorb(area_filter(std::move(out.regions), config), s);
    } else {
      s.cumulative_regions = so_far.size();
    }
    s.ms = ms_since(t0);
    report.stages.push_back(s);
  }

  report.regions_before_dedup = all.size();
  report.regions = dedup(std::move(all), config.overlap_dedup_threshold);
  for (std::size_t i = 0; i < report.regions.size(); ++i) {
    report.regions[i].id = static_cast<int>(i);
  }

  // Privacy
  {
    const auto t0 = Clock::now();
    PrivacyActions& actions = report.privacy;
    actions.signs = detect_signboards(image, *session, privacy);
    actions.kernel_half_width = privacy.kernel_half_width;
    actions.sigma = privacy.sigma;
    actions.k = privacy.k;
    result.anonymized = anonymize(image, actions.signs, privacy.kernel_half_width, privacy.sigma);
    for (SignRegion& s : actions.signs) s.blurred = true;
    std::vector<Point2D> locations;
    for (const SignRegion& s : actions.signs) locations.push_back(s.region.centroid);
    actions.cells = k_anonymize_locations(locations, privacy.cell_px, privacy.k);
    report.privacy_ms = ms_since(t0);
  }

  report.total_ms = ms_since(t_total);
  return result;
}

}  // namespace rebarscan
