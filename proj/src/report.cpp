#include "rebarscan/report.hpp"

#include <string_view>

namespace rebarscan {

Json bbox_json(const BBox& bbox) {
  return Json::array({bbox.x_min, bbox.y_min, bbox.x_max, bbox.y_max});
}

Json region_json(const Region& region) {
  Json j;
  j["id"] = region.id;
  j["stage"] = region.stage ? Json(std::string(to_string(*region.stage))) : Json(nullptr);
  j["bbox"] = bbox_json(region.bbox);
  j["area"] = region.area;
  j["aspect_ratio"] = region.aspect_ratio;
  j["centroid"] = Json::array({region.centroid.x, region.centroid.y});
  j["mean_confidence"] = region.mean_confidence;
  return j;
}

Json pattern_json(const RebarPattern& pattern) {
  Json j;
  j["parallel"] = pattern.parallel;
  Json lines = Json::array();
  for (const FittedLine& line : pattern.lines) {
    lines.push_back({{"angle_deg", line.angle_deg},
                     {"distance_origin", line.distance_origin},
                     {"members", line.inliers.size()},
                     {"rms_residual", line.rms_residual}});
  }
  j["lines"] = std::move(lines);
  j["group"] = pattern.group;
  j["mean_spacing_px"] = pattern.mean_spacing_px;
  j["mean_angle_deg"] = pattern.mean_angle_deg;
  return j;
}

Json privacy_json(const PrivacyActions& actions, double cell_px) {
  Json j;
  Json signs = Json::array();
  for (const SignRegion& s : actions.signs) {
    Json sign{{"bbox", bbox_json(s.region.bbox)},
              {"area", s.region.area},
              {"rectangularity", s.rectangularity},
              {"blurred", s.blurred}};
    if (s.text) sign["text"] = *s.text;
    signs.push_back(std::move(sign));
  }
  j["signs"] = std::move(signs);
  j["kernel"] = Json::array({2 * actions.kernel_half_width + 1, actions.sigma});
  j["k"] = actions.k;
  j["cell_px"] = cell_px;
  Json cells = Json::array();
  for (const PublishedCell& c : actions.cells.published) {
    cells.push_back(Json::array({c.cell_x, c.cell_y, c.count}));
  }
  j["published_cells"] = std::move(cells);
  j["suppressed_cells"] = actions.cells.suppressed_cells;
  return j;
}

Json scores_json(const PrfScores& scores, const ConfusionCounts& counts) {
  return Json{{"precision", scores.precision}, {"recall", scores.recall}, {"f1", scores.f1},
              {"tp", counts.tp},               {"fp", counts.fp},         {"fn", counts.fn}};
}

Json metrics_json(const ReportMetrics& metrics) {
  Json j;
  j["pixel"] = scores_json(metrics.pixel, metrics.pixel_counts);
  j["region"] = scores_json(metrics.region, metrics.region_counts);
  j["region"]["iou_threshold"] = metrics.iou_threshold;
  return j;
}

Json report_json(const DetectionReport& report, double cell_px) {
  Json j;
  j["image"] = report.image;
  j["config_hash"] = report.config_hash;
  j["width"] = report.width;
  j["height"] = report.height;
  Json stages = Json::array();
  for (const StageSummary& s : report.stages) {
    stages.push_back({{"name", s.name},
                      {"executed", s.executed},
                      {"prompts", s.prompts},
                      {"requests", s.requests},
                      {"regions_found", s.regions_found},
                      {"cumulative_regions", s.cumulative_regions},
                      {"ms", s.ms}});
  }
  j["stages"] = std::move(stages);
  j["regions_before_dedup"] = report.regions_before_dedup;
  j["regions_after_dedup"] = report.regions.size();
  j["pattern"] = pattern_json(report.pattern);
  Json regions = Json::array();
  for (const Region& r : report.regions) regions.push_back(region_json(r));
  j["regions"] = std::move(regions);
  j["privacy"] = privacy_json(report.privacy, cell_px);
  j["metrics"] = report.metrics ? metrics_json(*report.metrics) : Json(nullptr);
  double stage_ms = 0.0;
  for (const StageSummary& s : report.stages) stage_ms += s.ms;
  j["timings"] = {{"stages_ms", stage_ms},
                  {"privacy_ms", report.privacy_ms},
                  {"total_ms", report.total_ms}};
  return j;
}

Json k_anonymity_json(const KAnonymity& cells, std::size_t k, double cell_px, std::size_t images,
                      std::size_t signs) {
  Json j;
  j["k"] = k;
  j["cell_px"] = cell_px;
  j["images"] = images;
  j["locations"] = signs;
  Json published = Json::array();
  for (const PublishedCell& c : cells.published) {
    published.push_back(Json::array({c.cell_x, c.cell_y, c.count}));
  }
  j["published_cells"] = std::move(published);
  j["suppressed_cells"] = cells.suppressed_cells;
  return j;
}

Json strip_timings(const Json& report) {
  if (report.is_array()) {
    Json out = Json::array();
    for (const Json& v : report) out.push_back(strip_timings(v));
    return out;
  }
  if (!report.is_object()) return report;
  Json out = Json::object();
  for (auto it = report.begin(); it != report.end(); ++it) {
    const std::string_view key = it.key();
    if (key == "timings" || key == "ms" || (key.size() > 3 && key.ends_with("_ms"))) continue;
    out[it.key()] = strip_timings(it.value());
  }
  return out;
}

std::string dump(const Json& json) {
  return json.dump(2, ' ', false, Json::error_handler_t::replace) + "\n";
}

}  // namespace rebarscan
