#pragma once

#include <cstddef>
#include <string>

#include <json.hpp>

#include "rebarscan/eval.hpp"
#include "rebarscan/pipeline.hpp"
#include "rebarscan/privacy.hpp"

namespace rebarscan {

using Json = nlohmann::ordered_json;

Json bbox_json(const BBox& bbox);
Json region_json(const Region& region);
Json pattern_json(const RebarPattern& pattern);
Json privacy_json(const PrivacyActions& actions, double cell_px);
Json scores_json(const PrfScores& scores, const ConfusionCounts& counts);
Json metrics_json(const ReportMetrics& metrics);
Json report_json(const DetectionReport& report, double cell_px);

/// Published cells and suppressed count for one batch.
Json k_anonymity_json(const KAnonymity& cells, std::size_t k, double cell_px, std::size_t images,
                      std::size_t signs);

/// Copy with every "ms"-suffixed key and the "timings" object removed.
Json strip_timings(const Json& report);

/// Pretty-printed with a trailing newline; key order is stable.
std::string dump(const Json& json);

}  // namespace rebarscan
