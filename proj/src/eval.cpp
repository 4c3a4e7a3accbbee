#include "rebarscan/eval.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "rebarscan/pipeline.hpp"

namespace rebarscan {

PrfScores f1(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.fn < 0) throw PreconditionError("f1: negative count");
  if (c.tp + c.fp + c.fn == 0) throw PreconditionError("f1: all counts are zero");
  PrfScores s;
  const auto tp = static_cast<double>(c.tp);
  if (c.tp + c.fp > 0) s.precision = tp / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) s.recall = tp / static_cast<double>(c.tp + c.fn);
  if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

PrfScores scores_or_perfect(const ConfusionCounts& counts) {
  if (counts.tp + counts.fp + counts.fn == 0) return PrfScores{1.0, 1.0, 1.0};
  return f1(counts);
}

ConfusionCounts pixel_confusion(const BinaryMask& pred, const BinaryMask& truth) {
  if (!same_dims(pred, truth)) throw PreconditionError("pixel_confusion: dimension mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
  }
  return c;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  if (!same_dims(a, b)) throw PreconditionError("iou: dimension mismatch");
  long long inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0;
    const bool y = b[i] != 0;
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double region_iou(const Region& a, const Region& b) {
  if (a.frame_width != b.frame_width || a.frame_height != b.frame_height) {
    throw PreconditionError("region_iou: regions from different frames");
  }
  const long long inter = overlap_area(a, b);
  const long long uni = a.area + b.area - inter;
  return uni <= 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

ConfusionCounts match_regions(std::span<const Region> predicted, std::span<const Region> truth,
                              double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw PreconditionError("match_regions: IoU threshold must be in (0,1]");
  }
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (!intersect(predicted[i].bbox, truth[j].bbox).valid()) continue;
      const double v = region_iou(predicted[i], truth[j]);
      if (v >= iou_threshold) pairs.emplace_back(v, i, j);
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
  });
  std::vector<char> used_p(predicted.size(), 0), used_t(truth.size(), 0);
  ConfusionCounts c;
  for (const auto& [v, i, j] : pairs) {
    if (used_p[i] != 0 || used_t[j] != 0) continue;
    used_p[i] = used_t[j] = 1;
    ++c.tp;
  }
  c.fp = static_cast<long long>(predicted.size()) - c.tp;
  c.fn = static_cast<long long>(truth.size()) - c.tp;
  return c;
}

ReportMetrics score_report(const DetectionReport& report, const BinaryMask& truth,
                           double iou_threshold) {
  if (truth.width() != report.width || truth.height() != report.height) {
    throw PreconditionError("score_report: truth mask size differs from the image");
  }
  BinaryMask predicted(truth.width(), truth.height(), 0);
  for (const Region& r : report.regions) paint(predicted, r);

  ReportMetrics m;
  m.iou_threshold = iou_threshold;
  m.pixel_counts = pixel_confusion(predicted, truth);
  m.pixel = scores_or_perfect(m.pixel_counts);
  const std::vector<Region> truth_regions = connected_components(truth);
  m.region_counts = match_regions(report.regions, truth_regions, iou_threshold);
  m.region = scores_or_perfect(m.region_counts);
  return m;
}

}  // namespace rebarscan
