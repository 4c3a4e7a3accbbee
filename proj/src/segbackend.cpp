#include "rebarscan/segbackend.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "otsu.hpp"

namespace rebarscan {

void validate_request(const SegmentationRequest& request, int width, int height) {
  if (request.request_id.empty()) throw PreconditionError("segmentation request: empty id");
  if (request.prompts.empty()) {
    throw PreconditionError("segmentation request " + request.request_id + ": no prompts");
  }
  bool has_foreground = false;
  for (const PointPrompt& p : request.prompts) {
    if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) {
      throw PreconditionError("segmentation request " + request.request_id +
                              ": prompt outside image");
    }
    has_foreground = has_foreground || p.label == PromptLabel::Foreground;
  }
  if (!has_foreground) {
    throw PreconditionError("segmentation request " + request.request_id +
                            ": no foreground prompt");
  }
}

ConfidenceMap SegmentationSession::segment(const SegmentationRequest& request) {
  validate_request(request, width_, height_);
  ConfidenceMap conf = run(request);
  if (conf.width() != width_ || conf.height() != height_) {
    throw BackendError(request.request_id, "confidence map dimensions do not match the image");
  }
  try {
    validate_confidence(conf);
  } catch (const PreconditionError&) {
    throw BackendError(request.request_id, "confidence value outside [0,1]");
  }
  return conf;
}

ConfidenceMap segment(const SegmentationBackend& backend, const RasterImage& image,
                      const SegmentationRequest& request) {
  return backend.open(image)->segment(request);
}

std::string prompt_label_wire(PromptLabel label) {
  return label == PromptLabel::Foreground ? "fg" : "bg";
}

// Reference backend -----------------------------------------------------------

namespace {

int squared_distance(HsvPixel a, HsvPixel b) noexcept {
  int dh = std::abs(static_cast<int>(a.h) - static_cast<int>(b.h));
  dh = std::min(dh, 180 - dh) * 2;
  const int ds = static_cast<int>(a.s) - static_cast<int>(b.s);
  const int dv = static_cast<int>(a.v) - static_cast<int>(b.v);
  return dh * dh + ds * ds + dv * dv;
}

constexpr int kMaxSquaredDistance = 180 * 180 + 2 * 255 * 255;

// exp(-d2 / (2 sigma^2)) for every integer d2.
std::vector<float> affinity_table(double sigma) {
  std::vector<float> table(kMaxSquaredDistance + 1);
  const double denom = 2.0 * sigma * sigma;
  for (int d2 = 0; d2 <= kMaxSquaredDistance; ++d2) {
    table[static_cast<std::size_t>(d2)] = static_cast<float>(std::exp(-d2 / denom));
  }
  return table;
}

void affinity_with_table(const HsvImage& hsv, std::span<const HsvPixel> colors,
                         const std::vector<float>& table, double sigma, ConfidenceMap& affinity,
                         BinaryMask& within) {
  affinity = ConfidenceMap(hsv.width(), hsv.height(), 0.0f);
  within = BinaryMask(hsv.width(), hsv.height(), 0);
  const double limit = 4.0 * sigma * sigma;
  const auto n = static_cast<std::ptrdiff_t>(hsv.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    int best = kMaxSquaredDistance;
    for (const HsvPixel& c : colors) best = std::min(best, squared_distance(hsv[idx], c));
    affinity[idx] = table[static_cast<std::size_t>(best)];
    within[idx] = best <= limit ? 1 : 0;
  }
}

// Marks every pixel reachable from `seeds` through pixels accepted by
// `pass` (8-connectivity). Seeds are marked unconditionally.
template <typename Pass>
void flood_mark(int width, int height, std::span<const std::size_t> seeds, Pass pass,
                std::vector<std::uint8_t>& marked) {
  marked.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
  std::vector<std::size_t> stack;
  for (std::size_t s : seeds) {
    if (marked[s] != 0) continue;
    marked[s] = 1;
    stack.push_back(s);
  }
  const auto w = static_cast<std::size_t>(width);
  while (!stack.empty()) {
    const std::size_t idx = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(idx % w);
    const int y = static_cast<int>(idx / w);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx;
        const int ny = y + dy;
        if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
        const std::size_t n = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
        if (marked[n] != 0 || !pass(n)) continue;
        marked[n] = 1;
        stack.push_back(n);
      }
    }
  }
}

ConfidenceMap reference_with_table(const HsvImage& hsv, std::span<const PointPrompt> prompts,
                                   const ReferenceParams& params,
                                   const std::vector<float>& table) {
  if (hsv.empty()) throw PreconditionError("reference_segment: empty image");
  std::vector<HsvPixel> fg_colors;
  std::vector<std::size_t> fg_seeds;
  for (const PointPrompt& p : prompts) {
    if (!hsv.contains(p.x, p.y)) throw PreconditionError("reference_segment: prompt outside image");
    if (p.label == PromptLabel::Foreground) {
      fg_colors.push_back(hsv(p.x, p.y));
      fg_seeds.push_back(hsv.index(p.x, p.y));
    }
  }
  if (fg_colors.empty()) throw PreconditionError("reference_segment: no foreground prompt");

  ConfidenceMap conf;
  BinaryMask within;
  affinity_with_table(hsv, fg_colors, table, params.sigma_c, conf, within);

  std::vector<std::uint8_t> reached;
  flood_mark(hsv.width(), hsv.height(), fg_seeds,
             [&](std::size_t n) { return within[n] != 0; }, reached);
  const auto factor = static_cast<float>(params.unreachable_factor);
  for (std::size_t i = 0; i < conf.size(); ++i) {
    if (reached[i] == 0) conf[i] *= factor;
  }

  const double limit = 4.0 * params.sigma_c * params.sigma_c;
  for (const PointPrompt& p : prompts) {
    if (p.label != PromptLabel::Background) continue;
    const HsvPixel color = hsv(p.x, p.y);
    const std::array<std::size_t, 1> seed{hsv.index(p.x, p.y)};
    flood_mark(hsv.width(), hsv.height(), seed,
               [&](std::size_t n) { return squared_distance(hsv[n], color) <= limit; }, reached);
    for (std::size_t i = 0; i < conf.size(); ++i) {
      if (reached[i] != 0) conf[i] = 0.0f;
    }
  }
  return conf;
}

class ReferenceSession final : public SegmentationSession {
 public:
  ReferenceSession(const RasterImage& image, ReferenceParams params)
      : SegmentationSession(image.width(), image.height()),
        hsv_(rgb_to_hsv(image)),
        params_(params),
        table_(affinity_table(params.sigma_c)) {}

 protected:
  ConfidenceMap run(const SegmentationRequest& request) override {
    return reference_with_table(hsv_, request.prompts, params_, table_);
  }

 private:
  HsvImage hsv_;
  ReferenceParams params_;
  std::vector<float> table_;
};

}  // namespace

double hsv_distance(HsvPixel a, HsvPixel b) noexcept {
  return std::sqrt(static_cast<double>(squared_distance(a, b)));
}

void color_affinity(const HsvImage& hsv, std::span<const HsvPixel> colors, double sigma,
                    ConfidenceMap& affinity, BinaryMask& within) {
  if (!(sigma > 0.0)) throw PreconditionError("color_affinity: sigma must be > 0");
  affinity_with_table(hsv, colors, affinity_table(sigma), sigma, affinity, within);
}

ConfidenceMap reference_segment(const HsvImage& hsv, std::span<const PointPrompt> prompts,
                                const ReferenceParams& params) {
  if (!(params.sigma_c > 0.0)) throw PreconditionError("reference_segment: sigma_c must be > 0");
  return reference_with_table(hsv, prompts, params, affinity_table(params.sigma_c));
}

ConfidenceMap reference_segment(const RasterImage& image, std::span<const PointPrompt> prompts,
                                const ReferenceParams& params) {
  return reference_segment(rgb_to_hsv(image), prompts, params);
}

std::unique_ptr<SegmentationSession> ReferenceBackend::open(const RasterImage& image) const {
  if (image.empty()) throw PreconditionError("reference backend: empty image");
  return std::make_unique<ReferenceSession>(image, params_);
}

// Thresholding ----------------------------------------------------------------

BinaryMask threshold_mask(const ConfidenceMap& conf, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw PreconditionError("threshold_mask: tau outside [0,1]");
  if (conf.empty()) return {};
  BinaryMask out(conf.width(), conf.height(), 0);
  const auto n = static_cast<std::ptrdiff_t>(conf.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out[idx] = static_cast<double>(conf[idx]) >= tau ? 1 : 0;
  }
  return out;
}

double adaptive_tau(const ConfidenceMap& conf) {
  if (conf.empty()) throw PreconditionError("adaptive_tau: empty confidence map");
  constexpr int kBins = 256;
  std::array<double, kBins> hist{};
  for (float v : conf.values()) {
    const int bin = std::clamp(static_cast<int>(std::floor(static_cast<double>(v) * kBins)), 0,
                               kBins - 1);
    hist[static_cast<std::size_t>(bin)] += 1.0;
  }
  // split k puts bins {0..k} below the threshold (k+1)/256
  const std::optional<double> k = detail::otsu_split(hist);
  if (!k) return kAdaptiveTauFloor;
  return std::clamp((*k + 1.0) / kBins, kAdaptiveTauFloor, kAdaptiveTauCeil);
}

}  // namespace rebarscan
