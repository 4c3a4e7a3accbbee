#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rebarscan/raster.hpp"

namespace rebarscan {

enum class PromptLabel { Foreground, Background };

struct PointPrompt {
  int x = 0;
  int y = 0;
  PromptLabel label = PromptLabel::Foreground;
  friend bool operator==(const PointPrompt&, const PointPrompt&) = default;
};

struct SegmentationRequest {
  std::string request_id;
  std::vector<PointPrompt> prompts;
};

/// Throws PreconditionError unless the request has an id, at least one
/// foreground prompt, and every prompt inside a width x height frame.
void validate_request(const SegmentationRequest& request, int width, int height);

/// A segmenter bound to one image (the image encoding is computed once,
/// prompts are answered many times). Not thread-safe; use one session per
/// worker.
class SegmentationSession {
 public:
  SegmentationSession(int width, int height) : width_(width), height_(height) {}
  virtual ~SegmentationSession() = default;
  SegmentationSession(const SegmentationSession&) = delete;
  SegmentationSession& operator=(const SegmentationSession&) = delete;

  /// Validates the request, runs the backend and checks the answer: a map
  /// with the wrong dimensions or values outside [0,1] raises BackendError.
  ConfidenceMap segment(const SegmentationRequest& request);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

 protected:
  virtual ConfidenceMap run(const SegmentationRequest& request) = 0;

 private:
  int width_;
  int height_;
};

/// Shareable factory of per-image sessions.
class SegmentationBackend {
 public:
  virtual ~SegmentationBackend() = default;
  virtual std::unique_ptr<SegmentationSession> open(const RasterImage& image) const = 0;
  virtual std::string name() const = 0;
};

/// One-shot convenience: open a session on `image` and answer `request`.
ConfidenceMap segment(const SegmentationBackend& backend, const RasterImage& image,
                      const SegmentationRequest& request);

// Reference backend -----------------------------------------------------------

struct ReferenceParams {
  double sigma_c = 40.0;
  double unreachable_factor = 0.2;
};

/// Distance between two HSV pixels in (2h, s, v) space with the hue
/// difference taken around the circle.
double hsv_distance(HsvPixel a, HsvPixel b) noexcept;

/// Deterministic colour-similarity segmenter. For every pixel:
///   conf = exp(-d^2 / (2 sigma_c^2)) * reach
/// where d is the distance to the closest foreground prompt colour and
/// reach is 1 for pixels flood-connected to a foreground prompt through
/// pixels with d <= 2 sigma_c, else `unreachable_factor`. Each background
/// prompt zeroes its own flood basin (distance to its colour <= 2 sigma_c).
ConfidenceMap reference_segment(const HsvImage& hsv, std::span<const PointPrompt> prompts,
                                const ReferenceParams& params = {});
ConfidenceMap reference_segment(const RasterImage& image, std::span<const PointPrompt> prompts,
                                const ReferenceParams& params = {});

/// exp(-d^2/(2 sigma^2)) for d = min distance to `colors`; also marks the
/// pixels with d <= 2 sigma in `within`. Parallel over pixels.
void color_affinity(const HsvImage& hsv, std::span<const HsvPixel> colors, double sigma,
                    ConfidenceMap& affinity, BinaryMask& within);

class ReferenceBackend final : public SegmentationBackend {
 public:
  explicit ReferenceBackend(ReferenceParams params = {}) : params_(params) {}
  std::unique_ptr<SegmentationSession> open(const RasterImage& image) const override;
  std::string name() const override { return "reference"; }

 private:
  ReferenceParams params_;
};

// Thresholding ----------------------------------------------------------------

/// Bit set iff confidence >= tau (inclusive).
BinaryMask threshold_mask(const ConfidenceMap& conf, double tau);

inline constexpr double kAdaptiveTauFloor = 0.3;
inline constexpr double kAdaptiveTauCeil = 0.8;

/// Otsu threshold over a 256-bin confidence histogram, clamped to
/// [0.3, 0.8]. Ties between equally good splits resolve to their mean; a
/// histogram with no valid split returns the floor.
double adaptive_tau(const ConfidenceMap& conf);

// External spool backend --------------------------------------------------------

struct SpoolConfig {
  std::filesystem::path root;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds poll_interval{5};
};

/// Talks to an external segmenter through a spool directory:
///   request  <root>/req/<id>.json   (written to a temp name, then renamed)
///   response <root>/resp/<id>.png   16-bit gray, conf = value / 65535
///            <root>/resp/<id>.done  empty marker written after the PNG
///   failure  <root>/resp/<id>.err   UTF-8 message
/// Wire ids are the caller's request id prefixed with a per-session token.
class SpoolBackend final : public SegmentationBackend {
 public:
  explicit SpoolBackend(SpoolConfig config);
  std::unique_ptr<SegmentationSession> open(const RasterImage& image) const override;
  std::string name() const override { return "external"; }
  const SpoolConfig& config() const noexcept { return config_; }

 private:
  SpoolConfig config_;
};

std::string prompt_label_wire(PromptLabel label);

}  // namespace rebarscan
