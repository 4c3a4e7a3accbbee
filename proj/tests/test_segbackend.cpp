#include <doctest.h>

#include <cmath>

#include "rebarscan/segbackend.hpp"
#include "rebarscan/serial.hpp"
#include "test_util.hpp"

using namespace rebarscan;

namespace {

SegmentationRequest fg(int x, int y, std::string id = "r") {
  return SegmentationRequest{std::move(id), {PointPrompt{x, y, PromptLabel::Foreground}}};
}

// Two rust blocks separated by grey, plus a far-away block of the same colour.
RasterImage blocks() {
  RasterImage img(60, 30, Rgb{128, 128, 128});
  const Rgb rust = hsv_to_rgb(HsvPixel{10, 110, 95});
  for (int y = 5; y < 15; ++y) {
    for (int x = 5; x < 20; ++x) img(x, y) = rust;
    for (int x = 40; x < 55; ++x) img(x, y) = rust;
  }
  return img;
}

class FixedSession final : public SegmentationSession {
 public:
  FixedSession(int w, int h, ConfidenceMap out) : SegmentationSession(w, h), out_(std::move(out)) {}

 protected:
  ConfidenceMap run(const SegmentationRequest&) override { return out_; }

 private:
  ConfidenceMap out_;
};

}  // namespace

TEST_CASE("request validation") {
  CHECK_NOTHROW(validate_request(fg(0, 0), 10, 10));
  CHECK_THROWS_AS(validate_request(fg(10, 0), 10, 10), PreconditionError);
  CHECK_THROWS_AS(validate_request(fg(0, -1), 10, 10), PreconditionError);
  CHECK_THROWS_AS(validate_request(SegmentationRequest{"r", {}}, 10, 10), PreconditionError);
  CHECK_THROWS_AS(validate_request(fg(1, 1, ""), 10, 10), PreconditionError);
  const SegmentationRequest bg_only{"r", {PointPrompt{1, 1, PromptLabel::Background}}};
  CHECK_THROWS_AS(validate_request(bg_only, 10, 10), PreconditionError);
}

TEST_CASE("session output is checked for size and range") {
  FixedSession wrong_size(4, 4, ConfidenceMap(3, 4, 0.5f));
  CHECK_THROWS_AS(wrong_size.segment(fg(0, 0)), BackendError);
  ConfidenceMap bad(4, 4, 0.5f);
  bad(2, 2) = 1.5f;
  FixedSession out_of_range(4, 4, bad);
  try {
    out_of_range.segment(fg(0, 0, "req-7"));
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.request_id() == "req-7");
  }
  FixedSession ok(4, 4, ConfidenceMap(4, 4, 0.25f));
  CHECK(ok.segment(fg(3, 3))(0, 0) == doctest::Approx(0.25));
  CHECK_THROWS_AS(ok.segment(fg(4, 3)), PreconditionError);
}

TEST_CASE("hsv distance uses the circular hue") {
  CHECK(hsv_distance(HsvPixel{0, 10, 10}, HsvPixel{0, 10, 10}) == 0.0);
  CHECK(hsv_distance(HsvPixel{179, 0, 0}, HsvPixel{1, 0, 0}) == doctest::Approx(4.0));
  CHECK(hsv_distance(HsvPixel{0, 3, 0}, HsvPixel{0, 0, 4}) == doctest::Approx(5.0));
}

TEST_CASE("reference backend segments the prompted block") {
  const RasterImage img = blocks();
  const ReferenceBackend backend;
  const ConfidenceMap conf = segment(backend, img, fg(10, 10));
  CHECK(conf(10, 10) == doctest::Approx(1.0));
  CHECK(conf(19, 14) == doctest::Approx(1.0));
  // same colour but not connected: damped by the unreachable factor
  CHECK(conf(45, 10) == doctest::Approx(0.2));
  // grey background is far in colour and unreachable
  CHECK(conf(30, 25) < 0.01);
  const BinaryMask mask = threshold_mask(conf, adaptive_tau(conf));
  const auto region = component_at(mask, 10, 10);
  REQUIRE(region.has_value());
  CHECK(region->area == 150);
  CHECK(mask(45, 10) == 0);
}

TEST_CASE("background prompts zero their basin") {
  const RasterImage img = blocks();
  const ReferenceBackend backend;
  const SegmentationRequest req{"r",
                                {PointPrompt{10, 10, PromptLabel::Foreground},
                                 PointPrompt{45, 10, PromptLabel::Background}}};
  const ConfidenceMap conf = segment(backend, img, req);
  CHECK(conf(45, 10) == 0.0f);
  CHECK(conf(50, 12) == 0.0f);
  CHECK(conf(10, 10) == doctest::Approx(1.0));
}

TEST_CASE("reference segment matches the serial affinity formula") {
  const RasterImage img = testutil::random_image(40, 30, 12);
  const HsvImage hsv = rgb_to_hsv(img);
  const std::vector<HsvPixel> colors{hsv(3, 4), hsv(20, 20)};
  ConfidenceMap fast, slow;
  BinaryMask within_fast, within_slow;
  color_affinity(hsv, colors, 40.0, fast, within_fast);
  serial::color_affinity(hsv, colors, 40.0, slow, within_slow);
  CHECK(within_fast == within_slow);
  for (std::size_t i = 0; i < fast.size(); ++i) CHECK(std::abs(fast[i] - slow[i]) < 1e-6f);
}

TEST_CASE("threshold_mask is inclusive") {
  ConfidenceMap c(3, 1);
  c(0, 0) = 0.5f;
  c(1, 0) = 0.49999f;
  c(2, 0) = 1.0f;
  const BinaryMask m = threshold_mask(c, 0.5);
  CHECK(m(0, 0) == 1);
  CHECK(m(1, 0) == 0);
  CHECK(m(2, 0) == 1);
  CHECK_THROWS_AS(threshold_mask(c, 1.5), PreconditionError);
  CHECK_THROWS_AS(threshold_mask(c, -0.1), PreconditionError);
}

TEST_CASE("adaptive tau") {
  auto two_level = [](float a, float b, int na, int nb) {
    ConfidenceMap c(na + nb, 1);
    for (int i = 0; i < na + nb; ++i) c(i, 0) = i < na ? a : b;
    return c;
  };
  // {0.1, 0.9}: bins 25 and 230, every split in between ties; mean tau is 0.5
  CHECK(adaptive_tau(two_level(0.1f, 0.9f, 50, 50)) == doctest::Approx(0.5).epsilon(1e-12));
  // {0.2, 0.9}: bins 51 and 230, splits k = 51..229 tie; mean (k+1)/256 = 141/256
  CHECK(adaptive_tau(two_level(0.2f, 0.9f, 70, 30)) == doctest::Approx(141.0 / 256.0).epsilon(1e-12));
  // single level has no split: floor value
  CHECK(adaptive_tau(ConfidenceMap(5, 5, 0.7f)) == doctest::Approx(0.3));
  // clamped into [0.3, 0.8]
  CHECK(adaptive_tau(two_level(0.0f, 0.1f, 10, 10)) == doctest::Approx(0.3));
  CHECK(adaptive_tau(two_level(0.95f, 1.0f, 10, 10)) == doctest::Approx(0.8));
  CHECK_THROWS_AS(adaptive_tau(ConfidenceMap{}), PreconditionError);
}

TEST_CASE("backend construction errors") {
  CHECK_THROWS_AS(ReferenceBackend().open(RasterImage{}), PreconditionError);
  CHECK_THROWS_AS(SpoolBackend(SpoolConfig{}), PreconditionError);
  CHECK(ReferenceBackend().name() == "reference");
  CHECK(prompt_label_wire(PromptLabel::Foreground) == "fg");
  CHECK(prompt_label_wire(PromptLabel::Background) == "bg");
}
