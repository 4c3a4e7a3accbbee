#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rebarscan/raster.hpp"
#include "test_util.hpp"

using namespace rebarscan;

TEST_CASE("grid construction and access") {
  Grid<int> g(3, 2, 7);
  CHECK(g.width() == 3);
  CHECK(g.height() == 2);
  CHECK(g.size() == 6);
  CHECK(g(2, 1) == 7);
  CHECK_THROWS_AS((void)g.at(3, 0), PreconditionError);
  CHECK_THROWS_AS((Grid<int>(0, 2)), PreconditionError);
  CHECK_THROWS_AS((Grid<int>(2, 2, std::vector<int>{1, 2, 3})), PreconditionError);
  CHECK(Grid<int>().empty());
}

TEST_CASE("validate_confidence rejects values outside the unit interval") {
  ConfidenceMap c(2, 2, 0.5f);
  CHECK_NOTHROW(validate_confidence(c));
  c(1, 1) = 1.0001f;
  CHECK_THROWS_AS(validate_confidence(c), PreconditionError);
  c(1, 1) = std::nanf("");
  CHECK_THROWS_AS(validate_confidence(c), PreconditionError);
}

TEST_CASE("rgb_to_hsv hand value") {
  const HsvPixel p = rgb_to_hsv(Rgb{128, 64, 32});
  CHECK(p.h == 10);
  CHECK(p.s == 191);
  CHECK(p.v == 128);
  CHECK(rgb_to_hsv(Rgb{0, 0, 0}) == HsvPixel{0, 0, 0});
  CHECK(rgb_to_hsv(Rgb{200, 200, 200}) == HsvPixel{0, 0, 200});
  CHECK(rgb_to_hsv(Rgb{0, 0, 255}) == HsvPixel{120, 255, 255});
}

TEST_CASE("rgb_to_hsv matches the exact integer conversion over the whole cube") {
  long mismatches = 0;
  for (int r = 0; r < 256; ++r) {
    for (int g = 0; g < 256; ++g) {
      for (int b = 0; b < 256; ++b) {
        const Rgb c{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                    static_cast<std::uint8_t>(b)};
        if (!(rgb_to_hsv(c) == oracle::hsv(c))) ++mismatches;
      }
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("hsv round trip error") {
  // within 2 levels for chroma <= 120, within 4 across the full cube
  int worst_low_chroma = 0;
  int worst = 0;
  for (int r = 0; r < 256; r += 1) {
    for (int g = 0; g < 256; g += 1) {
      for (int b = 0; b < 256; b += 1) {
        const Rgb c{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                    static_cast<std::uint8_t>(b)};
        const Rgb back = hsv_to_rgb(rgb_to_hsv(c));
        const int err = std::max({std::abs(r - back.r), std::abs(g - back.g), std::abs(b - back.b)});
        worst = std::max(worst, err);
        if (std::max({r, g, b}) - std::min({r, g, b}) <= 120) {
          worst_low_chroma = std::max(worst_low_chroma, err);
        }
      }
    }
  }
  CHECK(worst_low_chroma <= 2);
  CHECK(worst <= 4);
}

TEST_CASE("connected components agree with union-find labelling") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const BinaryMask m = testutil::random_mask(37, 23, 0.45, seed);
    for (bool eight : {false, true}) {
      const auto labels = oracle::label_components(m, eight);
      const auto regions =
          connected_components(m, eight ? Connectivity::Eight : Connectivity::Four);
      const int expected = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
      REQUIRE(static_cast<int>(regions.size()) == expected);
      for (std::size_t r = 0; r < regions.size(); ++r) {
        const Region& reg = regions[r];
        long long area = 0;
        for (int y = 0; y < m.height(); ++y) {
          for (int x = 0; x < m.width(); ++x) {
            const bool in_oracle = labels[m.index(x, y)] == static_cast<int>(r);
            CHECK(reg.covers(x, y) == in_oracle);
            area += in_oracle ? 1 : 0;
          }
        }
        CHECK(reg.area == area);
        CHECK(reg.area == static_cast<long long>(popcount(reg.mask)));
        CHECK(reg.aspect_ratio >= 1.0);
        CHECK(reg.centroid.x >= reg.bbox.x_min);
        CHECK(reg.centroid.x <= reg.bbox.x_max);
        CHECK(reg.centroid.y >= reg.bbox.y_min);
        CHECK(reg.centroid.y <= reg.bbox.y_max);
        CHECK(!reg.stage.has_value());
        // tight box: every edge row/column holds a pixel
        bool top = false, bottom = false, left = false, right = false;
        for (int x = reg.bbox.x_min; x <= reg.bbox.x_max; ++x) {
          top = top || reg.covers(x, reg.bbox.y_min);
          bottom = bottom || reg.covers(x, reg.bbox.y_max);
        }
        for (int y = reg.bbox.y_min; y <= reg.bbox.y_max; ++y) {
          left = left || reg.covers(reg.bbox.x_min, y);
          right = right || reg.covers(reg.bbox.x_max, y);
        }
        CHECK((top && bottom && left && right));
      }
    }
  }
}

TEST_CASE("diagonal pixels join only under 8-connectivity") {
  BinaryMask m(3, 3, 0);
  m(0, 0) = 1;
  m(1, 1) = 1;
  CHECK(connected_components(m, Connectivity::Four).size() == 2);
  CHECK(connected_components(m, Connectivity::Eight).size() == 1);
  CHECK(connected_components(BinaryMask(4, 4, 0)).empty());
}

TEST_CASE("region geometry") {
  const Region r = testutil::rect_region(50, 40, BBox{10, 5, 29, 8});
  CHECK(r.area == 80);
  CHECK(r.aspect_ratio == doctest::Approx(5.0));
  CHECK(r.centroid.x == doctest::Approx(19.5));
  CHECK(r.centroid.y == doctest::Approx(6.5));
  CHECK(popcount(r.full_mask()) == 80);
  CHECK_THROWS_AS(region_from_pixels(std::vector<std::size_t>{}, 5, 5), PreconditionError);
}

TEST_CASE("component_at and overlap_area") {
  BinaryMask m(20, 20, 0);
  for (int y = 2; y < 6; ++y) {
    for (int x = 2; x < 12; ++x) m(x, y) = 1;
  }
  m(15, 15) = 1;
  const auto r = component_at(m, 3, 3);
  REQUIRE(r.has_value());
  CHECK(r->area == 40);
  CHECK(!component_at(m, 0, 0).has_value());
  CHECK_THROWS_AS((void)component_at(m, 25, 0), PreconditionError);

  const Region a = testutil::rect_region(20, 20, BBox{0, 0, 9, 9});
  const Region b = testutil::rect_region(20, 20, BBox{5, 5, 14, 14});
  CHECK(overlap_area(a, b) == 25);
  const Region c = testutil::rect_region(20, 20, BBox{15, 15, 19, 19});
  CHECK(overlap_area(a, c) == 0);
}

TEST_CASE("mean_over averages the region pixels") {
  ConfidenceMap conf(10, 10, 0.0f);
  conf(1, 1) = 1.0f;
  conf(2, 1) = 0.5f;
  const Region r = testutil::rect_region(10, 10, BBox{1, 1, 2, 1});
  CHECK(mean_over(conf, r) == doctest::Approx(0.75));
}

TEST_CASE("gaussian kernel") {
  const auto w = gaussian_kernel_1d(25, default_blur_sigma(25));
  REQUIRE(w.size() == 51);
  double sum = 0.0;
  for (double v : w) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 25; ++i) CHECK(w[static_cast<std::size_t>(i)] == doctest::Approx(w[50 - static_cast<std::size_t>(i)]));
  CHECK(default_blur_sigma(25) == doctest::Approx(25.0 / 3.0));
  CHECK_THROWS_AS(gaussian_kernel_1d(0, 1.0), PreconditionError);
  CHECK_THROWS_AS(gaussian_kernel_1d(3, 0.0), PreconditionError);
}

TEST_CASE("blur preserves a constant image") {
  for (std::uint8_t v : {0, 1, 77, 128, 254, 255}) {
    const RasterImage img(40, 30, Rgb{v, static_cast<std::uint8_t>(255 - v), v});
    const RasterImage out = gaussian_blur(img, 25, default_blur_sigma(25));
    for (const Rgb& p : out.values()) {
      CHECK(std::abs(int{p.r} - int{v}) <= 1);
      CHECK(std::abs(int{p.g} - (255 - int{v})) <= 1);
    }
  }
}

TEST_CASE("blur impulse response equals the normalized 51x51 kernel") {
  const int k = 25;
  const double sigma = default_blur_sigma(k);
  RasterImage img(61, 61, Rgb{0, 0, 0});
  img(30, 30) = Rgb{255, 255, 255};
  const RasterImage out = gaussian_blur(img, k, sigma);
  int worst = 0;
  for (int y = 0; y < 61; ++y) {
    for (int x = 0; x < 61; ++x) {
      const int dx = x - 30, dy = y - 30;
      const double expected =
          (std::abs(dx) <= k && std::abs(dy) <= k) ? 255.0 * oracle::gaussian2d_weight(dx, dy, k, sigma) : 0.0;
      worst = std::max(worst, static_cast<int>(std::ceil(std::abs(out(x, y).r - expected) - 1e-9)));
    }
  }
  CHECK(worst <= 1);
}

TEST_CASE("blur_within is bit-exact outside the mask and equals the full blur inside") {
  const RasterImage img = testutil::random_image(90, 70, 3);
  BinaryMask mask(90, 70, 0);
  for (int y = 10; y < 30; ++y) {
    for (int x = 50; x < 89; ++x) mask(x, y) = 1;
  }
  mask(0, 69) = 1;
  const RasterImage full = gaussian_blur(img, 25, default_blur_sigma(25));
  const RasterImage out = blur_within(img, mask, 25, default_blur_sigma(25));
  for (int y = 0; y < 70; ++y) {
    for (int x = 0; x < 90; ++x) {
      if (mask(x, y)) {
        CHECK(out(x, y) == full(x, y));
      } else {
        CHECK(out(x, y) == img(x, y));
      }
    }
  }
  CHECK(blur_within(img, BinaryMask(90, 70, 0), 25, 8.0) == img);
  CHECK_THROWS_AS(blur_within(img, BinaryMask(10, 10, 0), 25, 8.0), PreconditionError);
}
