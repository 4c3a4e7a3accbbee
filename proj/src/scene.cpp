#include <algorithm>
#include <cmath>
#include <random>

#include "rebarscan/colorfilter.hpp"
#include "rebarscan/eval.hpp"

namespace rebarscan {

namespace {

// mt19937_64 output is fixed by the standard; the distributions are not,
// so sampling is done by hand to keep scenes identical across toolchains.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::acos(-1.0) * u2);
  }

 private:
  std::mt19937_64 engine_;
};

std::uint8_t clamp8(double v, int lo = 0, int hi = 255) {
  return static_cast<std::uint8_t>(std::clamp(static_cast<int>(std::lround(v)), lo, hi));
}

struct StripeGeometry {
  Point2D center;
  Point2D u;
  Point2D n;
  double length = 0.0;
  double pitch = 0.0;
  std::vector<double> offsets;
};

StripeGeometry stripe_geometry(const SceneSpec& spec) {
  StripeGeometry g;
  const double rad = spec.angle_deg * std::acos(-1.0) / 180.0;
  g.center = Point2D{spec.width / 2.0, spec.height / 2.0};
  g.u = Point2D{std::cos(rad), std::sin(rad)};
  g.n = Point2D{-std::sin(rad), std::cos(rad)};
  double half = 1e18;
  if (std::abs(g.u.x) > 1e-12) half = std::min(half, (spec.width / 2.0 - spec.margin_px) / std::abs(g.u.x));
  if (std::abs(g.u.y) > 1e-12) half = std::min(half, (spec.height / 2.0 - spec.margin_px) / std::abs(g.u.y));
  g.pitch = spec.segment_length_px + spec.segment_gap_px;
  const double available = 2.0 * half;
  const auto segments = static_cast<long long>(std::floor((available + spec.segment_gap_px) / g.pitch));
  g.length = segments >= 1 ? static_cast<double>(segments) * spec.segment_length_px +
                                 static_cast<double>(segments - 1) * spec.segment_gap_px
                           : 0.0;
  for (int i = 0; i < spec.stripe_count; ++i) {
    g.offsets.push_back((i - (spec.stripe_count - 1) / 2.0) * spec.spacing_px);
  }
  return g;
}

bool in_rust(const SceneSpec& spec, const StripeGeometry& g, int x, int y) {
  const double dx = x - g.center.x;
  const double dy = y - g.center.y;
  const double along = g.u.x * dx + g.u.y * dy + g.length / 2.0;
  if (along < 0.0 || along >= g.length) return false;
  if (std::fmod(along, g.pitch) >= spec.segment_length_px) return false;
  const double across = g.n.x * dx + g.n.y * dy;
  for (double off : g.offsets) {
    const double d = across - off;
    if (d >= -spec.stripe_width_px / 2.0 && d < spec.stripe_width_px / 2.0) return true;
  }
  return false;
}

}  // namespace

void SceneSpec::validate() const {
  if (width < 16 || height < 16) throw PreconditionError("scene spec: image must be >= 16x16");
  if (stripe_count < 1) throw PreconditionError("scene spec: stripe_count must be >= 1");
  if (!(stripe_width_px >= 1.0)) throw PreconditionError("scene spec: stripe width must be >= 1");
  if (stripe_count > 1 && !(spacing_px > stripe_width_px)) {
    throw PreconditionError("scene spec: spacing must exceed the stripe width");
  }
  if (!(segment_length_px >= 1.0) || !(segment_gap_px >= 0.0)) {
    throw PreconditionError("scene spec: invalid segment length or gap");
  }
  if (!(margin_px >= 0.0)) throw PreconditionError("scene spec: margin must be >= 0");
  if (!std::isfinite(angle_deg)) throw PreconditionError("scene spec: angle must be finite");
  if (!(noise_sigma >= 0.0)) throw PreconditionError("scene spec: noise sigma must be >= 0");
  if (background_gray < 0 || background_gray > 255) {
    throw PreconditionError("scene spec: background gray outside [0,255]");
  }
  const HsvRange rust = rust_range();
  if (!rust.contains(rust_center) || !rust.contains(rgb_to_hsv(hsv_to_rgb(rust_center)))) {
    throw PreconditionError("scene spec: rust colour is not inside the rust range");
  }

  const StripeGeometry g = stripe_geometry(*this);
  if (!(g.length > 0.0)) throw PreconditionError("scene spec: no room for a stripe segment");
  for (double off : g.offsets) {
    for (double a : {-g.length / 2.0, g.length / 2.0}) {
      for (double b : {off - stripe_width_px / 2.0, off + stripe_width_px / 2.0}) {
        const double x = g.center.x + g.u.x * a + g.n.x * b;
        const double y = g.center.y + g.u.y * a + g.n.y * b;
        if (x < 0.0 || y < 0.0 || x > width - 1 || y > height - 1) {
          throw PreconditionError("scene spec: stripes do not fit inside the image");
        }
      }
    }
  }
  if (sign) {
    const BBox& b = sign->bbox;
    if (!b.valid() || b.x_min < 0 || b.y_min < 0 || b.x_max >= width || b.y_max >= height) {
      throw PreconditionError("scene spec: sign box outside the image");
    }
    if (b.width() < 40 || b.height() < 30) {
      throw PreconditionError("scene spec: sign box must be at least 40x30");
    }
  }
}

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  Sampler rng(seed);
  const StripeGeometry g = stripe_geometry(spec);
  const HsvRange rust = rust_range();
  const Rgb rust_fallback = hsv_to_rgb(spec.rust_center);

  Scene scene;
  scene.image = RasterImage(spec.width, spec.height);
  scene.rust_truth = BinaryMask(spec.width, spec.height, 0);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      if (in_rust(spec, g, x, y)) {
        const HsvPixel jittered{
            clamp8(spec.rust_center.h + rng.normal() * spec.noise_sigma / 2.0, rust.h_min, rust.h_max),
            clamp8(spec.rust_center.s + rng.normal() * spec.noise_sigma * 3.0, rust.s_min, rust.s_max),
            clamp8(spec.rust_center.v + rng.normal() * spec.noise_sigma * 3.0, rust.v_min, rust.v_max)};
        const Rgb rgb = hsv_to_rgb(jittered);
        scene.image(x, y) = rust.contains(rgb_to_hsv(rgb)) ? rgb : rust_fallback;
        scene.rust_truth(x, y) = 1;
      } else {
        const std::uint8_t v = clamp8(spec.background_gray + rng.normal() * spec.noise_sigma);
        scene.image(x, y) = Rgb{v, v, v};
      }
    }
  }

  if (spec.sign) {
    const BBox b = spec.sign->bbox;
    scene.sign_bbox = b;
    Sampler glyphs(spec.sign->glyph_seed);
    for (int y = b.y_min; y <= b.y_max; ++y) {
      for (int x = b.x_min; x <= b.x_max; ++x) {
        const std::uint8_t v = clamp8(245.0 + rng.normal() * spec.noise_sigma, 0, 255);
        scene.image(x, y) = Rgb{v, v, v};
        scene.rust_truth(x, y) = 0;
      }
    }
    // rows of small dark glyph blocks
    constexpr int kMargin = 12, kGlyphW = 6, kGlyphH = 9, kPitchX = 10, kPitchY = 16;
    for (int gy = b.y_min + kMargin; gy + kGlyphH - 1 <= b.y_max - kMargin; gy += kPitchY) {
      for (int gx = b.x_min + kMargin; gx + kGlyphW - 1 <= b.x_max - kMargin; gx += kPitchX) {
        if (glyphs.uniform() >= 0.7) continue;
        for (int y = gy; y < gy + kGlyphH; ++y) {
          for (int x = gx; x < gx + kGlyphW; ++x) {
            const std::uint8_t v = clamp8(40.0 + rng.normal() * spec.noise_sigma);
            scene.image(x, y) = Rgb{v, v, v};
          }
        }
      }
    }
  }
  return scene;
}

}  // namespace rebarscan
