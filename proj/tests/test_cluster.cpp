#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rebarscan/cluster.hpp"

using namespace rebarscan;

namespace {

std::vector<Point2D> random_points(std::mt19937_64& rng, std::size_t n, double extent) {
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<Point2D> pts(n);
  for (auto& p : pts) p = Point2D{u(rng), u(rng)};
  return pts;
}

bool same_partition(const ClusterResult& got, const oracle::Partition& want) {
  auto sorted = [](std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  if (got.clusters.size() != want.clusters.size()) return false;
  if (sorted(got.noise) != sorted(want.noise)) return false;
  for (std::size_t c = 0; c < got.clusters.size(); ++c) {
    if (sorted(got.clusters[c]) != sorted(want.clusters[c])) return false;
  }
  return true;
}

std::vector<Point2D> line_points(double angle_deg, double offset, int count, double step,
                                 double start = 0.0) {
  const double a = angle_deg * std::numbers::pi / 180.0;
  const Point2D u{std::cos(a), std::sin(a)};
  const Point2D n{-std::sin(a), std::cos(a)};
  std::vector<Point2D> pts;
  for (int i = 0; i < count; ++i) {
    const double t = start + i * step;
    pts.push_back(Point2D{n.x * offset + u.x * t, n.y * offset + u.y * t});
  }
  return pts;
}

}  // namespace

TEST_CASE("dbscan matches the brute-force definition on random sets") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 50)(rng);
    const double eps = std::uniform_real_distribution<double>(1.0, 30.0)(rng);
    const std::size_t min_pts = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    const auto pts = random_points(rng, n, 100.0);
    CHECK(same_partition(dbscan(pts, eps, min_pts), oracle::dbscan(pts, eps, min_pts)));
  }
}

TEST_CASE("dbscan neighbourhoods are inclusive and count the point itself") {
  const std::vector<Point2D> pair{{0, 0}, {3, 4}};
  CHECK(dbscan(pair, 5.0, 2).clusters.size() == 1);
  CHECK(dbscan(pair, 4.999, 2).clusters.empty());
  CHECK(dbscan(pair, 4.999, 2).noise.size() == 2);
  CHECK(dbscan(pair, 1.0, 1).clusters.size() == 2);
}

TEST_CASE("dbscan edge cases") {
  CHECK(dbscan(std::vector<Point2D>{}, 1.0, 2).clusters.empty());
  const std::vector<Point2D> dup(5, Point2D{3, 3});
  const auto r = dbscan(dup, 0.5, 5);
  REQUIRE(r.clusters.size() == 1);
  CHECK(r.clusters[0].size() == 5);
  CHECK_THROWS_AS(dbscan(dup, 0.0, 2), PreconditionError);
  CHECK_THROWS_AS(dbscan(dup, 1.0, 0), PreconditionError);
}

TEST_CASE("dbscan: cores and noise are invariant under permutation") {
  // Border points reachable from two clusters may legitimately switch
  // clusters with the visit order, so only core membership is compared.
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pts = random_points(rng, 40, 60.0);
    const double eps = 8.0;
    const std::size_t min_pts = 3;
    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Point2D> shuffled;
    for (std::size_t i : perm) shuffled.push_back(pts[i]);

    const auto a = dbscan(pts, eps, min_pts);
    const auto b = dbscan(shuffled, eps, min_pts);
    auto is_core = [&](const std::vector<Point2D>& p, std::size_t i) {
      std::size_t c = 0;
      for (const auto& q : p) c += std::hypot(q.x - p[i].x, q.y - p[i].y) <= eps ? 1 : 0;
      return c >= min_pts;
    };
    std::vector<int> la(pts.size(), -1), lb(pts.size(), -1);
    for (std::size_t c = 0; c < a.clusters.size(); ++c) {
      for (std::size_t i : a.clusters[c]) la[i] = static_cast<int>(c);
    }
    for (std::size_t c = 0; c < b.clusters.size(); ++c) {
      for (std::size_t i : b.clusters[c]) lb[perm[i]] = static_cast<int>(c);
    }
    CHECK(a.clusters.size() == b.clusters.size());
    CHECK(a.noise.size() == b.noise.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK((la[i] == -1) == (lb[i] == -1));
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (!is_core(pts, i) || !is_core(pts, j)) continue;
        CHECK((la[i] == la[j]) == (lb[i] == lb[j]));
      }
    }
  }
}

TEST_CASE("fit_line agrees with an eigen-decomposition of the scatter matrix") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    const double angle = std::uniform_real_distribution<double>(0.0, 180.0)(rng);
    auto pts = line_points(angle, 40.0, 30, 5.0, -60.0);
    for (auto& p : pts) {
      p.x += noise(rng);
      p.y += noise(rng);
    }
    const FittedLine line = fit_line(pts);

    Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      m(static_cast<Eigen::Index>(i), 0) = pts[i].x;
      m(static_cast<Eigen::Index>(i), 1) = pts[i].y;
    }
    const Eigen::RowVector2d mean = m.colwise().mean();
    const Eigen::MatrixXd centered = m.rowwise() - mean;
    const Eigen::Matrix2d cov = centered.transpose() * centered;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    const Eigen::Vector2d dir = es.eigenvectors().col(1);
    const Eigen::Vector2d normal = es.eigenvectors().col(0);
    double ref = std::atan2(dir.y(), dir.x()) * 180.0 / std::numbers::pi;
    ref = std::fmod(ref + 360.0, 180.0);

    CHECK(axial_difference_deg(line.angle_deg, ref) < 1e-6);
    CHECK(line.angle_deg >= 0.0);
    CHECK(line.angle_deg < 180.0);
    const double rms = std::sqrt((centered * normal).squaredNorm() / static_cast<double>(pts.size()));
    CHECK(line.rms_residual == doctest::Approx(rms).epsilon(1e-9));
    CHECK(line.centroid.x == doctest::Approx(mean.x()));
    const double a = line.angle_deg * std::numbers::pi / 180.0;
    CHECK(line.distance_origin ==
          doctest::Approx(-std::sin(a) * mean.x() + std::cos(a) * mean.y()).epsilon(1e-9));
    CHECK(line.inliers.size() == pts.size());
  }
}

TEST_CASE("fit_line rejects degenerate input") {
  CHECK_THROWS_AS(fit_line(std::vector<Point2D>{{1, 1}}), PreconditionError);
  CHECK_THROWS_AS(fit_line(std::vector<Point2D>{{1, 1}, {1, 1}}), PreconditionError);
  const FittedLine v = fit_line(std::vector<Point2D>{{5, 0}, {5, 10}});
  CHECK(v.angle_deg == doctest::Approx(90.0));
  CHECK(v.rms_residual == doctest::Approx(0.0));
}

TEST_CASE("axial angle helpers") {
  const std::vector<double> around_zero{179.0, 1.0};
  const double m = axial_mean_deg(around_zero);
  CHECK(std::min(m, 180.0 - m) < 1e-9);
  const std::vector<double> plain{10.0, 20.0};
  CHECK(axial_mean_deg(plain) == doctest::Approx(15.0));
  CHECK(axial_difference_deg(179.0, 1.0) == doctest::Approx(2.0));
  CHECK(axial_difference_deg(0.0, 90.0) == doctest::Approx(90.0));
  CHECK(axial_difference_deg(30.0, 210.0) == doctest::Approx(0.0));
}

TEST_CASE("detect_pattern recovers three parallel lines") {
  std::vector<Point2D> pts;
  for (double off : {251.0, 384.0, 517.0}) {
    const auto line = line_points(0.35, off, 17, 56.0, 60.0);
    pts.insert(pts.end(), line.begin(), line.end());
  }
  const RebarPattern p = detect_pattern(pts, PatternParams{});
  REQUIRE(p.parallel);
  CHECK(p.group.size() == 3);
  CHECK(p.group_offsets.size() == 3);
  CHECK(p.mean_spacing_px == doctest::Approx(133.0).epsilon(1e-6));
  CHECK(p.mean_angle_deg == doctest::Approx(0.35).epsilon(1e-6));
  CHECK(std::is_sorted(p.group_offsets.begin(), p.group_offsets.end()));
}

TEST_CASE("detect_pattern merges collinear fragments") {
  // one line broken by a gap wider than eps still counts once
  std::vector<Point2D> pts;
  for (double off : {100.0, 233.0}) {
    auto a = line_points(0.0, off, 4, 40.0, 0.0);
    auto b = line_points(0.0, off + 2.0, 4, 40.0, 400.0);
    pts.insert(pts.end(), a.begin(), a.end());
    pts.insert(pts.end(), b.begin(), b.end());
  }
  const RebarPattern p = detect_pattern(pts, PatternParams{});
  REQUIRE(p.parallel);
  CHECK(p.group.size() == 2);
  CHECK(p.mean_spacing_px == doctest::Approx(133.0).epsilon(0.01));
}

TEST_CASE("detect_pattern without a parallel pair") {
  CHECK(!detect_pattern(std::vector<Point2D>{}, PatternParams{}).parallel);
  const auto single = line_points(20.0, 50.0, 8, 30.0);
  const RebarPattern one = detect_pattern(single, PatternParams{});
  CHECK(!one.parallel);
  CHECK(one.lines.size() == 1);
  CHECK(one.group.empty());
  CHECK(one.mean_angle_deg == doctest::Approx(20.0).epsilon(1e-6));

  // two lines 40 degrees apart never group
  auto a = line_points(0.0, 100.0, 8, 30.0);
  auto b = line_points(40.0, 400.0, 8, 30.0, 300.0);
  a.insert(a.end(), b.begin(), b.end());
  const RebarPattern crossed = detect_pattern(a, PatternParams{});
  CHECK(!crossed.parallel);
  CHECK(crossed.lines.size() == 2);

  // isolated points give no line at all
  const std::vector<Point2D> sparse{{0, 0}, {500, 500}, {1000, 0}};
  const RebarPattern none = detect_pattern(sparse, PatternParams{});
  CHECK(!none.parallel);
  CHECK(none.lines.empty());
}

TEST_CASE("detect_pattern rejects bad parameters") {
  const std::vector<Point2D> pts{{0, 0}, {1, 1}};
  CHECK_THROWS_AS(detect_pattern(pts, PatternParams{0.0, 2, 5.0}), PreconditionError);
  CHECK_THROWS_AS(detect_pattern(pts, PatternParams{60.0, 2, 0.0}), PreconditionError);
}
