#include "rebarscan/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <numeric>
#include <unordered_map>

namespace rebarscan {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Uniform grid with cell side eps; a radius query scans the 3x3 block of
// cells around the query point.
class NeighborIndex {
 public:
  NeighborIndex(std::span<const Point2D> points, double eps) : points_(points), eps_(eps) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      cells_[key(cell_of(points[i].x), cell_of(points[i].y))].push_back(i);
    }
  }

  void query(std::size_t i, std::vector<std::size_t>& out) const {
    out.clear();
    const Point2D& p = points_[i];
    const std::int64_t cx = cell_of(p.x);
    const std::int64_t cy = cell_of(p.y);
    const double eps2 = eps_ * eps_;
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto it = cells_.find(key(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (std::size_t j : it->second) {
          const double ex = points_[j].x - p.x;
          const double ey = points_[j].y - p.y;
          if (ex * ex + ey * ey <= eps2) out.push_back(j);
        }
      }
    }
  }

 private:
  std::int64_t cell_of(double v) const {
    return static_cast<std::int64_t>(std::clamp(std::floor(v / eps_), -1.0e9, 1.0e9));
  }
  static std::int64_t key(std::int64_t cx, std::int64_t cy) {
    return (cx + (std::int64_t{1} << 31)) * (std::int64_t{1} << 32) + (cy + (std::int64_t{1} << 31));
  }

  std::span<const Point2D> points_;
  double eps_;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

}  // namespace

ClusterResult dbscan(std::span<const Point2D> points, double eps, std::size_t min_pts) {
  if (!(eps > 0.0)) throw PreconditionError("dbscan: eps must be > 0");
  if (min_pts < 1) throw PreconditionError("dbscan: min_pts must be >= 1");

  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  std::vector<int> labels(points.size(), kUnvisited);
  const NeighborIndex index(points, eps);
  std::vector<std::size_t> neighbors;
  std::vector<std::size_t> inner;
  int next_cluster = 0;

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] != kUnvisited) continue;
    index.query(i, neighbors);
    if (neighbors.size() < min_pts) {
      labels[i] = kNoise;
      continue;
    }
    const int cluster = next_cluster++;
    labels[i] = cluster;
    std::deque<std::size_t> frontier(neighbors.begin(), neighbors.end());
    while (!frontier.empty()) {
      const std::size_t j = frontier.front();
      frontier.pop_front();
      if (labels[j] == kNoise) labels[j] = cluster;  // border point
      if (labels[j] != kUnvisited) continue;
      labels[j] = cluster;
      index.query(j, inner);
      if (inner.size() >= min_pts) frontier.insert(frontier.end(), inner.begin(), inner.end());
    }
  }

  ClusterResult result;
  result.clusters.resize(static_cast<std::size_t>(next_cluster));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kNoise) {
      result.noise.push_back(i);
    } else {
      result.clusters[static_cast<std::size_t>(labels[i])].push_back(i);
    }
  }
  return result;
}

FittedLine fit_line(std::span<const Point2D> points) {
  if (points.size() < 2) throw PreconditionError("fit_line: need at least two points");
  const double n = static_cast<double>(points.size());
  Point2D c;
  for (const Point2D& p : points) {
    c.x += p.x;
    c.y += p.y;
  }
  c.x /= n;
  c.y /= n;

  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (const Point2D& p : points) {
    const double dx = p.x - c.x;
    const double dy = p.y - c.y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx + syy <= 0.0) throw PreconditionError("fit_line: all points coincide");

  // principal axis of the scatter matrix
  double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy) * kRadToDeg;
  angle = std::fmod(angle, 180.0);
  if (angle < 0.0) angle += 180.0;
  if (angle >= 180.0) angle -= 180.0;

  const double rad = angle / kRadToDeg;
  const double nx = -std::sin(rad);
  const double ny = std::cos(rad);
  double sq = 0.0;
  for (const Point2D& p : points) {
    const double r = nx * (p.x - c.x) + ny * (p.y - c.y);
    sq += r * r;
  }

  FittedLine line;
  line.angle_deg = angle;
  line.distance_origin = nx * c.x + ny * c.y;
  line.inliers.resize(points.size());
  std::iota(line.inliers.begin(), line.inliers.end(), std::size_t{0});
  line.rms_residual = std::sqrt(sq / n);
  line.centroid = c;
  return line;
}

double axial_mean_deg(std::span<const double> angles_deg) {
  double s = 0.0;
  double c = 0.0;
  for (double a : angles_deg) {
    s += std::sin(2.0 * a / kRadToDeg);
    c += std::cos(2.0 * a / kRadToDeg);
  }
  double mean = 0.5 * std::atan2(s, c) * kRadToDeg;
  if (mean < 0.0) mean += 180.0;
  if (mean >= 180.0) mean -= 180.0;
  return mean;
}

double axial_difference_deg(double a_deg, double b_deg) {
  double d = std::fmod(std::fabs(a_deg - b_deg), 180.0);
  return std::min(d, 180.0 - d);
}

namespace {

FittedLine fit_subset(std::span<const Point2D> all, std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  std::vector<Point2D> pts;
  pts.reserve(indices.size());
  for (std::size_t i : indices) pts.push_back(all[i]);
  FittedLine line = fit_line(pts);
  line.inliers = std::move(indices);
  return line;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

RebarPattern detect_pattern(std::span<const Point2D> centroids, const PatternParams& params) {
  if (!(params.angle_tol_deg > 0.0)) {
    throw PreconditionError("detect_pattern: angle tolerance must be > 0");
  }
  RebarPattern pattern;
  if (centroids.empty()) return pattern;

  const ClusterResult clusters = dbscan(centroids, params.eps, params.min_pts);
  std::vector<FittedLine> lines;
  for (const auto& members : clusters.clusters) {
    if (members.size() < 2) continue;
    try {
      lines.push_back(fit_subset(centroids, members));
    } catch (const PreconditionError&) {
      // coincident centroids carry no orientation
    }
  }
  if (lines.empty()) return pattern;

  // single-linkage grouping by orientation
  std::vector<std::size_t> parent(lines.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      if (axial_difference_deg(lines[i].angle_deg, lines[j].angle_deg) <= params.angle_tol_deg) {
        parent[find_root(parent, j)] = find_root(parent, i);
      }
    }
  }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> group_of_root(lines.size(), lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t root = find_root(parent, i);
    if (group_of_root[root] == lines.size()) {
      group_of_root[root] = groups.size();
      groups.emplace_back();
    }
    groups[group_of_root[root]].push_back(i);
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < groups.size(); ++g) {
    if (groups[g].size() > groups[best].size()) best = g;
  }

  // Merge collinear fragments of the winning group, then rebuild `lines`
  // with the merged group lines first so `group` indexes them.
  std::vector<double> group_angles;
  for (std::size_t i : groups[best]) group_angles.push_back(lines[i].angle_deg);
  double common = axial_mean_deg(group_angles);
  auto offset_along = [](const FittedLine& line, double angle_deg) {
    const double rad = angle_deg / kRadToDeg;
    return -std::sin(rad) * line.centroid.x + std::cos(rad) * line.centroid.y;
  };

  std::vector<std::size_t> order = groups[best];
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return offset_along(lines[a], common) < offset_along(lines[b], common);
  });
  std::vector<FittedLine> merged;
  std::vector<std::size_t> pending;
  double pending_offset = 0.0;
  auto flush = [&]() {
    if (pending.empty()) return;
    if (pending.size() == 1) {
      merged.push_back(lines[pending.front()]);
    } else {
      std::vector<std::size_t> members;
      for (std::size_t i : pending) {
        members.insert(members.end(), lines[i].inliers.begin(), lines[i].inliers.end());
      }
      merged.push_back(fit_subset(centroids, std::move(members)));
    }
    pending.clear();
  };
  for (std::size_t i : order) {
    const double off = offset_along(lines[i], common);
    if (!pending.empty() && off - pending_offset >= params.eps) flush();
    pending.push_back(i);
    pending_offset = off;
  }
  flush();

  group_angles.clear();
  for (const FittedLine& line : merged) group_angles.push_back(line.angle_deg);
  common = axial_mean_deg(group_angles);
  std::sort(merged.begin(), merged.end(), [&](const FittedLine& a, const FittedLine& b) {
    return offset_along(a, common) < offset_along(b, common);
  });
  for (const FittedLine& line : merged) pattern.group_offsets.push_back(offset_along(line, common));

  std::vector<bool> in_group(lines.size(), false);
  for (std::size_t i : groups[best]) in_group[i] = true;
  for (std::size_t g = 0; g < merged.size(); ++g) {
    pattern.lines.push_back(merged[g]);
    pattern.group.push_back(g);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!in_group[i]) pattern.lines.push_back(lines[i]);
  }

  pattern.parallel = merged.size() >= 2;
  if (pattern.parallel) {
    pattern.mean_angle_deg = common;
    pattern.mean_spacing_px =
        (pattern.group_offsets.back() - pattern.group_offsets.front()) /
        static_cast<double>(pattern.group_offsets.size() - 1);
  } else {
    std::vector<double> all;
    for (const FittedLine& line : pattern.lines) all.push_back(line.angle_deg);
    pattern.mean_angle_deg = axial_mean_deg(all);
    pattern.group.clear();
    pattern.group_offsets.clear();
  }
  return pattern;
}

}  // namespace rebarscan
