#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rebarscan/raster.hpp"

namespace rebarscan {

/// DBSCAN output. Every input index appears exactly once across
/// `clusters` and `noise`; indices inside each list are ascending and
/// clusters are numbered in first-touch order of the input sequence.
struct ClusterResult {
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> noise;
};

/// Classic DBSCAN: a point is core iff at least `min_pts` points (itself
/// included) lie within Euclidean distance `eps` (inclusive).
ClusterResult dbscan(std::span<const Point2D> points, double eps, std::size_t min_pts);

struct FittedLine {
  /// Orientation of the line direction, [0,180), image axes (y down).
  double angle_deg = 0.0;
  /// Signed offset along the unit normal (-sin a, cos a).
  double distance_origin = 0.0;
  std::vector<std::size_t> inliers;
  double rms_residual = 0.0;
  Point2D centroid;
};

/// Total-least-squares line through `points` (perpendicular residuals).
/// `inliers` is filled with 0..n-1. Throws PreconditionError on fewer than
/// two points or when all points coincide.
FittedLine fit_line(std::span<const Point2D> points);

/// Axial (mod 180) circular mean of angles in degrees, result in [0,180).
double axial_mean_deg(std::span<const double> angles_deg);

/// Smallest angle between two undirected orientations, in [0,90].
double axial_difference_deg(double a_deg, double b_deg);

struct RebarPattern {
  std::vector<FittedLine> lines;
  /// Indices into `lines` of the largest parallel group, sorted by offset.
  std::vector<std::size_t> group;
  /// Offsets of the group lines along the normal of `mean_angle_deg`.
  std::vector<double> group_offsets;
  double mean_spacing_px = 0.0;
  double mean_angle_deg = 0.0;
  bool parallel = false;
};

struct PatternParams {
  double eps = 60.0;
  std::size_t min_pts = 2;
  double angle_tol_deg = 5.0;
};

/// Clusters region centroids, fits one line per cluster (>= 2 members),
/// groups lines by orientation and summarizes the largest parallel group.
/// Collinear fragments inside a group (offsets closer than `eps`) are
/// merged into one line before spacing is measured.
RebarPattern detect_pattern(std::span<const Point2D> centroids, const PatternParams& params);

}  // namespace rebarscan
