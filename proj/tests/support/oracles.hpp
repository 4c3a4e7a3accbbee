#pragma once

// Independent brute-force references used by the tests. Nothing here calls
// into the library code under test except for plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "rebarscan/raster.hpp"

namespace oracle {

using rebarscan::BinaryMask;
using rebarscan::Point2D;

// DBSCAN as a graph definition: clusters are connected components of the
// core points under the eps relation, numbered by their smallest core
// index; a border point joins the lowest-numbered cluster with a core point
// in its neighbourhood.
struct Partition {
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> noise;
};

inline Partition dbscan(const std::vector<Point2D>& pts, double eps, std::size_t min_pts) {
  const std::size_t n = pts.size();
  auto near = [&](std::size_t a, std::size_t b) {
    const double dx = pts[a].x - pts[b].x, dy = pts[a].y - pts[b].y;
    return dx * dx + dy * dy <= eps * eps;
  };
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) c += near(i, j) ? 1 : 0;
    core[i] = c >= min_pts ? 1 : 0;
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (core[i] && core[j] && near(i, j)) parent[find(i)] = find(j);
    }
  }
  std::map<std::size_t, std::size_t> min_index_of_root;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    const std::size_t r = find(i);
    if (!min_index_of_root.contains(r)) min_index_of_root[r] = i;
  }
  std::vector<std::pair<std::size_t, std::size_t>> order;  // (min index, root)
  for (auto [r, m] : min_index_of_root) order.emplace_back(m, r);
  std::sort(order.begin(), order.end());
  std::map<std::size_t, std::size_t> cluster_of_root;
  for (std::size_t c = 0; c < order.size(); ++c) cluster_of_root[order[c].second] = c;

  Partition out;
  out.clusters.resize(order.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      out.clusters[cluster_of_root[find(i)]].push_back(i);
      continue;
    }
    std::size_t best = order.size();
    for (std::size_t j = 0; j < n; ++j) {
      if (core[j] && near(i, j)) best = std::min(best, cluster_of_root[find(j)]);
    }
    if (best == order.size()) out.noise.push_back(i);
    else out.clusters[best].push_back(i);
  }
  return out;
}

// Connected components with union-find; returns a label per pixel (-1 for
// background) with labels numbered in raster order of first pixel.
inline std::vector<int> label_components(const BinaryMask& m, bool eight) {
  const int w = m.width(), h = m.height();
  const std::size_t n = m.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m(x, y)) continue;
      const std::size_t i = m.index(x, y);
      if (x > 0 && m(x - 1, y)) unite(i, m.index(x - 1, y));
      if (y > 0 && m(x, y - 1)) unite(i, m.index(x, y - 1));
      if (eight && y > 0 && x > 0 && m(x - 1, y - 1)) unite(i, m.index(x - 1, y - 1));
      if (eight && y > 0 && x + 1 < w && m(x + 1, y - 1)) unite(i, m.index(x + 1, y - 1));
    }
  }
  std::vector<int> labels(n, -1);
  std::map<std::size_t, int> ids;
  for (std::size_t i = 0; i < n; ++i) {
    if (!m[i]) continue;
    const std::size_t r = find(i);
    auto it = ids.find(r);
    if (it == ids.end()) it = ids.emplace(r, static_cast<int>(ids.size())).first;
    labels[i] = it->second;
  }
  return labels;
}

// Exact integer HSV conversion on the half-degree hue scale.
inline rebarscan::HsvPixel hsv(rebarscan::Rgb c) {
  const int r = c.r, g = c.g, b = c.b;
  const int v = std::max({r, g, b});
  const int d = v - std::min({r, g, b});
  rebarscan::HsvPixel out{0, 0, static_cast<std::uint8_t>(v)};
  if (v == 0 || d == 0) return out;
  out.s = static_cast<std::uint8_t>((510 * d + v) / (2 * v));
  // degrees = num / d with num an integer
  long num = 0;
  if (v == r) num = 60L * (g - b);
  else if (v == g) num = 120L * d + 60L * (b - r);
  else num = 240L * d + 60L * (r - g);
  if (num < 0) num += 360L * d;
  // round(num / (2d)) half up
  out.h = static_cast<std::uint8_t>(((num + d) / (2L * d)) % 180);
  return out;
}

// Cell occupancy keyed by (floor(x/cell), floor(y/cell)) using only
// linear scans.
struct Bucket {
  long long cx, cy;
  std::size_t count;
};

inline std::vector<Bucket> bucket(const std::vector<Point2D>& pts, double cell) {
  std::vector<Bucket> out;
  for (const Point2D& p : pts) {
    const auto cx = static_cast<long long>(std::floor(p.x / cell));
    const auto cy = static_cast<long long>(std::floor(p.y / cell));
    bool found = false;
    for (Bucket& b : out) {
      if (b.cx == cx && b.cy == cy) {
        ++b.count;
        found = true;
      }
    }
    if (!found) out.push_back({cx, cy, 1});
  }
  return out;
}

// Sum of absolute horizontal and vertical neighbour differences over all
// channels inside the inclusive box.
inline double total_variation(const rebarscan::RasterImage& img, const rebarscan::BBox& b) {
  double tv = 0.0;
  auto diff = [](rebarscan::Rgb p, rebarscan::Rgb q) {
    return std::abs(int{p.r} - int{q.r}) + std::abs(int{p.g} - int{q.g}) +
           std::abs(int{p.b} - int{q.b});
  };
  for (int y = b.y_min; y <= b.y_max; ++y) {
    for (int x = b.x_min; x <= b.x_max; ++x) {
      if (x < b.x_max) tv += diff(img(x, y), img(x + 1, y));
      if (y < b.y_max) tv += diff(img(x, y), img(x, y + 1));
    }
  }
  return tv;
}

// Normalized 2D Gaussian weight at offset (dx, dy), computed from the
// 2D formula directly.
inline double gaussian2d_weight(int dx, int dy, int k, double sigma) {
  double total = 0.0;
  for (int j = -k; j <= k; ++j) {
    for (int i = -k; i <= k; ++i) total += std::exp(-(i * i + j * j) / (2 * sigma * sigma));
  }
  return std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) / total;
}

}  // namespace oracle
