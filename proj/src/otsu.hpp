#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

namespace rebarscan::detail {

// Split index k maximizing between-class variance for {0..k} | {k+1..n-1}.
// Tied maxima resolve to the mean of the tied indices. nullopt when no
// split separates two non-empty classes.
inline std::optional<double> otsu_split(std::span<const double> hist) {
  const std::size_t bins = hist.size();
  if (bins < 2) return std::nullopt;
  double total = 0.0;
  double mean_total = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    total += hist[i];
    mean_total += static_cast<double>(i) * hist[i];
  }
  if (total <= 0.0) return std::nullopt;
  mean_total /= total;

  std::vector<double> between(bins - 1, 0.0);
  double w0 = 0.0;
  double mu0 = 0.0;
  double best = 0.0;
  for (std::size_t k = 0; k + 1 < bins; ++k) {
    w0 += hist[k] / total;
    mu0 += static_cast<double>(k) * hist[k] / total;
    const double w1 = 1.0 - w0;
    if (w0 <= 0.0 || w1 <= 1e-15) continue;
    const double num = mean_total * w0 - mu0;
    between[k] = num * num / (w0 * w1);
    best = std::max(best, between[k]);
  }
  if (best <= 0.0) return std::nullopt;

  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k + 1 < bins; ++k) {
    if (between[k] >= best * (1.0 - 1e-12)) {
      sum += static_cast<double>(k);
      ++count;
    }
  }
  return sum / count;
}

}  // namespace rebarscan::detail
