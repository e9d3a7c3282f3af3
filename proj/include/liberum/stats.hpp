#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "liberum/error.hpp"

namespace liberum::stats {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw InvalidInput("mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw InvalidInput("median of empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Pearson correlation; nullopt when either side has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

inline int sign(double v) { return (v > 0.0) - (v < 0.0); }

// Kendall's tau-b over all pairs, O(n^2). Returns 0 when either ranking is
// entirely tied (the tau-b denominator vanishes).
inline double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("kendall_tau_b: length mismatch");
  if (x.size() < 2) throw InvalidInput("kendall_tau_b: need at least two items");
  long long concordant_minus_discordant = 0;
  long long untied_x = 0, untied_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const int sx = sign(x[i] - x[j]);
      const int sy = sign(y[i] - y[j]);
      concordant_minus_discordant += sx * sy;
      untied_x += sx != 0;
      untied_y += sy != 0;
    }
  }
  if (untied_x == 0 || untied_y == 0) return 0.0;
  return static_cast<double>(concordant_minus_discordant) /
         std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
}

struct MannKendallResult {
  double s = 0.0;        // sum of pairwise signs
  double variance = 0.0; // tie-corrected variance of s
  double z = 0.0;        // continuity-corrected normal score
  double p_decreasing = 1.0;  // one-sided p for a downward trend
  double p_increasing = 1.0;
  double p_two_sided = 1.0;
};

// Mann-Kendall monotone trend test with the usual tie correction.
inline MannKendallResult mann_kendall(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 3) throw InvalidInput("mann_kendall: need at least three points");
  MannKendallResult r;
  long long s = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += sign(series[j] - series[i]);
  r.s = static_cast<double>(s);

  std::map<double, long long> groups;
  for (double v : series) ++groups[v];
  const double nn = static_cast<double>(n);
  double var = nn * (nn - 1.0) * (2.0 * nn + 5.0);
  for (const auto& [value, count] : groups) {
    const double t = static_cast<double>(count);
    var -= t * (t - 1.0) * (2.0 * t + 5.0);
  }
  r.variance = var / 18.0;
  if (r.variance <= 0.0) return r;

  const double sd = std::sqrt(r.variance);
  if (s > 0) r.z = (r.s - 1.0) / sd;
  else if (s < 0) r.z = (r.s + 1.0) / sd;
  const auto upper_tail = [](double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); };
  r.p_increasing = upper_tail(r.z);
  r.p_decreasing = upper_tail(-r.z);
  r.p_two_sided = std::min(1.0, 2.0 * upper_tail(std::abs(r.z)));
  return r;
}

}  // namespace liberum::stats
