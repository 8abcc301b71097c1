// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace cbsnr {

/// Per-slot cost of the two gate implementations as a function of the UE count:
///   naive(U) = c0 + cU * U
///   event(U) = c0e + cG * G + cH * (A + G) * log2(U)
/// with A and G the per-slot activation and new-grant rates.
struct CostModel {
  double c0 = 0.0;
  double cU = 1.0;
  double c0e = 0.0;
  double cG = 0.0;
  double cH = 1.0;
  double A = 1.0;
  double G = 1.0;

  double naive(double u) const { return c0 + cU * u; }
  double event(double u) const { return c0e + cG * G + cH * (A + G) * std::log2(u); }
  double gap(double u) const { return naive(u) - event(u); }
};

struct CostPoint {
  double u = 0.0;
  double naive = 0.0;
  double event = 0.0;
};

inline std::vector<CostPoint> cost_curves(const CostModel& m, std::span<const double> us) {
  std::vector<CostPoint> out;
  for (double u : us) out.push_back({u, m.naive(u), m.event(u)});
  return out;
}

struct Crossover {
  std::optional<double> u_star;  // largest U where naive and event cost meet
  int sign_changes = 0;          // crossings found on the scan grid
  bool unique() const { return sign_changes == 1; }
};

/// Scans [u_min, u_max] on a geometric grid, then bisects the last sign change
/// of naive - event. Beyond U* the event-driven gate is cheaper.
inline Crossover find_crossover(const CostModel& m, double u_min = 1.0, double u_max = 1e6, int grid = 4000) {
  if (!(u_min > 0.0) || !(u_max > u_min)) throw std::invalid_argument("find_crossover: need 0 < u_min < u_max");
  Crossover out;
  const double ratio = std::pow(u_max / u_min, 1.0 / grid);
  double prev_u = u_min;
  double prev = m.gap(prev_u);
  std::optional<std::pair<double, double>> last;
  for (int i = 1; i <= grid; ++i) {
    const double u = i == grid ? u_max : u_min * std::pow(ratio, i);
    const double g = m.gap(u);
    if ((prev < 0.0) != (g < 0.0)) {
      ++out.sign_changes;
      last = {prev_u, u};
    }
    prev_u = u;
    prev = g;
  }
  if (!last) return out;
  double lo = last->first, hi = last->second;
  const bool lo_neg = m.gap(lo) < 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((m.gap(mid) < 0.0) == lo_neg) lo = mid; else hi = mid;
  }
  out.u_star = 0.5 * (lo + hi);
  return out;
}

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit fit_affine(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_affine: need two or more paired samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_affine: x has no spread");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
  }
  f.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return f;
}

}  // namespace cbsnr
