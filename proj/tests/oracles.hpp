// Reference computations for the tests, written independently of the
// library's integrators.
#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

// Free response of J x'' + c x' + k x = 0 from x(0) = 1, x'(0) = 0.
inline double oscillator(double t, double k, double c, double j) {
  const double wn = std::sqrt(k / j);
  const double z = c / (2.0 * std::sqrt(k * j));
  if (z < 1.0 - 1e-9) {
    const double wd = wn * std::sqrt(1.0 - z * z);
    return std::exp(-z * wn * t) * (std::cos(wd * t) + z * wn / wd * std::sin(wd * t));
  }
  if (z > 1.0 + 1e-9) {
    const double s = wn * std::sqrt(z * z - 1.0);
    const double r1 = -z * wn + s, r2 = -z * wn - s;
    return (r2 * std::exp(r1 * t) - r1 * std::exp(r2 * t)) / (r2 - r1);
  }
  return std::exp(-wn * t) * (1.0 + wn * t);
}

// First time |x(t)| <= band (band relative to the unit release), searched up
// to t_max. Zero crossings count as entering the band. NaN if never.
inline double first_entry(double k, double c, double j, double band, double t_max, double h = 2e-3) {
  double t0 = 0.0, x0 = oscillator(0.0, k, c, j);
  for (double t1 = h; t1 <= t_max + h; t1 += h) {
    const double x1 = oscillator(t1, k, c, j);
    if (std::abs(x1) <= band || (x0 > 0) != (x1 > 0)) {
      // Bisect on the first point inside the band; for a sign change the
      // entry lies before the zero.
      double lo = t0, hi = t1;
      if (std::abs(x1) > band) {
        double a = t0, b = t1;
        for (int i = 0; i < 60; ++i) {
          const double m = 0.5 * (a + b);
          ((oscillator(m, k, c, j) > 0) == (x0 > 0) ? a : b) = m;
        }
        hi = b;
      }
      for (int i = 0; i < 60; ++i) {
        const double m = 0.5 * (lo + hi);
        (std::abs(oscillator(m, k, c, j)) <= band ? hi : lo) = m;
      }
      return hi;
    }
    t0 = t1;
    x0 = x1;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

struct GridHit {
  double k = 0.0, c = 0.0;
  double log_step_k = 0.0, log_step_c = 0.0;  // natural-log cell sizes
};

// n x n log grid over physically admissible (k, c), minimising
// |T - T*| / T* + |zeta - zeta0|.
inline GridHit grid_search(double j, double band, double target, double zeta0, int n = 100,
                           double omega_min = 0.5, double omega_max = 500.0, double zeta_min = 0.5,
                           double zeta_max = 1.2) {
  const double k_lo = std::log(j * omega_min * omega_min), k_hi = std::log(j * omega_max * omega_max);
  const double c_lo = std::log(2.0 * zeta_min * j * omega_min), c_hi = std::log(2.0 * zeta_max * j * omega_max);
  GridHit best;
  best.log_step_k = (k_hi - k_lo) / (n - 1);
  best.log_step_c = (c_hi - c_lo) / (n - 1);
  double best_cost = std::numeric_limits<double>::infinity();
  for (int a = 0; a < n; ++a) {
    const double k = std::exp(k_lo + a * best.log_step_k);
    for (int b = 0; b < n; ++b) {
      const double c = std::exp(c_lo + b * best.log_step_c);
      const double zeta = c / (2.0 * std::sqrt(k * j));
      if (std::abs(zeta - zeta0) >= best_cost) continue;
      const double t = first_entry(k, c, j, band, 3.0 * target);
      const double cost = (std::isnan(t) ? 3.0 : std::abs(t - target) / target) + std::abs(zeta - zeta0);
      if (cost < best_cost) {
        best_cost = cost;
        best.k = k;
        best.c = c;
      }
    }
  }
  return best;
}

}  // namespace oracle
