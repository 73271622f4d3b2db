#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace stopbound::detail {

// Scaled complementary error function exp(z^2) * erfc(z).
inline double erfcx(double z) {
  if (z < 4.0) {
    const double e = std::exp(z * z);
    if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
    return e * std::erfc(z);
  }
  // Laplace continued fraction, evaluated bottom-up; 60 terms are plenty
  // for z >= 4.
  double f = z;
  for (int k = 60; k >= 1; --k) f = z + (0.5 * k) / f;
  return 1.0 / (std::sqrt(std::numbers::pi) * f);
}

// sqrt(2 pi) * exp(s^2 / 2) * Phi(s), Phi the standard normal cdf.
inline double gaussian_mills(double s) {
  return std::sqrt(std::numbers::pi / 2.0) * erfcx(-s / std::numbers::sqrt2);
}

// Root of (1 - a^2) * gaussian_mills(a) = a on (0, 1).
inline double tangency_constant() {
  static const double alpha = [] {
    double lo = 0.5;
    double hi = 1.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if ((1.0 - mid * mid) * gaussian_mills(mid) - mid > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }();
  return alpha;
}

// Mixture of space-time exponentials
//   (1 - a^2) * int_0^inf exp(l x - l^2 tau / 2) dl,
// convex in x and tangent to x / tau at x = a sqrt(tau).
inline double exponential_mixture(double tau, double x) {
  const double a = tangency_constant();
  const double rt = std::sqrt(tau);
  return (1.0 - a * a) / rt * gaussian_mills(x / rt);
}

}  // namespace stopbound::detail
