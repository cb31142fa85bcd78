#pragma once

#include <cmath>
#include <cstddef>
#include <functional>

namespace testsupport {

// Unnormalized bump exp(g(x)), g = -10 / (1 - x^2)^2, and its derivatives,
// written out by hand so the tests do not lean on the library formulas.
inline long double g0(long double x) { return -10.0L / ((1 - x * x) * (1 - x * x)); }
inline long double g1(long double x) {
  const long double u = 1 - x * x;
  return -40.0L * x / (u * u * u);
}
inline long double g2(long double x) {
  const long double u = 1 - x * x;
  return -40.0L * (1 + 5 * x * x) / (u * u * u * u);
}
inline long double raw_bump(long double x) { return std::fabs(x) < 1 ? std::exp(g0(x)) : 0.0L; }
inline long double raw_bump1(long double x) {
  return std::fabs(x) < 1 ? g1(x) * std::exp(g0(x)) : 0.0L;
}
inline long double raw_bump2(long double x) {
  return std::fabs(x) < 1 ? (g2(x) + g1(x) * g1(x)) * std::exp(g0(x)) : 0.0L;
}

/// Composite Simpson rule with n (even) panels.
inline long double simpson(const std::function<long double(long double)>& f, long double a,
                           long double b, std::size_t n = 200000) {
  if (n % 2) ++n;
  const long double h = (b - a) / static_cast<long double>(n);
  long double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) {
    s += f(a + h * static_cast<long double>(i)) * (i % 2 ? 4.0L : 2.0L);
  }
  return s * h / 3.0L;
}

inline long double bump_mass() { return simpson(raw_bump, -1.0L, 1.0L); }

inline double rel(double a, double b) {
  const double d = std::max(std::fabs(a), std::fabs(b));
  return d == 0.0 ? 0.0 : std::fabs(a - b) / d;
}

}  // namespace testsupport
