#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace heatest {

/// Recursive pairwise summation; the split points depend only on the length,
/// so the result is reproducible for a fixed input order.
double pairwise_sum(std::span<const double> v);

/// Adaptive Gauss-Kronrod (61 points) on [a, b]. Throws ConvergenceFailure
/// when the error estimate stays above `abs_tol` (and `rel_tol` * |I|).
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12, double rel_tol = 1e-12);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
  template <class F>
  double apply(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

/// n-point Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(std::size_t n, double a, double b);
/// Gauss-Legendre with n points on every panel [breaks[i], breaks[i+1]].
QuadratureRule composite_gauss_legendre(std::span<const double> breaks, std::size_t n);
/// Breakpoints a, a + h0, a + h0 r, ... growing geometrically up to b.
std::vector<double> graded_breaks(double a, double b, double first, double ratio);
/// n-point Gauss-Hermite rule for the weight exp(-u^2).
QuadratureRule gauss_hermite(std::size_t n);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope x. Needs at least 2 points
/// with distinct x; slope_se is 0 for exactly 2 points.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Standard normal quantile.
double normal_quantile(double p);

double median(std::vector<double> v);

}  // namespace heatest
