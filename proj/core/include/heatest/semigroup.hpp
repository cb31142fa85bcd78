#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "heatest/diffusivity.hpp"

namespace heatest {

/// Values at the interior nodes lo + (j + 1) dx, dx = (hi - lo) / (n + 1),
/// of a function vanishing at lo and hi.
struct GridFunction {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> values;

  double dx() const noexcept { return (hi - lo) / static_cast<double>(values.size() + 1); }
  double node(std::size_t j) const noexcept {
    return lo + static_cast<double>(j + 1) * dx();
  }
  /// Piecewise linear interpolation, 0 outside (lo, hi).
  double operator()(double x) const;
  double norm_l2() const;
};

/// Function with compact support [lo, hi].
struct CompactFunction {
  std::function<double(double)> f;
  double lo = -1.0;
  double hi = 1.0;
};

struct SemigroupOptions {
  /// Stop refining once doubling changes the result by less than this in L2.
  double tol = 1e-6;
  std::size_t initial_cells = 512;
  std::size_t initial_steps = 32;
  int max_doublings = 8;
};

/// S(t) phi for d/dy theta(y) d/dy on (lo, hi) with Dirichlet conditions.
/// Constant theta: sine-basis diagonal. Otherwise Crank-Nicolson in flux
/// form. Throws ConvergenceFailure when refinement does not settle.
GridFunction dirichlet_semigroup(const std::function<double(double)>& phi, double t, double lo,
                                 double hi, double theta, const SemigroupOptions& opt = {});
GridFunction dirichlet_semigroup(const std::function<double(double)>& phi, double t, double lo,
                                 double hi, const std::function<double(double)>& theta,
                                 const SemigroupOptions& opt = {});
/// On (-L, L); theta read in the same coordinate.
GridFunction dirichlet_semigroup(const std::function<double(double)>& phi, double t, double L,
                                 const DiffusivityField& theta, const SemigroupOptions& opt = {});

/// Whole-line heat semigroup exp(t theta0 d^2/dy^2) phi at x, by quadrature
/// of the Gaussian kernel over the support of phi.
double whole_line_heat(const CompactFunction& phi, double t, double theta0, double x);

struct TrotterKatoOptions {
  /// Radius of the ball around x0 in space units.
  double ball_radius = 0.25;
  std::size_t n_shifts = 9;
  /// Half-width of the window (around each shift) on which S_delta is
  /// solved when the rescaled domain is larger; 0 picks one from t.
  double window = 0.0;
  SemigroupOptions semigroup;
};

/// max over shifts y in [-r h / delta, r h / delta] of
///   || (S_delta(t) - S_0(t)) phi(. - y) ||_{L^p}
/// with S_delta on (-x0 / delta, (1 - x0) / delta) for theta(x0 + delta y)
/// and S_0 the whole-line semigroup for theta(x0).
double trotter_kato_error(const CompactFunction& phi, double t, double delta, double h, double p,
                          const DiffusivityField& theta, double x0,
                          const TrotterKatoOptions& opt = {});

}  // namespace heatest
