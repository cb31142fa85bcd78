#pragma once

#include <limits>
#include <optional>
#include <string>

namespace heatest {

/// n-th derivative of the unit-mass bump
///   b(x) = exp(-10 (x+1)^-2 (1-x)^-2) / Z on (-1, 1), 0 elsewhere.
/// Orders up to kMaxBumpOrder are available in closed form.
inline constexpr int kMaxBumpOrder = 14;
double bump(double x, int order = 0);
/// L1 normalizer Z.
double bump_normalizer();

/// One-dimensional factor x -> amp * scale^n * b^(order + n)(scale (x - center)),
/// where n is the extra derivative order requested at evaluation time.
struct BumpFactor {
  double amp = 1.0;
  double scale = 1.0;
  double center = 0.0;
  int order = 0;

  double operator()(double x, int extra = 0) const;
  double lo() const noexcept { return center - 1.0 / scale; }
  double hi() const noexcept { return center + 1.0 / scale; }
  /// Factor of the derivative of order `n`.
  BumpFactor derivative(int n) const;
  bool operator==(const BumpFactor&) const = default;
};

struct SupportBox {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double x_lo = 0.0;
  double x_hi = 0.0;
};

/// Separable space-time kernel K(t, x) = tau(t) beta(x) with smooth compactly
/// supported factors.
class Kernel {
 public:
  Kernel(BumpFactor time, BumpFactor space, int delta_order, std::string name);

  double operator()(double t, double x) const { return time_(t) * space_(x); }
  double dt(double t, double x) const { return time_(t, 1) * space_(x); }
  double laplacian(double t, double x) const { return time_(t) * space_(x, 2); }
  double grad(double t, double x) const { return time_(t) * space_(x, 1); }

  const BumpFactor& time_factor() const noexcept { return time_; }
  const BumpFactor& space_factor() const noexcept { return space_; }
  int delta_order() const noexcept { return delta_order_; }
  const std::string& name() const noexcept { return name_; }
  SupportBox support() const noexcept;

  /// K-bar with K = (-Delta)^k K-bar, present when delta_order >= 1.
  std::optional<Kernel> bar() const;
  /// Delta K as a kernel of its own (Delta-order + 1).
  Kernel laplacian_kernel() const;
  /// K(t - k, x).
  Kernel time_shifted(double k) const;

 private:
  BumpFactor time_;
  BumpFactor space_;
  int delta_order_;
  std::string name_;
};

/// K(t, x) = 2 b(2t - 1) b(x).
Kernel bump_kernel();
/// (-Delta)^k base; k = 0 returns base.
Kernel delta_order_kernel(const Kernel& base, int k);

/// Region where localized supports must lie: [0, T] x [x_lo, x_hi].
struct Domain {
  double T = std::numeric_limits<double>::infinity();
  double x_lo = 0.0;
  double x_hi = 1.0;

  static Domain unit(double T) { return Domain{T, 0.0, 1.0}; }
  static Domain whole_line() {
    const double inf = std::numeric_limits<double>::infinity();
    return Domain{inf, -inf, inf};
  }
};

/// Parabolically scaled and shifted kernel
///   delta^{-3/2} K(t / delta^2 - k, (y - x0) / delta - x)
/// with delta = sqrt(eps) in the standard convention.
class LocalizedKernel {
 public:
  LocalizedKernel(Kernel base, int k, double x, double delta, double x0);

  const Kernel& base() const noexcept { return base_; }
  int k() const noexcept { return k_; }
  double x() const noexcept { return x_; }
  double delta() const noexcept { return delta_; }
  double eps() const noexcept { return delta_ * delta_; }
  double x0() const noexcept { return x0_; }
  SupportBox support() const noexcept;

  double operator()(double t, double y) const { return time0(t) * space0(y); }
  double dt(double t, double y) const { return time1(t) * space0(y); }
  double laplacian(double t, double y) const { return time0(t) * space2(y); }
  double grad(double t, double y) const { return time0(t) * space1(y); }

  // Separable factors; the delta powers are split delta^-1 (time) and
  // delta^-1/2 (space), each derivative adding its own power.
  double time0(double t) const { return time0_at(t, k_); }
  double time1(double t) const { return time1_at(t, k_); }
  /// Time factors of the same kernel moved to time shift `k`.
  double time0_at(double t, int k) const;
  double time1_at(double t, int k) const;
  double space0(double y) const;
  double space1(double y) const;
  double space2(double y) const;

 private:
  Kernel base_;
  int k_;
  double x_;
  double delta_;
  double x0_;
  double inv_delta_;
  double inv_eps_;
  double inv_sqrt_delta_;
};

/// Localization with delta = sqrt(eps). Throws SupportViolation if the
/// support box leaves `domain`.
LocalizedKernel localize(const Kernel& base, int k, double x, double eps, double x0,
                         const Domain& domain = Domain{});
LocalizedKernel localize_delta(const Kernel& base, int k, double x, double delta, double x0,
                               const Domain& domain = Domain{});

/// Squared L2 norm of a factor's derivative of order `extra`.
double factor_norm_sq(const BumpFactor& f, int extra = 0);
/// <f^(m), g^(n)> over the real line.
double factor_inner(const BumpFactor& f, int m, const BumpFactor& g, int n);

struct KernelNorms {
  double k = 0.0;        // ||K||^2
  double dt = 0.0;       // ||d_t K||^2
  double lap = 0.0;      // ||Delta K||^2
  double grad = 0.0;     // ||grad K||^2
  double cross = 0.0;    // <d_t K, Delta K>
};
KernelNorms kernel_norms(const Kernel& K);

/// sigma^2 ||K||^2 + noise_factor^2 ||d_t K + theta0 Delta K||^2, space-time
/// norms. noise_factor = eps / delta^2 is 1 in the standard localization.
double sigma_K_sq(const Kernel& K, double sigma, double theta0, double noise_factor = 1.0);

}  // namespace heatest
