#include "heatest/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "heatest/error.hpp"
#include "heatest/numerics.hpp"

namespace heatest {

namespace {

using Poly = std::vector<double>;  // coefficients, lowest degree first

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

Poly poly_add(Poly a, const Poly& b) {
  if (b.size() > a.size()) a.resize(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
  return a;
}

Poly poly_deriv(const Poly& a) {
  if (a.size() <= 1) return Poly{0.0};
  Poly out(a.size() - 1);
  for (std::size_t i = 1; i < a.size(); ++i) out[i - 1] = static_cast<double>(i) * a[i];
  return out;
}

double horner(const Poly& p, double x) {
  double s = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) s = s * x + p[i];
  return s;
}

// b^(n) = P_n(x) g^{-3n} exp(-10 g^-2) / Z with g = 1 - x^2 and
//   P_{n+1} = g^3 P_n' + 6 n x g^2 P_n - 40 x P_n.
struct BumpPolys {
  std::array<Poly, kMaxBumpOrder + 1> p;

  BumpPolys() {
    const Poly g{1.0, 0.0, -1.0};
    const Poly g2 = poly_mul(g, g);
    const Poly g3 = poly_mul(g2, g);
    const Poly x{0.0, 1.0};
    p[0] = Poly{1.0};
    for (int n = 0; n < kMaxBumpOrder; ++n) {
      const Poly& cur = p[static_cast<std::size_t>(n)];
      Poly a = poly_mul(g3, poly_deriv(cur));
      Poly b = poly_mul(poly_mul(Poly{0.0, 6.0 * n}, g2), cur);
      Poly c = poly_mul(Poly{0.0, -40.0}, cur);
      p[static_cast<std::size_t>(n) + 1] = poly_add(poly_add(a, b), c);
      (void)x;
    }
  }
};

const BumpPolys& polys() {
  static const BumpPolys instance;
  return instance;
}

double bump_unnormalized(double x, int order) {
  if (!(x > -1.0 && x < 1.0)) return 0.0;
  const double g = (1.0 - x) * (1.0 + x);
  const double u = -10.0 / (g * g);
  const double e = std::exp(u - 3.0 * order * std::log(g));
  if (e == 0.0) return 0.0;
  return horner(polys().p[static_cast<std::size_t>(order)], x) * e;
}

}  // namespace

double bump_normalizer() {
  static const double z =
      integrate([](double x) { return bump_unnormalized(x, 0); }, -1.0, 1.0, 1e-15, 1e-14);
  return z;
}

double bump(double x, int order) {
  if (order < 0 || order > kMaxBumpOrder) {
    throw InvalidInput("bump: derivative order " + std::to_string(order) + " not supported");
  }
  return bump_unnormalized(x, order) / bump_normalizer();
}

double BumpFactor::operator()(double x, int extra) const {
  const double s = std::pow(scale, extra);
  return amp * s * bump(scale * (x - center), order + extra);
}

BumpFactor BumpFactor::derivative(int n) const {
  return BumpFactor{amp * std::pow(scale, n), scale, center, order + n};
}

Kernel::Kernel(BumpFactor time, BumpFactor space, int delta_order, std::string name)
    : time_(time), space_(space), delta_order_(delta_order), name_(std::move(name)) {
  if (!(time.scale > 0.0) || !(space.scale > 0.0)) {
    throw InvalidInput("kernel: factor scales must be positive");
  }
  if (delta_order < 0 || 2 * delta_order > space.order) {
    throw InvalidInput("kernel: inconsistent Delta-order");
  }
}

SupportBox Kernel::support() const noexcept {
  return SupportBox{time_.lo(), time_.hi(), space_.lo(), space_.hi()};
}

std::optional<Kernel> Kernel::bar() const {
  if (delta_order_ == 0) return std::nullopt;
  // (-Delta)^k of amp s^0 b^(m - 2k)(s .) is (-1)^k amp s^2k b^(m)(s .)
  const int k = delta_order_;
  BumpFactor s = space_;
  s.order -= 2 * k;
  s.amp = space_.amp * ((k % 2 == 0) ? 1.0 : -1.0) / std::pow(space_.scale, 2 * k);
  return Kernel(time_, s, 0, name_ + "-bar");
}

Kernel Kernel::laplacian_kernel() const {
  return Kernel(time_, space_.derivative(2), delta_order_ + 1, "lap(" + name_ + ")");
}

Kernel Kernel::time_shifted(double k) const {
  BumpFactor t = time_;
  t.center += k;
  return Kernel(t, space_, delta_order_, name_);
}

Kernel bump_kernel() {
  return Kernel(BumpFactor{2.0, 2.0, 0.5, 0}, BumpFactor{1.0, 1.0, 0.0, 0}, 0, "bump");
}

Kernel delta_order_kernel(const Kernel& base, int k) {
  if (k < 0) throw InvalidInput("delta_order_kernel: k must be non-negative");
  if (k == 0) return base;
  BumpFactor s = base.space_factor().derivative(2 * k);
  if (k % 2 == 1) s.amp = -s.amp;
  return Kernel(base.time_factor(), s, base.delta_order() + k,
                base.name() + "-d" + std::to_string(k));
}

LocalizedKernel::LocalizedKernel(Kernel base, int k, double x, double delta, double x0)
    : base_(std::move(base)), k_(k), x_(x), delta_(delta), x0_(x0) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw InvalidInput("localize: delta must be positive");
  }
  inv_delta_ = 1.0 / delta_;
  inv_eps_ = 1.0 / (delta_ * delta_);
  inv_sqrt_delta_ = 1.0 / std::sqrt(delta_);
}

SupportBox LocalizedKernel::support() const noexcept {
  const SupportBox b = base_.support();
  const double e = delta_ * delta_;
  return SupportBox{(b.t_lo + k_) * e, (b.t_hi + k_) * e, x0_ + delta_ * (b.x_lo + x_),
                    x0_ + delta_ * (b.x_hi + x_)};
}

double LocalizedKernel::time0_at(double t, int k) const {
  return inv_delta_ * base_.time_factor()(t * inv_eps_ - k);
}
double LocalizedKernel::time1_at(double t, int k) const {
  return inv_delta_ * inv_eps_ * base_.time_factor()(t * inv_eps_ - k, 1);
}
double LocalizedKernel::space0(double y) const {
  return inv_sqrt_delta_ * base_.space_factor()((y - x0_) * inv_delta_ - x_);
}
double LocalizedKernel::space1(double y) const {
  return inv_sqrt_delta_ * inv_delta_ * base_.space_factor()((y - x0_) * inv_delta_ - x_, 1);
}
double LocalizedKernel::space2(double y) const {
  return inv_sqrt_delta_ * inv_eps_ * base_.space_factor()((y - x0_) * inv_delta_ - x_, 2);
}

LocalizedKernel localize_delta(const Kernel& base, int k, double x, double delta, double x0,
                               const Domain& domain) {
  LocalizedKernel lk(base, k, x, delta, x0);
  const SupportBox s = lk.support();
  constexpr double tol = 1e-12;
  if (s.t_lo < -tol || s.t_hi > domain.T * (1.0 + tol) || s.x_lo < domain.x_lo - tol ||
      s.x_hi > domain.x_hi + tol) {
    throw SupportViolation("localize: support (" + std::to_string(s.t_lo) + ", " +
                           std::to_string(s.t_hi) + ") x (" + std::to_string(s.x_lo) + ", " +
                           std::to_string(s.x_hi) + ") leaves the domain");
  }
  return lk;
}

LocalizedKernel localize(const Kernel& base, int k, double x, double eps, double x0,
                         const Domain& domain) {
  if (!(eps > 0.0)) throw InvalidInput("localize: eps must be positive");
  return localize_delta(base, k, x, std::sqrt(eps), x0, domain);
}

double factor_inner(const BumpFactor& f, int m, const BumpFactor& g, int n) {
  const double lo = std::max(f.lo(), g.lo());
  const double hi = std::min(f.hi(), g.hi());
  if (!(hi > lo)) return 0.0;
  return integrate([&](double x) { return f(x, m) * g(x, n); }, lo, hi, 1e-14, 1e-10);
}

double factor_norm_sq(const BumpFactor& f, int extra) { return factor_inner(f, extra, f, extra); }

KernelNorms kernel_norms(const Kernel& K) {
  const BumpFactor& t = K.time_factor();
  const BumpFactor& s = K.space_factor();
  const double tt = factor_norm_sq(t);
  const double t1 = factor_norm_sq(t, 1);
  const double ss = factor_norm_sq(s);
  const double s1 = factor_norm_sq(s, 1);
  const double s2 = factor_norm_sq(s, 2);
  KernelNorms n;
  n.k = tt * ss;
  n.dt = t1 * ss;
  n.lap = tt * s2;
  n.grad = tt * s1;
  n.cross = factor_inner(t, 1, t, 0) * factor_inner(s, 0, s, 2);
  return n;
}

double sigma_K_sq(const Kernel& K, double sigma, double theta0, double noise_factor) {
  if (!(theta0 >= 0.0)) throw InvalidInput("sigma_K_sq: theta0 must be non-negative");
  const KernelNorms n = kernel_norms(K);
  const double drift = n.dt + 2.0 * theta0 * n.cross + theta0 * theta0 * n.lap;
  return sigma * sigma * n.k + noise_factor * noise_factor * drift;
}

}  // namespace heatest
