#include "heatest/semigroup.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

#include "heatest/error.hpp"
#include "heatest/numerics.hpp"
#include "heatest/tridiag.hpp"

namespace heatest {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> sample(const std::function<double(double)>& phi, double lo, double hi,
                           std::size_t cells) {
  std::vector<double> v(cells - 1);
  const double dx = (hi - lo) / static_cast<double>(cells);
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = phi(lo + static_cast<double>(j + 1) * dx);
  return v;
}

std::vector<double> sine_step(const std::vector<double>& u, double len, double theta, double t) {
  const std::size_t n = u.size();
  std::vector<double> in = u;
  std::vector<double> c(n);
  std::vector<double> out(n);
  fftw_plan fwd;
  fftw_plan inv;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fwd = fftw_plan_r2r_1d(static_cast<int>(n), in.data(), c.data(), FFTW_RODFT00, FFTW_ESTIMATE);
    inv = fftw_plan_r2r_1d(static_cast<int>(n), c.data(), out.data(), FFTW_RODFT00,
                           FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  const double norm = 1.0 / (2.0 * static_cast<double>(n + 1));
  for (std::size_t m = 0; m < n; ++m) {
    const double k = static_cast<double>(m + 1) * std::numbers::pi / len;
    c[m] *= std::exp(-theta * k * k * t) * norm;
  }
  fftw_execute(inv);
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  return out;
}

std::vector<double> crank_nicolson(const std::vector<double>& u0, double lo, double hi,
                                   const std::function<double(double)>& theta, double t,
                                   std::size_t steps) {
  const std::size_t n = u0.size();
  const double dx = (hi - lo) / static_cast<double>(n + 1);
  const double dt = t / static_cast<double>(steps);
  Tridiagonal a;
  a.lower.assign(n, 0.0);
  a.diag.assign(n, 0.0);
  a.upper.assign(n, 0.0);
  const double inv = 1.0 / (dx * dx);
  for (std::size_t j = 0; j < n; ++j) {
    const double left = theta(lo + (static_cast<double>(j) + 0.5) * dx) * inv;
    const double right = theta(lo + (static_cast<double>(j) + 1.5) * dx) * inv;
    a.diag[j] = -(left + right);
    if (j > 0) a.lower[j] = left;
    if (j + 1 < n) a.upper[j] = right;
  }
  const Tridiagonal explicit_part = a.shifted_identity(0.5 * dt);
  const ThomasSolver implicit_part(a.shifted_identity(-0.5 * dt));
  std::vector<double> u = u0;
  std::vector<double> rhs(n);
  for (std::size_t s = 0; s < steps; ++s) {
    explicit_part.apply(u, rhs);
    implicit_part.solve(rhs, u);
  }
  return u;
}

// L2 distance between a grid and its refinement, on the coarse nodes.
double refinement_change(const std::vector<double>& coarse, const std::vector<double>& fine,
                         double dx_coarse) {
  double s = 0.0;
  for (std::size_t j = 0; j < coarse.size(); ++j) {
    const double d = fine[2 * j + 1] - coarse[j];
    s += d * d;
  }
  return std::sqrt(s * dx_coarse);
}

template <class Step>
GridFunction refine(const std::function<double(double)>& phi, double lo, double hi,
                    const SemigroupOptions& opt, Step&& step) {
  std::size_t cells = std::max<std::size_t>(opt.initial_cells, 4);
  std::size_t steps = std::max<std::size_t>(opt.initial_steps, 1);
  std::vector<double> prev = step(sample(phi, lo, hi, cells), steps);
  double change = std::numeric_limits<double>::infinity();
  for (int d = 0; d < opt.max_doublings; ++d) {
    const double dx = (hi - lo) / static_cast<double>(cells);
    cells *= 2;
    steps *= 2;
    std::vector<double> next = step(sample(phi, lo, hi, cells), steps);
    change = refinement_change(prev, next, dx);
    prev = std::move(next);
    if (change < opt.tol) return GridFunction{lo, hi, std::move(prev)};
  }
  throw ConvergenceFailure("dirichlet_semigroup: refinement change " + std::to_string(change) +
                           " above tolerance after " + std::to_string(opt.max_doublings) +
                           " doublings");
}

void check_args(double t, double lo, double hi) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput("semigroup: t must be >= 0");
  if (!(hi > lo) || !std::isfinite(hi - lo)) throw InvalidInput("semigroup: empty interval");
}

}  // namespace

double GridFunction::operator()(double x) const {
  if (!(x > lo && x < hi) || values.empty()) return 0.0;
  const double h = dx();
  const double s = (x - lo) / h;  // node j sits at s = j + 1
  const auto i = static_cast<std::size_t>(std::floor(s));
  const double f = s - static_cast<double>(i);
  const double left = i == 0 ? 0.0 : values[i - 1];
  const double right = i >= values.size() ? 0.0 : values[i];
  return (1.0 - f) * left + f * right;
}

double GridFunction::norm_l2() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s * dx());
}

GridFunction dirichlet_semigroup(const std::function<double(double)>& phi, double t, double lo,
                                 double hi, double theta, const SemigroupOptions& opt) {
  check_args(t, lo, hi);
  if (!(theta > 0.0)) throw InvalidInput("semigroup: theta must be positive");
  if (t == 0.0) {
    const std::size_t cells = std::max<std::size_t>(opt.initial_cells, 4);
    return GridFunction{lo, hi, sample(phi, lo, hi, cells)};
  }
  const double len = hi - lo;
  return refine(phi, lo, hi, opt, [&](const std::vector<double>& u, std::size_t) {
    return sine_step(u, len, theta, t);
  });
}

GridFunction dirichlet_semigroup(const std::function<double(double)>& phi, double t, double lo,
                                 double hi, const std::function<double(double)>& theta,
                                 const SemigroupOptions& opt) {
  check_args(t, lo, hi);
  if (t == 0.0) {
    const std::size_t cells = std::max<std::size_t>(opt.initial_cells, 4);
    return GridFunction{lo, hi, sample(phi, lo, hi, cells)};
  }
  return refine(phi, lo, hi, opt, [&](const std::vector<double>& u, std::size_t steps) {
    return crank_nicolson(u, lo, hi, theta, t, steps);
  });
}

GridFunction dirichlet_semigroup(const std::function<double(double)>& phi, double t, double L,
                                 const DiffusivityField& theta, const SemigroupOptions& opt) {
  if (!(L > 0.0)) throw InvalidInput("semigroup: L must be positive");
  if (theta.is_constant()) return dirichlet_semigroup(phi, t, -L, L, theta(0.0), opt);
  return dirichlet_semigroup(phi, t, -L, L, [&theta](double y) { return theta(y); }, opt);
}

double whole_line_heat(const CompactFunction& phi, double t, double theta0, double x) {
  if (!(t >= 0.0)) throw InvalidInput("whole_line_heat: t must be >= 0");
  if (!(theta0 > 0.0)) throw InvalidInput("whole_line_heat: theta0 must be positive");
  if (t == 0.0) return (x >= phi.lo && x <= phi.hi) ? phi.f(x) : 0.0;
  const double var = 2.0 * theta0 * t;
  const double sd = std::sqrt(var);
  const double lo = std::max(phi.lo, x - 40.0 * sd);
  const double hi = std::min(phi.hi, x + 40.0 * sd);
  if (!(hi > lo)) return 0.0;
  const auto panels = static_cast<std::size_t>(
      std::clamp(std::ceil(2.0 * (hi - lo) / sd), 8.0, 4096.0));
  std::vector<double> br(panels + 1);
  for (std::size_t i = 0; i <= panels; ++i) {
    br[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(panels);
  }
  const QuadratureRule q = composite_gauss_legendre(br, 16);
  const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
  return c * q.apply([&](double z) {
    const double d = x - z;
    return std::exp(-d * d / (2.0 * var)) * phi.f(z);
  });
}

double trotter_kato_error(const CompactFunction& phi, double t, double delta, double h, double p,
                          const DiffusivityField& theta, double x0,
                          const TrotterKatoOptions& opt) {
  if (!(delta > 0.0) || !(h > 0.0)) throw InvalidInput("trotter_kato: delta and h must be positive");
  if (!(x0 > 0.0 && x0 < 1.0)) throw InvalidInput("trotter_kato: x0 must lie in (0, 1)");
  if (!(p >= 1.0)) throw InvalidInput("trotter_kato: p must be >= 1");
  if (opt.n_shifts == 0) throw InvalidInput("trotter_kato: need at least one shift");
  if (!(t >= 0.0)) throw InvalidInput("trotter_kato: t must be >= 0");
  if (t == 0.0) return 0.0;
  const double d_lo = -x0 / delta;
  const double d_hi = (1.0 - x0) / delta;
  const double theta0 = theta(x0);
  const double radius = opt.ball_radius * h / delta;
  const double pad = opt.window > 0.0 ? opt.window : 8.0 * std::sqrt(2.0 * theta.max() * t) + 1.0;
  const double tail = 40.0 * std::sqrt(2.0 * theta0 * t) + 1.0;
  const bool inf_norm = std::isinf(p);
  auto scaled_theta = [&](double y) { return theta(x0 + delta * y); };

  double worst = 0.0;
  for (std::size_t i = 0; i < opt.n_shifts; ++i) {
    const double y = opt.n_shifts == 1
                         ? 0.0
                         : -radius + 2.0 * radius * static_cast<double>(i) /
                                         static_cast<double>(opt.n_shifts - 1);
    if (!(y + phi.lo > d_lo && y + phi.hi < d_hi)) {
      throw SupportViolation("trotter_kato: shifted support leaves the rescaled domain");
    }
    const CompactFunction shifted{[&phi, y](double u) {
                                    const double v = u - y;
                                    return (v >= phi.lo && v <= phi.hi) ? phi.f(v) : 0.0;
                                  },
                                  phi.lo + y, phi.hi + y};
    const double wlo = std::max(d_lo, shifted.lo - pad);
    const double whi = std::min(d_hi, shifted.hi + pad);
    const GridFunction sd =
        theta.is_constant()
            ? dirichlet_semigroup(shifted.f, t, wlo, whi, theta0, opt.semigroup)
            : dirichlet_semigroup(shifted.f, t, wlo, whi,
                                  std::function<double(double)>(scaled_theta), opt.semigroup);
    double acc = 0.0;
    for (std::size_t j = 0; j < sd.values.size(); ++j) {
      const double diff = std::abs(sd.values[j] - whole_line_heat(shifted, t, theta0, sd.node(j)));
      acc = inf_norm ? std::max(acc, diff) : acc + std::pow(diff, p) * sd.dx();
    }
    // outside the window S_delta vanishes (or is negligible)
    for (const auto& [a, b] : {std::pair{wlo - tail, wlo}, std::pair{whi, whi + tail}}) {
      std::vector<double> br(65);
      for (int k = 0; k <= 64; ++k) br[k] = a + (b - a) * k / 64.0;
      const QuadratureRule q = composite_gauss_legendre(br, 8);
      if (inf_norm) {
        for (double z : q.nodes) acc = std::max(acc, std::abs(whole_line_heat(shifted, t, theta0, z)));
      } else {
        acc += q.apply([&](double z) {
          return std::pow(std::abs(whole_line_heat(shifted, t, theta0, z)), p);
        });
      }
    }
    worst = std::max(worst, inf_norm ? acc : std::pow(acc, 1.0 / p));
  }
  return worst;
}

}  // namespace heatest
