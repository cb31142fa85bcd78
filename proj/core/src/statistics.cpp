#include "heatest/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "heatest/error.hpp"

namespace heatest {

std::size_t time_shift_count(double T, double delta) {
  // T / delta^2 is often an integer that rounds just below itself
  const double ratio = T / (delta * delta);
  const double fl = std::floor(ratio * (1.0 + 1e-12));
  return fl >= 1.0 ? static_cast<std::size_t>(fl) - 1 : 0;
}

void check_resolution(const Kernel& kernel, double delta, const SpaceTimeGrid& grid) {
  const SupportBox b = kernel.support();
  const double half_width = 0.5 * (b.x_hi - b.x_lo) * delta;
  const double width = (b.t_hi - b.t_lo) * delta * delta;
  const double cells = half_width / grid.dx();
  const double steps = width / grid.dt();
  constexpr double slack = 1.0 - 1e-9;
  if (cells < kMinCellsPerHalfWidth * slack) {
    throw ResolutionTooCoarse("kernel half-width " + std::to_string(half_width) + " spans " +
                              std::to_string(cells) + " cells; need at least 8");
  }
  if (steps < kMinStepsPerWidth * slack) {
    throw ResolutionTooCoarse("kernel time width " + std::to_string(width) + " spans " +
                              std::to_string(steps) + " steps; need at least 8");
  }
}

StatPlan::StatPlan(const Kernel& kernel, double delta, const SpaceTimeGrid& grid)
    : grid_(grid), time_(kernel, 0, 0.0, delta, 0.0) {
  const SupportBox b = kernel.support();
  if (b.t_lo < 0.0 || b.t_hi > 1.0) {
    throw InvalidInput("statistics: kernel time support must lie in [0, 1]");
  }
  check_resolution(kernel, delta, grid);
  const std::size_t n_shift = time_shift_count(grid.T(), delta);
  n_windows_ = n_shift + 1;
  const std::size_t rows = grid.n_rows();
  row_window_.assign(rows, -1);
  row_t0_.assign(rows, 0.0);
  row_t1_.assign(rows, 0.0);
  const double inv_eps = 1.0 / (delta * delta);
  for (std::size_t i = 0; i < rows; ++i) {
    const double t = grid.time(i);
    const double u = t * inv_eps;
    const double k = std::floor(u);
    if (k < 0.0 || k >= static_cast<double>(n_windows_)) continue;
    const int ki = static_cast<int>(k);
    const double t0 = time_.time0_at(t, ki);
    const double t1 = time_.time1_at(t, ki);
    if (t0 == 0.0 && t1 == 0.0) continue;
    row_window_[i] = ki;
    row_t0_[i] = t0;
    row_t1_[i] = t1;
  }
}

std::size_t StatPlan::add_site(double x0, double x) {
  const double delta = time_.delta();
  const double center = x0 + delta * x;
  for (std::size_t s = 0; s < sites_.size(); ++s) {
    const double c = sites_[s].x0 + delta * sites_[s].x;
    if (std::abs(c - center) <= 1e-12) return s;
  }
  const LocalizedKernel lk(time_.base(), 0, x, delta, x0);
  const SupportBox box = lk.support();
  if (box.x_lo < -1e-12 || box.x_hi > 1.0 + 1e-12) {
    throw SupportViolation("statistics: site at " + std::to_string(center) +
                           " has support outside (0, 1)");
  }
  Site site;
  site.x0 = x0;
  site.x = x;
  const double dx = grid_.dx();
  const std::size_t n = grid_.n_interior();
  // interior node idx sits at (idx + 1) dx
  const double first = std::max(0.0, std::floor(box.x_lo / dx) - 2.0);
  std::size_t j = static_cast<std::size_t>(first);
  std::vector<double> w0;
  std::vector<double> w2;
  std::size_t begin = n;
  for (; j < n; ++j) {
    const double y = grid_.node(j);
    if (y > box.x_hi + dx) break;
    const double a = lk.space0(y);
    const double c = lk.space2(y);
    if (begin == n) {
      if (a == 0.0 && c == 0.0) continue;
      begin = j;
    }
    w0.push_back(a);
    w2.push_back(c);
  }
  while (!w0.empty() && w0.back() == 0.0 && w2.back() == 0.0) {
    w0.pop_back();
    w2.pop_back();
  }
  site.begin = begin == n ? 0 : begin;
  site.w0 = std::move(w0);
  site.w2 = std::move(w2);
  if (bracket_) fill_bracket(site);
  sites_.push_back(std::move(site));
  return sites_.size() - 1;
}

void StatPlan::fill_bracket(Site& s) const {
  const LocalizedKernel lk(time_.base(), 0, s.x, time_.delta(), s.x0);
  s.wb.resize(s.w0.size());
  for (std::size_t m = 0; m < s.w0.size(); ++m) {
    const double y = grid_.node(s.begin + m);
    s.wb[m] = (bracket_->theta(y) - bracket_->theta0) * lk.space2(y) +
              bracket_->theta.derivative(y) * lk.space1(y);
  }
}

void StatPlan::set_bracket(const DiffusivityField& theta, double theta0) {
  bracket_ = Bracket{theta, theta0};
  for (Site& s : sites_) fill_bracket(s);
}

void StatTable::scale(double c) {
  for (double& v : prime_) v *= c;
  for (double& v : delta_) v *= c;
  for (double& v : bracket_) v *= c;
}

StatAccumulator::StatAccumulator(const StatPlan& plan, std::size_t lanes)
    : plan_(&plan), lanes_(lanes), bracket_(plan.has_bracket()) {
  if (lanes == 0) throw InvalidInput("StatAccumulator: lanes must be positive");
  const std::size_t n = plan.n_windows() * plan.n_sites() * lanes;
  acc_prime_.assign(n, 0.0);
  acc_delta_.assign(n, 0.0);
  if (bracket_) acc_bracket_.assign(n, 0.0);
}

template <std::size_t L>
void StatAccumulator::add_row_impl(std::size_t row, const double* y) {
  const std::int32_t k = plan_->row_window(row);
  if (k < 0) return;
  const double t0 = plan_->row_t0(row);
  const double t1 = plan_->row_t1(row);
  const std::size_t n_sites = plan_->n_sites();
  const std::size_t lanes = L == 0 ? lanes_ : L;
  for (std::size_t s = 0; s < n_sites; ++s) {
    const StatPlan::Site& site = plan_->site(s);
    const std::size_t m = site.w0.size();
    const double* base = y + site.begin * lanes;
    double r0[L == 0 ? 64 : L] = {};
    double r2[L == 0 ? 64 : L] = {};
    double rb[L == 0 ? 64 : L] = {};
    for (std::size_t j = 0; j < m; ++j) {
      const double a = site.w0[j];
      const double c = site.w2[j];
      const double* v = base + j * lanes;
      for (std::size_t l = 0; l < lanes; ++l) {
        r0[l] += v[l] * a;
        r2[l] += v[l] * c;
      }
    }
    if (bracket_) {
      for (std::size_t j = 0; j < m; ++j) {
        const double b = site.wb[j];
        const double* v = base + j * lanes;
        for (std::size_t l = 0; l < lanes; ++l) rb[l] += v[l] * b;
      }
    }
    const std::size_t off = (static_cast<std::size_t>(k) * n_sites + s) * lanes;
    for (std::size_t l = 0; l < lanes; ++l) {
      acc_prime_[off + l] += t1 * r0[l];
      acc_delta_[off + l] += t0 * r2[l];
    }
    if (bracket_) {
      for (std::size_t l = 0; l < lanes; ++l) acc_bracket_[off + l] += t0 * rb[l];
    }
  }
}

void StatAccumulator::add_row(std::size_t row, std::span<const double> y) {
  if (y.size() != plan_->grid().n_interior() * lanes_) {
    throw InvalidInput("StatAccumulator: row length mismatch");
  }
  switch (lanes_) {
    case 1: add_row_impl<1>(row, y.data()); break;
    case 8: add_row_impl<8>(row, y.data()); break;
    default:
      if (lanes_ > 64) throw InvalidInput("StatAccumulator: at most 64 lanes");
      add_row_impl<0>(row, y.data());
  }
}

StatTable StatAccumulator::table(std::size_t lane) const {
  if (lane >= lanes_) throw InvalidInput("StatAccumulator: lane out of range");
  const std::size_t nw = plan_->n_windows();
  const std::size_t ns = plan_->n_sites();
  StatTable t(nw, ns, bracket_);
  const double cell = plan_->grid().dt() * plan_->grid().dx();
  for (std::size_t k = 0; k < nw; ++k) {
    for (std::size_t s = 0; s < ns; ++s) {
      const std::size_t off = (k * ns + s) * lanes_ + lane;
      t.xprime(k, s) = -(acc_prime_[off] * cell);
      t.xdelta(k, s) = acc_delta_[off] * cell;
      if (bracket_) t.bracket(k, s) = acc_bracket_[off] * cell;
    }
  }
  return t;
}

StatTable compute_statistics(const StatPlan& plan, const SpaceTimeField& field) {
  if (field.rows() != plan.grid().n_rows() || field.cols() != plan.grid().n_interior()) {
    throw InvalidInput("compute_statistics: field shape does not match the plan grid");
  }
  StatAccumulator acc(plan, 1);
  for (std::size_t i = 0; i < field.rows(); ++i) acc.add_row(i, field.row(i));
  return acc.table(0);
}

std::pair<double, double> riemann_pair(const Observation& obs, const LocalizedKernel& lk) {
  const SpaceTimeGrid& grid = obs.grid();
  const SupportBox box = lk.support();
  if (box.t_lo < -1e-12 || box.t_hi > grid.T() * (1.0 + 1e-12) || box.x_lo < -1e-12 ||
      box.x_hi > 1.0 + 1e-12) {
    throw SupportViolation("riemann_pair: kernel support leaves the observation domain");
  }
  StatPlan plan(lk.base(), lk.delta(), grid);
  const std::size_t site = plan.add_site(lk.x0(), lk.x());
  StatAccumulator acc(plan, 1);
  const auto k = static_cast<std::int32_t>(lk.k());
  for (std::size_t i = 0; i < grid.n_rows(); ++i) {
    if (plan.row_window(i) == k) acc.add_row(i, obs.values().row(i));
  }
  const StatTable t = acc.table(0);
  return {t.xprime(static_cast<std::size_t>(k), site), t.xdelta(static_cast<std::size_t>(k), site)};
}

SeparableFunctional::SeparableFunctional(const SpaceTimeGrid& grid,
                                         std::vector<double> time_weights,
                                         std::vector<double> space_weights)
    : grid_(grid), a_(std::move(time_weights)), w_(std::move(space_weights)) {
  if (a_.size() != grid.n_rows() || w_.size() != grid.n_interior()) {
    throw InvalidInput("SeparableFunctional: weight lengths do not match the grid");
  }
}

double SeparableFunctional::apply(const SpaceTimeField& field) const {
  FunctionalAccumulator acc({*this}, 1);
  for (std::size_t i = 0; i < field.rows(); ++i) acc.add_row(i, field.row(i));
  return acc.value(0, 0);
}

FunctionalAccumulator::FunctionalAccumulator(std::vector<SeparableFunctional> functionals,
                                             std::size_t lanes)
    : functionals_(std::move(functionals)), lanes_(lanes),
      acc_(functionals_.size() * lanes, 0.0) {
  if (lanes == 0 || lanes > 64) throw InvalidInput("FunctionalAccumulator: bad lane count");
}

void FunctionalAccumulator::add_row(std::size_t row, std::span<const double> y) {
  for (std::size_t f = 0; f < functionals_.size(); ++f) {
    const SeparableFunctional& fn = functionals_[f];
    const double a = fn.time_weights()[row];
    if (a == 0.0) continue;
    const auto& w = fn.space_weights();
    if (y.size() != w.size() * lanes_) throw InvalidInput("FunctionalAccumulator: row length");
    double r[64] = {};
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double c = w[j];
      if (c == 0.0) continue;
      for (std::size_t l = 0; l < lanes_; ++l) r[l] += y[j * lanes_ + l] * c;
    }
    for (std::size_t l = 0; l < lanes_; ++l) acc_[f * lanes_ + l] += a * r[l];
  }
}

double FunctionalAccumulator::value(std::size_t functional, std::size_t lane) const {
  const SpaceTimeGrid& g = functionals_.at(functional).grid();
  return acc_.at(functional * lanes_ + lane) * (g.dt() * g.dx());
}

}  // namespace heatest
