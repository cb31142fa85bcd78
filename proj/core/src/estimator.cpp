#include "heatest/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "heatest/error.hpp"
#include "heatest/numerics.hpp"
#include "heatest/oracle.hpp"

namespace heatest {

std::string to_string(WeightScheme s) {
  return s == WeightScheme::UniformWindow ? "uniform" : "loclin";
}

std::string to_string(DeltaVariant v) {
  return v == DeltaVariant::SqrtEps ? "sqrt_eps" : "sqrt_eps_over_sigma";
}

WeightScheme parse_weight_scheme(const std::string& s) {
  if (s == "uniform" || s == "uniform-window") return WeightScheme::UniformWindow;
  if (s == "loclin" || s == "locally-linear") return WeightScheme::LocallyLinear;
  throw InvalidInput("unknown weight scheme '" + s + "'");
}

DeltaVariant parse_delta_variant(const std::string& s) {
  if (s == "sqrt_eps") return DeltaVariant::SqrtEps;
  if (s == "sqrt_eps_over_sigma") return DeltaVariant::SqrtEpsOverSigma;
  throw InvalidInput("unknown delta variant '" + s + "'");
}

double EstimatorConfig::delta() const {
  if (!(eps > 0.0)) throw InvalidInput("estimator: eps must be positive");
  if (delta_variant == DeltaVariant::SqrtEps) return std::sqrt(eps);
  if (!(sigma > 0.0)) throw InvalidInput("estimator: delta variant needs sigma > 0");
  return std::sqrt(eps / sigma);
}

double EstimatorConfig::bandwidth() const {
  if (h) return *h;
  return std::pow(eps, 3.0 / (4.0 * gamma + 2.0));
}

double EstimatorConfig::noise_factor() const {
  const double d = delta();
  return eps / (d * d);
}

void EstimatorConfig::validate() const {
  if (!(x0 > 0.0 && x0 < 1.0)) throw InvalidInput("estimator: x0 must lie in (0, 1)");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidInput("estimator: eps must be positive");
  if (!(gamma >= 1.0)) throw InvalidInput("estimator: gamma must be >= 1");
  if (!(margin_factor >= 0.0)) throw InvalidInput("estimator: margin_factor must be >= 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("estimator: sigma must be >= 0");
  if (!(info_floor >= 0.0)) throw InvalidInput("estimator: info_floor must be >= 0");
  const double d = delta();
  const double hh = bandwidth();
  if (!(hh > 0.0) || hh > 1.0 + 1e-12) throw InvalidInput("estimator: h must lie in (0, 1]");
  if (hh < d * (1.0 - 1e-12)) {
    throw BandwidthTooSmall("estimator: h = " + std::to_string(hh) +
                            " is below delta = " + std::to_string(d));
  }
}

ShiftGrid build_shift_grid(const EstimatorConfig& config, const SpaceTimeGrid& grid) {
  config.validate();
  ShiftGrid g;
  g.delta = config.delta();
  g.x0 = config.x0;
  g.n_eps = time_shift_count(grid.T(), g.delta);
  const SupportBox box = config.kernel.support();
  const double margin = config.margin_factor * g.delta;
  constexpr double tol = 1e-12;
  const int kmax = static_cast<int>(std::ceil(1.0 / (2.0 * g.delta))) + 2;
  for (int k = -kmax; k <= kmax; ++k) {
    const double x = 2.0 * k;
    const double lo = config.x0 + g.delta * (x + box.x_lo);
    const double hi = config.x0 + g.delta * (x + box.x_hi);
    if (lo >= margin - tol && hi <= 1.0 - margin + tol) g.shifts.push_back(2 * k);
  }
  if (g.shifts.empty()) {
    throw DomainTooSmall("shift grid: no admissible shift for x0 = " +
                         std::to_string(config.x0) + ", delta = " + std::to_string(g.delta));
  }
  if (g.n_eps == 0) throw DomainTooSmall("shift grid: T shorter than two kernel widths");
  return g;
}

double WeightVector::sum() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

double WeightVector::first_moment() const {
  // both sides summed outward from x = 0 so mirrored weights cancel exactly
  double pos = 0.0;
  double neg = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (shifts[i] > 0) pos += shifts[i] * weights[i];
  }
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (shifts[i] < 0) neg += -shifts[i] * weights[i];
  }
  return pos - neg;
}

bool WeightVector::uniform() const {
  for (double w : weights) {
    if (w != weights.front()) return false;
  }
  return !weights.empty();
}

WeightVector build_weights_delta(WeightScheme scheme, const ShiftGrid& grid, double h,
                                 double delta) {
  if (!(h > 0.0) || !(delta > 0.0)) throw InvalidInput("weights: h and delta must be positive");
  const double radius = h / (2.0 * delta);
  std::vector<int> window;
  for (int x : grid.shifts) {
    if (std::abs(static_cast<double>(x)) < radius * (1.0 + 1e-12)) window.push_back(x);
  }
  WeightVector wv;
  if (scheme == WeightScheme::UniformWindow) {
    for (int x : window) {
      if (std::find(window.begin(), window.end(), -x) != window.end()) wv.shifts.push_back(x);
    }
    if (wv.shifts.empty()) {
      throw BandwidthTooSmall("weights: window of radius " + std::to_string(radius) +
                              " holds no symmetric set of shifts");
    }
    wv.weights.assign(wv.shifts.size(), 1.0 / static_cast<double>(wv.shifts.size()));
    return wv;
  }
  if (window.empty()) {
    throw BandwidthTooSmall("weights: window of radius " + std::to_string(radius) +
                            " holds no shift");
  }
  const bool all_pos = std::all_of(window.begin(), window.end(), [](int x) { return x > 0; });
  const bool all_neg = std::all_of(window.begin(), window.end(), [](int x) { return x < 0; });
  if (all_pos || all_neg) {
    throw WeightInfeasible("weights: all shifts lie on one side of x0");
  }
  wv.shifts = window;
  if (window.size() == 1) {
    wv.weights.assign(1, 1.0);  // the single shift is x = 0
    return wv;
  }
  // w = a + b x minimizes sum w^2 under sum w = 1, sum x w = 0
  double n = 0.0;
  double sx = 0.0;
  double sxx = 0.0;
  for (int x : window) {
    n += 1.0;
    sx += x;
    sxx += static_cast<double>(x) * x;
  }
  const double det = n * sxx - sx * sx;
  if (!(std::abs(det) > 0.0)) throw WeightInfeasible("weights: singular moment system");
  const double a = sxx / det;
  const double b = -sx / det;
  wv.weights.resize(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) wv.weights[i] = a + b * window[i];
  return wv;
}

WeightVector build_weights(WeightScheme scheme, const ShiftGrid& grid, double h, double eps) {
  if (!(eps > 0.0)) throw InvalidInput("weights: eps must be positive");
  return build_weights_delta(scheme, grid, h, std::sqrt(eps));
}

double EstimatorSetup::sigma_K_sq_at(double theta0) const {
  return sigma_K_sq(config.kernel, config.sigma, std::max(theta0, 0.0), config.noise_factor());
}

EstimatorSetup prepare_estimate(const EstimatorConfig& config, StatPlan& plan) {
  config.validate();
  const double d = config.delta();
  if (std::abs(d - plan.delta()) > 1e-12 * d) {
    throw InvalidInput("prepare_estimate: plan scale does not match the configuration");
  }
  if (!(config.kernel.time_factor() == plan.kernel().time_factor()) ||
      !(config.kernel.space_factor() == plan.kernel().space_factor())) {
    throw InvalidInput("prepare_estimate: plan kernel does not match the configuration");
  }
  EstimatorSetup s;
  s.config = config;
  s.h = config.bandwidth();
  s.shifts = build_shift_grid(config, plan.grid());
  s.weights = build_weights_delta(config.weights, s.shifts, s.h, d);
  for (int x : s.weights.shifts) s.sites.push_back(plan.add_site(config.x0, x));
  return s;
}

namespace {

struct Sums {
  double num = 0.0;
  double den = 0.0;
  double qv = 0.0;  // sum w^2 (X^Delta_{k-1})^2
  double med = 0.0;
};

Sums collect(const EstimatorSetup& s, const StatTable& t) {
  const std::size_t n = s.shifts.n_eps;
  if (t.n_windows() < n + 1) throw InvalidInput("estimate: statistics table too short");
  const std::size_t m = s.sites.size();
  std::vector<double> num(n * m);
  std::vector<double> den(n * m);
  std::vector<double> qv(n * m);
  std::vector<double> sq(n * m);
  std::size_t idx = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t e = 0; e < m; ++e, ++idx) {
      const std::size_t site = s.sites[e];
      const double w = s.weights.weights[e];
      const double inst = t.xdelta(k - 1, site);
      num[idx] = w * inst * t.xprime(k, site);
      den[idx] = w * inst * t.xdelta(k, site);
      qv[idx] = w * w * inst * inst;
      sq[idx] = inst * inst;
    }
  }
  Sums out;
  out.num = pairwise_sum(num);
  out.den = pairwise_sum(den);
  out.qv = pairwise_sum(qv);
  out.med = median(std::move(sq));
  return out;
}

}  // namespace

EstimateReport evaluate_estimate(const EstimatorSetup& setup, const StatTable& table,
                                 const SpaceTimeGrid& grid) {
  const Sums s = collect(setup, table);
  EstimateReport r;
  r.config = setup.config;
  r.delta = setup.shifts.delta;
  r.h = setup.h;
  r.n_eps = setup.shifts.n_eps;
  r.n_shifts = setup.weights.shifts.size();
  r.T = grid.T();
  r.weights = setup.weights;
  r.numerator = s.num;
  r.I = s.den;
  const double n = static_cast<double>(setup.shifts.n_eps);
  const double provisional = s.den != 0.0 ? s.num / s.den : 0.0;
  r.sigma_K_sq = setup.sigma_K_sq_at(provisional);
  const double floor = setup.config.info_floor * r.sigma_K_sq * n * s.med;
  if (s.den == 0.0 || !(std::abs(s.den) >= floor) || !std::isfinite(s.den)) {
    throw DegenerateInformation("estimate: |I| = " + std::to_string(std::abs(s.den)) +
                                " is below the floor " + std::to_string(floor));
  }
  r.theta_hat = s.num / s.den;
  r.qv_M = r.sigma_K_sq * s.qv;
  return r;
}

EstimateReport estimate(const Observation& obs, const EstimatorConfig& config) {
  config.validate();
  StatPlan plan(config.kernel, config.delta(), obs.grid());
  const EstimatorSetup setup = prepare_estimate(config, plan);
  const StatTable table = compute_statistics(plan, obs.values());
  return evaluate_estimate(setup, table, obs.grid());
}

Decomposition decompose(const EstimatorSetup& setup, const StatTable& obs_table,
                        const StatTable& clean_table, double theta0) {
  if (!clean_table.has_bracket()) {
    throw InvalidInput("decompose: clean statistics were computed without the bracket");
  }
  const Sums s = collect(setup, obs_table);
  const std::size_t n = setup.shifts.n_eps;
  const std::size_t m = setup.sites.size();
  std::vector<double> b(n * m);
  std::size_t idx = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t e = 0; e < m; ++e, ++idx) {
      const std::size_t site = setup.sites[e];
      b[idx] = setup.weights.weights[e] * obs_table.xdelta(k - 1, site) *
               clean_table.bracket(k, site);
    }
  }
  Decomposition d;
  d.I = s.den;
  if (d.I == 0.0) throw DegenerateInformation("decompose: I = 0");
  d.theta_hat = s.num / s.den;
  d.B = pairwise_sum(b);
  d.M = (d.theta_hat - theta0) * d.I - d.B;
  d.qv_M = setup.sigma_K_sq_at(theta0) * s.qv;
  return d;
}

Decomposition error_decomposition(const Observation& obs, const EstimatorConfig& config,
                                  const DiffusivityField& theta_true) {
  if (!obs.trajectory()) {
    throw DiagnosticsUnavailable("error_decomposition: observation carries no clean trajectory");
  }
  config.validate();
  const double theta0 = theta_true(config.x0);
  StatPlan plan(config.kernel, config.delta(), obs.grid());
  const EstimatorSetup setup = prepare_estimate(config, plan);
  const StatTable obs_table = compute_statistics(plan, obs.values());
  plan.set_bracket(theta_true, theta0);
  const StatTable clean_table = compute_statistics(plan, obs.trajectory()->values());
  return decompose(setup, obs_table, clean_table, theta0);
}

ConfidenceInterval confidence_interval(const EstimateReport& report, double level,
                                       const CltConstants& c) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("confidence_interval: level in (0, 1)");
  if (!report.weights.uniform()) {
    throw InvalidInput("confidence_interval: needs the parametric (uniform weight) setting");
  }
  if (!(c.c_inf_dd_lag > 0.0)) {
    throw CLTInapplicable("confidence_interval: C_inf(Delta K, Delta K_{-1,0}) = " +
                          std::to_string(c.c_inf_dd_lag) + " is not positive");
  }
  const double z = normal_quantile(0.5 + 0.5 * level);
  const double nu = report.config.noise_factor();
  const double cx = static_cast<double>(report.n_shifts) * report.delta;
  const double var = report.sigma_K_sq * (c.c_inf_dd + nu * nu * c.lap_norm_sq) /
                     (report.T * cx * c.c_inf_dd_lag * c.c_inf_dd_lag);
  const double half = z * std::pow(report.delta, 1.5) * std::sqrt(var);
  return ConfidenceInterval{report.theta_hat - half, report.theta_hat + half, level};
}

ConfidenceInterval confidence_interval(const EstimateReport& report, double level) {
  if (!(report.theta_hat > 0.0)) {
    throw CLTInapplicable("confidence_interval: theta_hat must be positive to plug in");
  }
  const CltConstants c = clt_constants(report.config.kernel, report.theta_hat,
                                       report.config.sigma);
  return confidence_interval(report, level, c);
}

double estimate_noise_level(const Observation& obs, const std::function<double(double)>& probe) {
  const SpaceTimeGrid& g = obs.grid();
  std::vector<double> p(g.n_interior());
  double norm = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    p[j] = probe(g.node(j));
    if (!std::isfinite(p[j])) throw InvalidInput("estimate_noise_level: probe not finite");
    norm += p[j] * p[j] * g.dx();
  }
  if (!(norm > 0.0)) throw InvalidInput("estimate_noise_level: probe is identically zero");
  const auto& y = obs.values();
  std::vector<double> z(y.rows());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    const auto row = y.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += p[j] * row[j];
    z[i] = s * g.dx();
  }
  std::vector<double> d2(z.size() - 1);
  for (std::size_t i = 0; i + 1 < z.size(); ++i) d2[i] = (z[i + 1] - z[i]) * (z[i + 1] - z[i]);
  const double qv = pairwise_sum(d2);
  return g.dt() * std::sqrt(qv / (2.0 * norm * g.T()));
}

std::vector<ProfilePoint> estimate_profile(const Observation& obs,
                                           const std::vector<double>& x0_list,
                                           const EstimatorConfig& config_template) {
  config_template.validate();
  StatPlan plan(config_template.kernel, config_template.delta(), obs.grid());
  std::vector<ProfilePoint> out(x0_list.size());
  std::vector<std::optional<EstimatorSetup>> setups(x0_list.size());
  for (std::size_t i = 0; i < x0_list.size(); ++i) {
    out[i].x0 = x0_list[i];
    EstimatorConfig c = config_template;
    c.x0 = x0_list[i];
    try {
      setups[i] = prepare_estimate(c, plan);
    } catch (const Error& e) {
      out[i].error = std::string(to_string(e.kind())) + ": " + e.what();
    }
  }
  const StatTable table = compute_statistics(plan, obs.values());
  for (std::size_t i = 0; i < x0_list.size(); ++i) {
    if (!setups[i]) continue;
    try {
      out[i].report = evaluate_estimate(*setups[i], table, obs.grid());
    } catch (const Error& e) {
      out[i].error = std::string(to_string(e.kind())) + ": " + e.what();
    }
  }
  return out;
}

}  // namespace heatest
