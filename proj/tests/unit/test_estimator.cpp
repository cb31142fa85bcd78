#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "heatest/error.hpp"
#include "heatest/estimator.hpp"
#include "heatest/numerics.hpp"
#include "support.hpp"

using namespace heatest;
using testsupport::rel;

namespace {

EstimatorConfig config_at(double delta, double x0 = 0.5, std::optional<double> h = 1.0) {
  EstimatorConfig c;
  c.eps = delta * delta;
  c.x0 = x0;
  c.h = h;
  return c;
}

// theta = 0.02 or the two-plateau profile, sigma = 10, eps = 0.0025 on a grid
// resolving delta = 0.05
Observation simulated(const DiffusivityField& theta, double eps, double sigma = 10.0,
                      std::uint64_t seed = 11) {
  const SpaceTimeGrid g(1.0, 3200, 256);
  const SimulationSpec spec{g, theta, sigma, 1.0};
  auto tr = std::make_shared<const Trajectory>(simulate(spec, {}, SeedSpec{seed, 0, NoisePurpose::Dynamic}));
  return add_static_noise(tr, eps, SeedSpec{seed, 0, NoisePurpose::Static});
}

}  // namespace

TEST_CASE("shift grid construction") {
  const SpaceTimeGrid g(1.0, 10, 10);
  const ShiftGrid s = build_shift_grid(config_at(0.05), g);
  REQUIRE(s.shifts.size() == 9);
  CHECK(s.shifts.front() == -8);
  CHECK(s.shifts.back() == 8);
  for (std::size_t i = 1; i < s.shifts.size(); ++i) CHECK(s.shifts[i] - s.shifts[i - 1] == 2);
  CHECK(s.n_eps == 399);
  CHECK(s.n_eff() == 3591);
  CHECK_THROWS_AS(build_shift_grid(config_at(0.5), g), DomainTooSmall);

  const double deltas[] = {0.05, 0.02, 0.01, 0.005};
  const double targets[] = {3600, 57500, 4.9e5, 3.96e6};
  for (int i = 0; i < 4; ++i) {
    const ShiftGrid sg = build_shift_grid(config_at(deltas[i]), g);
    CHECK(std::abs(static_cast<double>(sg.n_eff()) / targets[i] - 1.0) <= 0.02);
    // every support stays 0.1 delta away from the boundary
    for (int x : sg.shifts) {
      CHECK(0.5 + deltas[i] * (x - 1) >= 0.1 * deltas[i] - 1e-12);
      CHECK(0.5 + deltas[i] * (x + 1) <= 1.0 - 0.1 * deltas[i] + 1e-12);
    }
  }
  const ShiftGrid edge = build_shift_grid(config_at(0.05, 0.05), g);
  CHECK(edge.shifts.size() < s.shifts.size());
}

TEST_CASE("estimator configuration") {
  EstimatorConfig c;
  c.eps = 4e-4;
  CHECK(c.bandwidth() == doctest::Approx(std::pow(4e-4, 0.5)));
  c.gamma = 2.0;
  CHECK(c.bandwidth() == doctest::Approx(std::pow(4e-4, 0.3)));
  c.h = 0.01;
  CHECK_THROWS_AS(c.validate(), BandwidthTooSmall);
  c.h = 1.0;
  c.x0 = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c.x0 = 0.5;
  c.gamma = 0.5;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c.gamma = 1.0;
  c.delta_variant = DeltaVariant::SqrtEpsOverSigma;
  c.sigma = 4.0;
  CHECK(c.delta() == doctest::Approx(0.01));
  CHECK(c.noise_factor() == doctest::Approx(4.0));

  CHECK(parse_weight_scheme("loclin") == WeightScheme::LocallyLinear);
  CHECK(parse_weight_scheme(to_string(WeightScheme::UniformWindow)) == WeightScheme::UniformWindow);
  CHECK(parse_delta_variant(to_string(DeltaVariant::SqrtEpsOverSigma)) == DeltaVariant::SqrtEpsOverSigma);
  CHECK_THROWS_AS(parse_weight_scheme("triangle"), InvalidInput);
  CHECK_THROWS_AS(parse_delta_variant("cube"), InvalidInput);
}

TEST_CASE("weights") {
  const SpaceTimeGrid g(1.0, 10, 10);
  const ShiftGrid s = build_shift_grid(config_at(0.05), g);
  const WeightVector u = build_weights(WeightScheme::UniformWindow, s, 1.0, 0.0025);
  REQUIRE(u.weights.size() == 9);
  for (double w : u.weights) CHECK(w == 1.0 / 9.0);
  CHECK(u.first_moment() == 0.0);
  CHECK(u.uniform());

  // h = eps^(1/3) at delta = 0.02: radius 1.84 keeps the centre only
  const ShiftGrid s2 = build_shift_grid(config_at(0.02), g);
  const WeightVector c = build_weights(WeightScheme::UniformWindow, s2, std::cbrt(4e-4), 4e-4);
  CHECK(c.shifts == std::vector<int>{0});
  CHECK(std::abs(c.sum() - 1.0) <= 1e-15);
  // wider window: -8..8
  const WeightVector c2 = build_weights(WeightScheme::UniformWindow, s2, 0.35, 4e-4);
  CHECK(c2.shifts.size() == 9);
  CHECK(std::abs(c2.sum() - 1.0) <= 1e-15);

  // symmetric window: locally linear reduces to uniform
  const WeightVector l = build_weights(WeightScheme::LocallyLinear, s, 1.0, 0.0025);
  for (double w : l.weights) CHECK(w == doctest::Approx(1.0 / 9.0).epsilon(1e-14));

  // asymmetric window near the boundary
  const ShiftGrid b = build_shift_grid(config_at(0.02, 0.1), g);
  const WeightVector ll = build_weights(WeightScheme::LocallyLinear, b, 0.3, 4e-4);
  CHECK(ll.shifts == std::vector<int>{-2, 0, 2, 4, 6});
  CHECK(std::abs(ll.sum() - 1.0) < 1e-12);
  CHECK(std::abs(ll.first_moment()) < 1e-12);
  // least norm: orthogonal to every direction preserving both moments
  const double dirs[3][5] = {{1, -2, 1, 0, 0}, {0, 1, -2, 1, 0}, {0, 0, 1, -2, 1}};
  for (const auto& v : dirs) {
    double dot = 0.0;
    for (int i = 0; i < 5; ++i) dot += v[i] * ll.weights[i];
    CHECK(std::abs(dot) < 1e-14);
  }
  const WeightVector ul = build_weights(WeightScheme::UniformWindow, b, 0.3, 4e-4);
  CHECK(ul.shifts == std::vector<int>{-2, 0, 2});

  ShiftGrid one_sided = s;
  one_sided.shifts = {2, 4};
  CHECK_THROWS_AS(build_weights(WeightScheme::UniformWindow, one_sided, 1.0, 0.0025), BandwidthTooSmall);
  CHECK_THROWS_AS(build_weights(WeightScheme::LocallyLinear, one_sided, 1.0, 0.0025), WeightInfeasible);
  CHECK_THROWS_AS(build_weights(WeightScheme::LocallyLinear, one_sided, 0.01, 0.0025), BandwidthTooSmall);
}

TEST_CASE("estimator invariances and error decomposition") {
  const Observation obs = simulated(DiffusivityField::constant(0.02), 0.0025);
  const EstimatorConfig cfg = config_at(0.05);
  const EstimateReport r = estimate(obs, cfg);
  CHECK(r.n_shifts == 9);
  CHECK(r.n_eps == 399);
  CHECK(std::isfinite(r.theta_hat));
  CHECK(r.theta_hat == doctest::Approx(r.numerator / r.I));

  for (double c : {-3.0, 0.001, 1e3}) {
    const EstimateReport rc = estimate(obs.scaled(c), cfg);
    CHECK(rel(rc.theta_hat, r.theta_hat) < 1e-13);
  }

  StatPlan plan(cfg.kernel, cfg.delta(), obs.grid());
  EstimatorSetup setup = prepare_estimate(cfg, plan);
  const StatTable table = compute_statistics(plan, obs.values());
  CHECK(evaluate_estimate(setup, table, obs.grid()).theta_hat == r.theta_hat);
  for (double& w : setup.weights.weights) w *= 7.0;
  CHECK(rel(evaluate_estimate(setup, table, obs.grid()).theta_hat, r.theta_hat) < 1e-13);

  const Decomposition d = error_decomposition(obs, cfg, DiffusivityField::constant(0.02));
  CHECK(d.B == 0.0);
  CHECK(d.theta_hat == r.theta_hat);
  CHECK(d.I == r.I);
  CHECK(d.qv_M > 0.0);
  CHECK_THROWS_AS(error_decomposition(obs.scaled(1.0), cfg, DiffusivityField::constant(0.02)),
                  DiagnosticsUnavailable);
  CHECK_THROWS_AS(decompose(setup, table, table, 0.02), InvalidInput);

  // heterogeneous theta: B is non-zero and the identity holds
  const DiffusivityField th = DiffusivityField::logistic_profile();
  const Observation het = simulated(th, 0.0025, 10.0, 12);
  const EstimatorConfig hc = config_at(0.05, 0.45, 0.3);
  const Decomposition dh = error_decomposition(het, hc, th);
  CHECK(dh.B != 0.0);
  CHECK(rel(dh.theta_hat - th(0.45), (dh.M + dh.B) / dh.I) < 1e-10);

  const Observation zero = simulated(DiffusivityField::constant(0.02), 0.0, 0.0);
  CHECK_THROWS_AS(estimate(zero, cfg), DegenerateInformation);
}

TEST_CASE("delta variant matches the normalized problem") {
  const double sigma = 4.0, eps = 0.01;
  const Observation obs = simulated(DiffusivityField::constant(0.02), eps, sigma, 21);
  EstimatorConfig a = config_at(0.05);
  a.eps = eps;
  a.sigma = sigma;
  a.delta_variant = DeltaVariant::SqrtEpsOverSigma;
  EstimatorConfig b = config_at(0.05);
  b.eps = eps / sigma;
  b.sigma = 1.0;
  CHECK(a.delta() == b.delta());
  const EstimateReport ra = estimate(obs, a);
  const EstimateReport rb = estimate(obs.scaled(1.0 / sigma), b);
  CHECK(rel(ra.theta_hat, rb.theta_hat) < 1e-12);
  CHECK(rel(ra.sigma_K_sq, sigma * sigma * rb.sigma_K_sq) < 1e-12);
}

TEST_CASE("noise level from quadratic variation") {
  const Observation none = simulated(DiffusivityField::constant(0.02), 0.0, 0.0);
  const auto probe = [](double x) { return std::sin(std::numbers::pi * x); };
  CHECK(estimate_noise_level(none, probe) == 0.0);
  CHECK_THROWS_AS(estimate_noise_level(none, [](double) { return 0.0; }), InvalidInput);

  const Observation e1 = simulated(DiffusivityField::constant(0.02), 0.01, 0.0, 5);
  const Observation e2 = simulated(DiffusivityField::constant(0.02), 0.02, 0.0, 5);
  const double a = estimate_noise_level(e1, probe);
  CHECK(estimate_noise_level(e2, probe) == 2.0 * a);
  // 3200 increments: relative sd about 1 / sqrt(3200)
  CHECK(std::abs(a / 0.01 - 1.0) < 4.0 / std::sqrt(3200.0));
}

TEST_CASE("confidence interval") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-7));
  EstimateReport r;
  r.theta_hat = 0.021;
  r.sigma_K_sq = 3.0;
  r.delta = 0.02;
  r.n_shifts = 23;
  r.T = 1.0;
  r.config = config_at(0.02);
  r.weights.shifts = {-2, 0, 2};
  r.weights.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const CltConstants c{0.7, 0.2, 5.0};
  const ConfidenceInterval ci = confidence_interval(r, 0.95, c);
  const double var = 3.0 * (0.7 + 5.0) / (1.0 * 23 * 0.02 * 0.04);
  const double half = 1.959963984540054 * std::pow(0.02, 1.5) * std::sqrt(var);
  CHECK(ci.hi - r.theta_hat == doctest::Approx(half).epsilon(1e-12));
  CHECK(r.theta_hat - ci.lo == doctest::Approx(half).epsilon(1e-12));
  CHECK(ci.level == 0.95);

  // halving delta with |X| delta fixed: width scales as (eps2 / eps1)^(3/4)
  EstimateReport r2 = r;
  r2.delta = 0.01;
  r2.config = config_at(0.01);
  r2.n_shifts = 46;
  const ConfidenceInterval ci2 = confidence_interval(r2, 0.95, c);
  CHECK((ci2.hi - ci2.lo) / (ci.hi - ci.lo) == doctest::Approx(std::pow(0.25, 0.75)).epsilon(1e-12));

  CHECK_THROWS_AS(confidence_interval(r, 0.95, CltConstants{0.7, 0.0, 5.0}), CLTInapplicable);
  CHECK_THROWS_AS(confidence_interval(r, 1.5, c), InvalidInput);
  EstimateReport skew = r;
  skew.weights.weights = {0.2, 0.6, 0.2};
  CHECK_THROWS_AS(confidence_interval(skew, 0.95, c), InvalidInput);
  EstimateReport negative = r;
  negative.theta_hat = -0.01;
  CHECK_THROWS_AS(confidence_interval(negative, 0.95), CLTInapplicable);
}

TEST_CASE("profile collects per-point errors") {
  const Observation obs = simulated(DiffusivityField::constant(0.02), 0.0025);
  EstimatorConfig t = config_at(0.05, 0.5, 0.3);
  const auto pts = estimate_profile(obs, {0.02, 0.1, 0.5}, t);
  REQUIRE(pts.size() == 3);
  CHECK_FALSE(pts[0].report.has_value());
  CHECK(pts[0].error.find("BandwidthTooSmall") != std::string::npos);
  REQUIRE(pts[1].report.has_value());
  REQUIRE(pts[2].report.has_value());
  CHECK(pts[1].report->n_shifts < pts[2].report->n_shifts);
  EstimatorConfig single = t;
  single.x0 = 0.5;
  CHECK(pts[2].report->theta_hat == estimate(obs, single).theta_hat);
}
