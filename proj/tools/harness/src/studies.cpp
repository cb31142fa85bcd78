#include "harness/studies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>

#include "harness/montecarlo.hpp"
#include "heatest/error.hpp"
#include "heatest/simulator.hpp"

namespace heatest::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  std::vector<double> d(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) d[i] = (v[i] - m) * (v[i] - m);
  return std::sqrt(pairwise_sum(d) / static_cast<double>(v.size() - 1));
}

double e_mode(int m, double x) {
  return std::numbers::sqrt2 * std::sin(m * std::numbers::pi * x);
}

void say(const Progress& p, const std::string& msg) {
  if (p) p(msg);
}

}  // namespace

std::vector<Probe> default_probes(const SpaceTimeGrid& grid, double delta) {
  const std::size_t rows = grid.n_rows();
  const std::size_t nx = grid.n_interior();
  const double T = grid.T();
  std::vector<Probe> out;

  {
    std::vector<double> a(rows, 0.0);
    for (std::size_t i = 0; i + 1 < rows; ++i) a[i] = 1.0;  // [0, T)
    std::vector<double> w(nx);
    for (std::size_t j = 0; j < nx; ++j) w[j] = e_mode(1, grid.node(j));
    out.push_back(Probe{"sine_mode_1",
                        SeparableTest{TimeProfile::indicator(0.0, T),
                                      [](double x) { return e_mode(1, x); }},
                        SeparableFunctional(grid, std::move(a), std::move(w))});
  }
  {
    const auto k = static_cast<int>(time_shift_count(T, delta) / 2);
    const LocalizedKernel lk = localize_delta(bump_kernel(), k, 0.0, delta, 0.5, Domain::unit(T));
    std::vector<double> a(rows);
    for (std::size_t i = 0; i < rows; ++i) a[i] = lk.time0(grid.time(i));
    std::vector<double> w(nx);
    for (std::size_t j = 0; j < nx; ++j) w[j] = lk.space0(grid.node(j));
    out.push_back(Probe{"localized_kernel", separable_test(lk),
                        SeparableFunctional(grid, std::move(a), std::move(w))});
  }
  {
    std::vector<double> a(rows, 0.0);
    for (std::size_t i = 0; i + 1 < rows; ++i) a[i] = std::sin(std::numbers::pi * grid.time(i) / T);
    std::vector<double> w(nx);
    for (std::size_t j = 0; j < nx; ++j) w[j] = e_mode(1, grid.node(j)) * e_mode(2, grid.node(j));
    TimeProfile tp{[T](double t) { return std::sin(std::numbers::pi * t / T); }, 0.0, T};
    out.push_back(Probe{"product_probe",
                        SeparableTest{tp, [](double x) { return e_mode(1, x) * e_mode(2, x); }},
                        SeparableFunctional(grid, std::move(a), std::move(w))});
  }
  return out;
}

std::vector<ProbeRow> compare_probes(const std::vector<Probe>& probes,
                                     const std::vector<std::vector<double>>& samples,
                                     const SpectralOracle& oracle, double z_max) {
  std::vector<ProbeRow> rows;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    ProbeRow r;
    r.name = probes[p].name;
    r.n = samples[p].size();
    std::vector<double> sq(samples[p].size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = samples[p][i] * samples[p][i];
    // the mean is known to be zero (X_0 = 0)
    r.mc_variance = mean_of(sq);
    r.mc_stderr = r.mc_variance * std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(r.n, 1)));
    const OracleValue ov = spectral_covariance(probes[p].test, probes[p].test, oracle);
    r.oracle = ov.value;
    r.oracle_error = ov.error_bound;
    r.z = r.mc_stderr > 0.0 ? (r.mc_variance - r.oracle) / r.mc_stderr : 0.0;
    r.pass = r.n > 1 && std::abs(r.z) <= z_max;
    rows.push_back(r);
  }
  return rows;
}

RateFit fit_rate(const std::vector<RateRow>& rows) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& r : rows) {
    if (r.replications - r.failures >= 2 && r.rmse > 0.0) {
      x.push_back(std::log(r.epsilon));
      y.push_back(std::log(r.rmse));
    }
  }
  RateFit f;
  if (x.size() < 2) return f;
  f.fit = linear_fit(x, y);
  f.defined = true;
  return f;
}

ParametricStudy run_parametric_study(const ParametricStudyOptions& opt, const Progress& progress) {
  const auto t0 = Clock::now();
  if (opt.replications == 0) throw InvalidInput("rate study: replications must be positive");
  if (opt.deltas.empty()) throw InvalidInput("rate study: no delta values");
  for (const auto& m : opt.modes) {
    if (m != "parametric" && m != "lipschitz") throw InvalidInput("rate study: unknown mode " + m);
  }
  SimulationSpec spec{SpaceTimeGrid(opt.T, opt.nt, opt.nx), DiffusivityField::constant(opt.theta0),
                      opt.sigma, 1.0};
  const SpaceTimeGrid& grid = spec.grid;

  struct Entry {
    double delta;
    double eps;
    std::unique_ptr<StatPlan> plan;
    std::vector<EstimatorSetup> setups;  // per mode
    bool ci;
  };
  std::vector<Entry> entries;
  MonteCarloJob job{.spec = spec};
  job.seed = opt.seed;
  job.replications = opt.replications;
  job.threads = opt.threads;
  for (double d : opt.deltas) {
    Entry e{d, d * d, std::make_unique<StatPlan>(opt.estimator.kernel, d, grid), {}, false};
    for (const auto& m : opt.modes) {
      EstimatorConfig c = opt.estimator;
      c.eps = e.eps;
      c.sigma = opt.sigma;
      c.delta_variant = DeltaVariant::SqrtEps;
      c.h = m == "parametric" ? 1.0 : std::sqrt(e.eps);
      e.setups.push_back(prepare_estimate(c, *e.plan));
    }
    for (double c : opt.ci_deltas) e.ci = e.ci || std::abs(c - d) < 1e-12;
    job.stats.push_back(StatRequest{e.plan.get(), static_noise_sd(e.eps, grid), false});
    entries.push_back(std::move(e));
  }
  std::vector<Probe> probes;
  if (opt.probes) {
    probes = default_probes(grid, opt.probe_delta);
    for (const auto& p : probes) job.functionals.push_back(p.functional);
  }

  const std::size_t n_modes = opt.modes.size();
  const std::size_t n_d = entries.size();
  std::vector<ReplicationRecord> records(opt.replications * n_d * n_modes);
  std::vector<std::vector<double>> probe_samples(probes.size(),
                                                 std::vector<double>(opt.replications));

  say(progress, "rate study: " + std::to_string(opt.replications) + " replications, nx = " +
                    std::to_string(opt.nx) + ", nt = " + std::to_string(opt.nt));
  run_monte_carlo(
      job,
      [&](Replication&& rep) {
        for (std::size_t d = 0; d < n_d; ++d) {
          const Entry& e = entries[d];
          const StatTable& table = rep.tables[d];
          // constant theta: the bracket vanishes identically
          const StatTable zero(table.n_windows(), table.n_sites(), true);
          for (std::size_t m = 0; m < n_modes; ++m) {
            ReplicationRecord& r = records[(rep.index * n_d + d) * n_modes + m];
            r.mode = opt.modes[m];
            r.delta = e.delta;
            r.rep = rep.index;
            try {
              const EstimateReport report = evaluate_estimate(e.setups[m], table, grid);
              const Decomposition dec = decompose(e.setups[m], table, zero, opt.theta0);
              r.theta_hat = report.theta_hat;
              r.I = dec.I;
              r.M = dec.M;
              r.qv_M = dec.qv_M;
              r.ok = true;
              if (e.ci && r.mode == "parametric") {
                try {
                  r.ci = confidence_interval(report, opt.ci_level);
                } catch (const Error& err) {
                  r.error = std::string("ci: ") + err.what();
                }
              }
            } catch (const Error& err) {
              r.ok = false;
              r.error = err.what();
            }
          }
        }
        for (std::size_t p = 0; p < probes.size(); ++p) {
          probe_samples[p][rep.index] = rep.functionals[p];
        }
      },
      [&](std::size_t done, std::size_t total) {
        say(progress, "  batch " + std::to_string(done) + "/" + std::to_string(total) + " (" +
                          std::to_string(static_cast<int>(seconds_since(t0))) + " s)");
      });

  ParametricStudy out;
  for (std::size_t m = 0; m < n_modes; ++m) {
    RateStudyResult rs;
    rs.mode = opt.modes[m];
    for (std::size_t d = 0; d < n_d; ++d) {
      RateRow row;
      row.mode = rs.mode;
      row.delta = entries[d].delta;
      row.epsilon = entries[d].eps;
      row.replications = opt.replications;
      row.n_shifts = entries[d].setups[m].weights.shifts.size();
      row.n_eps = entries[d].setups[m].shifts.n_eps;
      std::vector<double> th;
      std::vector<double> sq;
      for (std::size_t i = 0; i < opt.replications; ++i) {
        const auto& r = records[(i * n_d + d) * n_modes + m];
        if (!r.ok) {
          ++row.failures;
          continue;
        }
        th.push_back(r.theta_hat);
        sq.push_back((r.theta_hat - opt.theta0) * (r.theta_hat - opt.theta0));
      }
      if (static_cast<double>(row.failures) > opt.max_failure_fraction * opt.replications) {
        throw ConvergenceFailure("rate study aborted: " + std::to_string(row.failures) + " of " +
                                 std::to_string(opt.replications) + " replications failed (" +
                                 rs.mode + ", delta = " + fmt(row.delta) + ")");
      }
      row.mean = mean_of(th);
      row.bias = row.mean - opt.theta0;
      row.rmse = std::sqrt(mean_of(sq));
      row.stderr_mean = th.size() > 1 ? sd_of(th) / std::sqrt(static_cast<double>(th.size())) : 0.0;
      rs.rows.push_back(row);
    }
    rs.fit = fit_rate(rs.rows);
    out.rates.push_back(std::move(rs));
  }

  const auto pm = std::find(opt.modes.begin(), opt.modes.end(), "parametric");
  if (pm != opt.modes.end()) {
    const auto m = static_cast<std::size_t>(pm - opt.modes.begin());
    for (std::size_t d = 0; d < n_d; ++d) {
      std::vector<double> M;
      std::vector<double> M2;
      std::vector<double> qv;
      CoverageRow cov;
      cov.delta = entries[d].delta;
      cov.level = opt.ci_level;
      std::vector<double> hw;
      for (std::size_t i = 0; i < opt.replications; ++i) {
        const auto& r = records[(i * n_d + d) * n_modes + m];
        if (!r.ok) continue;
        M.push_back(r.M);
        M2.push_back(r.M * r.M);
        qv.push_back(r.qv_M);
        if (r.ci) {
          ++cov.total;
          if (r.ci->lo <= opt.theta0 && opt.theta0 <= r.ci->hi) ++cov.covered;
          hw.push_back(0.5 * (r.ci->hi - r.ci->lo));
        }
      }
      MartingaleRow mr;
      mr.delta = entries[d].delta;
      mr.n = M.size();
      mr.mean_M = mean_of(M);
      mr.stderr_M = M.size() > 1 ? sd_of(M) / std::sqrt(static_cast<double>(M.size())) : 0.0;
      mr.mean_M2 = mean_of(M2);
      mr.mean_qv = mean_of(qv);
      mr.ratio = mr.mean_qv > 0.0 ? mr.mean_M2 / mr.mean_qv : 0.0;
      out.martingale.push_back(mr);
      if (entries[d].ci) {
        cov.frequency = cov.total ? static_cast<double>(cov.covered) / cov.total : 0.0;
        cov.mean_half_width = mean_of(hw);
        out.coverage.push_back(cov);
      }
    }
  }
  if (!probes.empty()) {
    say(progress, "rate study: spectral oracle for " + std::to_string(probes.size()) + " probes");
    const SpectralOracle oracle(opt.theta0, opt.sigma, opt.oracle_modes);
    out.probes = compare_probes(probes, probe_samples, oracle);
  }
  out.records = std::move(records);
  out.seconds = seconds_since(t0);
  return out;
}

std::vector<double> default_profile_points() {
  std::vector<double> x;
  for (int i = 1; i <= 19; ++i) x.push_back(0.05 * i);
  return x;
}

ProfileStudy run_profile_study(const ProfileStudyOptions& opt, const Progress& progress) {
  const auto t0 = Clock::now();
  if (opt.replications == 0) throw InvalidInput("profile: replications must be positive");
  const std::vector<double> xs = opt.x0_list.empty() ? default_profile_points() : opt.x0_list;
  SimulationSpec spec{SpaceTimeGrid(opt.T, opt.nt, opt.nx), opt.theta, opt.sigma, 1.0};
  const SpaceTimeGrid& grid = spec.grid;

  struct Entry {
    double delta;
    std::unique_ptr<StatPlan> plan;
    std::vector<std::optional<EstimatorSetup>> setups;  // per x0
    std::vector<std::string> errors;
  };
  std::vector<Entry> entries;
  MonteCarloJob job{.spec = spec};
  job.seed = opt.seed;
  job.replications = opt.replications;
  job.threads = opt.threads;
  for (double d : opt.deltas) {
    const double eps = d * d;
    Entry e{d, std::make_unique<StatPlan>(opt.estimator.kernel, d, grid), {}, {}};
    for (double x0 : xs) {
      EstimatorConfig c = opt.estimator;
      c.x0 = x0;
      c.eps = eps;
      c.sigma = opt.sigma;
      c.delta_variant = DeltaVariant::SqrtEps;
      c.h = opt.bandwidth ? opt.bandwidth(eps) : std::cbrt(eps);
      try {
        e.setups.emplace_back(prepare_estimate(c, *e.plan));
        e.errors.emplace_back();
      } catch (const Error& err) {
        e.setups.emplace_back(std::nullopt);
        e.errors.emplace_back(err.what());
      }
    }
    job.stats.push_back(StatRequest{e.plan.get(), static_noise_sd(eps, grid), false});
    entries.push_back(std::move(e));
  }

  const std::size_t nd = entries.size();
  const std::size_t nxp = xs.size();
  std::vector<ProfileRow> rows(nd * opt.replications * nxp);
  say(progress, "profile: " + std::to_string(opt.replications) + " replications, " +
                    std::to_string(nxp) + " points, " + std::to_string(nd) + " scales");
  run_monte_carlo(
      job,
      [&](Replication&& rep) {
        for (std::size_t d = 0; d < nd; ++d) {
          for (std::size_t p = 0; p < nxp; ++p) {
            ProfileRow& r = rows[(d * opt.replications + rep.index) * nxp + p];
            r.delta = entries[d].delta;
            r.rep = rep.index;
            r.x0 = xs[p];
            r.theta_true = opt.theta(xs[p]);
            const auto& setup = entries[d].setups[p];
            if (!setup) {
              r.error = entries[d].errors[p];
              continue;
            }
            r.n_shifts = setup->weights.shifts.size();
            try {
              const EstimateReport report = evaluate_estimate(*setup, rep.tables[d], grid);
              r.theta_hat = report.theta_hat;
              if (opt.ci && rep.index == 0) {
                try {
                  r.ci = confidence_interval(report, 0.95);
                } catch (const Error& err) {
                  r.error = std::string("ci: ") + err.what();
                }
              }
            } catch (const Error& err) {
              r.error = err.what();
            }
          }
        }
      },
      [&](std::size_t done, std::size_t total) {
        say(progress, "  batch " + std::to_string(done) + "/" + std::to_string(total) + " (" +
                          std::to_string(static_cast<int>(seconds_since(t0))) + " s)");
      });

  ProfileStudy out;
  for (std::size_t d = 0; d < nd; ++d) {
    std::vector<double> abs_err;
    for (std::size_t p = 0; p < nxp; ++p) {
      std::vector<double> v;
      for (std::size_t i = 0; i < opt.replications; ++i) {
        const auto& r = rows[(d * opt.replications + i) * nxp + p];
        if (r.theta_hat) v.push_back(*r.theta_hat);
      }
      ProfileSummaryRow s;
      s.delta = entries[d].delta;
      s.x0 = xs[p];
      s.n = v.size();
      s.mean = v.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_of(v);
      s.sd = sd_of(v);
      s.theta_true = opt.theta(xs[p]);
      out.summary.push_back(s);
    }
    for (std::size_t i = 0; i < opt.replications; ++i) {
      for (std::size_t p = 0; p < nxp; ++p) {
        const auto& r = rows[(d * opt.replications + i) * nxp + p];
        if (r.theta_hat) abs_err.push_back(std::abs(*r.theta_hat - r.theta_true));
      }
    }
    out.mean_abs_error.emplace_back(entries[d].delta,
                                    abs_err.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                    : mean_of(abs_err));
  }
  out.rows = std::move(rows);
  out.seconds = seconds_since(t0);
  return out;
}

NoiseStudy run_noise_study(const NoiseStudyOptions& opt) {
  const auto t0 = Clock::now();
  if (opt.runs == 0) throw InvalidInput("noise study: runs must be positive");
  if (!(opt.epsilon > 0.0)) throw InvalidInput("noise study: epsilon must be positive");
  const SimulationSpec spec{SpaceTimeGrid(opt.T, opt.nt, opt.nx),
                            DiffusivityField::constant(opt.theta0), opt.sigma, 1.0};
  NoiseStudy out;
  for (std::size_t r = 0; r < opt.runs; ++r) {
    auto traj = std::make_shared<const Trajectory>(
        simulate(spec, {}, SeedSpec{opt.seed, r, NoisePurpose::Dynamic}));
    const Observation obs =
        add_static_noise(traj, opt.epsilon, SeedSpec{opt.seed, r, NoisePurpose::Static}, false);
    const double eps_hat =
        estimate_noise_level(obs, [](double x) { return std::sin(std::numbers::pi * x); });
    out.ratios.push_back(eps_hat / opt.epsilon);
  }
  out.mean_ratio = mean_of(out.ratios);
  out.sd_ratio = sd_of(out.ratios);
  out.seconds = seconds_since(t0);
  return out;
}

TkCheck run_tk_check(const TkCheckOptions& opt) {
  const auto t0 = Clock::now();
  const CompactFunction phi{[](double x) { return bump(x); }, -1.0, 1.0};
  TkCheck out;
  std::vector<double> x;
  std::vector<double> y;
  const DiffusivityField c = DiffusivityField::constant(opt.const_theta);
  for (double d : opt.const_deltas) {
    const double e = trotter_kato_error(phi, opt.const_t, d, d, opt.p, c, opt.const_x0);
    out.constant.emplace_back(d, e);
    if (e > 0.0) {
      x.push_back(1.0 / (d * d));
      y.push_back(std::log(e));
    }
  }
  if (x.size() >= 2) {
    out.constant_fit = linear_fit(x, y);
    out.constant_pass = x.size() == opt.const_deltas.size() &&
                        out.constant_fit.r_squared >= opt.min_r_squared &&
                        out.constant_fit.slope < 0.0;
  }
  x.clear();
  y.clear();
  const DiffusivityField th = opt.het_theta.scaled(1.0 / opt.het_theta(opt.het_x0));
  for (double h : opt.het_h) {
    const double e = trotter_kato_error(phi, opt.het_t, opt.het_delta, h, opt.p, th, opt.het_x0);
    out.heterogeneous.emplace_back(h, e);
    if (e > 0.0) {
      x.push_back(std::log(h));
      y.push_back(std::log(e));
    }
  }
  if (x.size() >= 2) {
    out.heterogeneous_fit = linear_fit(x, y);
    out.heterogeneous_pass = x.size() == opt.het_h.size() &&
                             out.heterogeneous_fit.slope >= opt.slope_lo &&
                             out.heterogeneous_fit.slope <= opt.slope_hi;
  }
  out.seconds = seconds_since(t0);
  return out;
}

OracleCheck run_oracle_check(const OracleCheckOptions& opt, const Progress& progress) {
  const auto t0 = Clock::now();
  OracleCheck out;
  const Kernel K = bump_kernel();
  const Kernel lap = K.laplacian_kernel();
  const Kernel lag = lap.time_shifted(-1.0);
  const Json kparams{{"kernel", K.name()}, {"theta0", opt.theta0}, {"sigma", opt.sigma}};

  say(progress, "oracle-check: limiting constants");
  const OracleValue dd = c_infinity_checked(lap, lap, opt.theta0, opt.sigma);
  const OracleValue dl = c_infinity_checked(lap, lag, opt.theta0, opt.sigma);
  out.records.push_back({"c_inf(lap K, lap K)", kparams, dd.value, dd.error_bound});
  out.records.push_back({"c_inf(lap K, lap K_{-1,0})", kparams, dl.value, dl.error_bound});
  const double grad = c_infinity_gradient_form(K, opt.theta0, opt.sigma);
  out.records.push_back({"c_inf(lap K, lap K) gradient form", kparams, grad, 0.0});
  const double skk = sigma_K_sq(K, opt.sigma, opt.theta0);
  out.records.push_back({"sigma_K^2", kparams, skk, 0.0});
  out.records.push_back({"||lap K||^2", kparams, kernel_norms(K).lap, 0.0});

  const double rel_dd = dd.error_bound / std::abs(dd.value);
  const double rel_dl = dl.error_bound / std::abs(dl.value);
  out.checks.push_back({"c_inf grid convergence", rel_dd < opt.cinf_tolerance && rel_dl < opt.cinf_tolerance,
                        Json{{"relative_change_dd", rel_dd}, {"relative_change_lag", rel_dl},
                             {"tolerance", opt.cinf_tolerance}}});
  const double rel_grad = std::abs(grad - dd.value) / std::abs(dd.value);
  out.checks.push_back({"c_inf gradient identity", rel_grad < opt.cinf_tolerance,
                        Json{{"fourier", dd.value}, {"gradient_form", grad}, {"relative", rel_grad}}});
  out.checks.push_back({"c_inf positivity", dd.value > 0.0 && dl.value > 0.0,
                        Json{{"dd", dd.value}, {"lag", dl.value}}});

  say(progress, "oracle-check: simulator against spectral covariance");
  SimulationSpec spec{SpaceTimeGrid(opt.T, opt.nt, opt.nx), DiffusivityField::constant(opt.theta0),
                      opt.sigma, opt.noise_scale_hook};
  const std::vector<Probe> probes = default_probes(spec.grid, opt.probe_delta);
  const SpectralOracle oracle(opt.theta0, opt.sigma, opt.oracle_modes);
  {
    const OracleValue ab = spectral_covariance(probes[0].test, probes[1].test, oracle);
    const OracleValue ba = spectral_covariance(probes[1].test, probes[0].test, oracle);
    const double rel = std::abs(ab.value - ba.value) /
                       std::max(std::abs(ab.value), std::numeric_limits<double>::min());
    out.checks.push_back({"spectral covariance symmetry", rel < 1e-10,
                          Json{{"ab", ab.value}, {"ba", ba.value}, {"relative", rel}}});
  }
  MonteCarloJob job{.spec = spec};
  job.seed = opt.seed;
  job.replications = opt.replications;
  job.threads = opt.threads;
  for (const auto& p : probes) job.functionals.push_back(p.functional);
  std::vector<std::vector<double>> samples(probes.size(), std::vector<double>(opt.replications));
  run_monte_carlo(job, [&](Replication&& rep) {
    for (std::size_t p = 0; p < probes.size(); ++p) samples[p][rep.index] = rep.functionals[p];
  });
  out.probes = compare_probes(probes, samples, oracle);
  for (const auto& r : out.probes) {
    out.records.push_back({"var <X, " + r.name + ">",
                           Json{{"theta0", opt.theta0}, {"sigma", opt.sigma}, {"T", opt.T},
                                {"n_modes", opt.oracle_modes}},
                           r.oracle, r.oracle_error});
    out.checks.push_back({"simulator covariance " + r.name, r.pass,
                          Json{{"mc_variance", r.mc_variance}, {"mc_stderr", r.mc_stderr},
                               {"oracle", r.oracle}, {"ratio", r.mc_variance / r.oracle}, {"z", r.z},
                               {"n", r.n}}});
  }
  {
    const OracleValue pv = pointwise_variance(oracle, opt.T, 0.5);
    out.records.push_back({"var X(T, 0.5)", Json{{"theta0", opt.theta0}, {"sigma", opt.sigma}},
                           pv.value, pv.error_bound});
  }

  if (opt.run_tk) {
    say(progress, "oracle-check: Trotter-Kato decay");
    const TkCheck tk = run_tk_check(opt.tk);
    const Json j = to_json(tk);
    out.checks.push_back({"trotter-kato constant theta", tk.constant_pass, j["constant"]});
    out.checks.push_back({"trotter-kato heterogeneous theta", tk.heterogeneous_pass,
                          j["heterogeneous"]});
  }
  out.all_pass = std::all_of(out.checks.begin(), out.checks.end(),
                             [](const CheckRecord& c) { return c.pass; });
  out.seconds = seconds_since(t0);
  return out;
}

// ---------------------------------------------------------------------------

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "nan"; }

Json to_json(const EstimateReport& r) {
  Json weights = Json::array();
  for (std::size_t i = 0; i < r.weights.shifts.size(); ++i) {
    weights.push_back(Json::array({r.weights.shifts[i], r.weights.weights[i]}));
  }
  Json j{{"theta_hat", r.theta_hat},
         {"numerator", r.numerator},
         {"I", r.I},
         {"qv_M", r.qv_M},
         {"sigma_K_sq", r.sigma_K_sq},
         {"B", r.B ? Json(*r.B) : Json(nullptr)},
         {"M", r.M ? Json(*r.M) : Json(nullptr)},
         {"ci", r.ci ? Json{{"lo", r.ci->lo}, {"hi", r.ci->hi}, {"level", r.ci->level}}
                     : Json(nullptr)},
         {"config",
          {{"x0", r.config.x0},
           {"eps", r.config.eps},
           {"h", r.h},
           {"weights", to_string(r.config.weights)},
           {"gamma", r.config.gamma},
           {"margin_factor", r.config.margin_factor},
           {"delta_variant", to_string(r.config.delta_variant)},
           {"sigma", r.config.sigma},
           {"kernel", r.config.kernel.name()}}},
         {"delta", r.delta},
         {"N_eps", r.n_eps},
         {"n_shifts", r.n_shifts},
         {"N_eff", r.n_eps * r.n_shifts},
         {"T", r.T},
         {"weights", weights}};
  return j;
}

Json to_json(const RateStudyResult& r) {
  Json rows = Json::array();
  for (const auto& x : r.rows) {
    rows.push_back({{"delta", x.delta}, {"epsilon", x.epsilon}, {"replications", x.replications},
                    {"failures", x.failures}, {"rmse", x.rmse}, {"mean", x.mean},
                    {"bias", x.bias}, {"stderr", x.stderr_mean}, {"n_shifts", x.n_shifts},
                    {"N_eps", x.n_eps}});
  }
  Json fit = nullptr;
  if (r.fit.defined) {
    fit = {{"slope", r.fit.fit.slope}, {"slope_se", r.fit.fit.slope_se},
           {"intercept", r.fit.fit.intercept}, {"r_squared", r.fit.fit.r_squared}};
  }
  return Json{{"mode", r.mode},
              {"reference_rate", r.mode == "parametric" ? 0.75 : 0.5},
              {"rows", rows},
              {"fit", fit}};
}

Json to_json(const OracleRecord& r) {
  return Json{{"quantity", r.quantity}, {"params", r.params}, {"value", r.value},
              {"error_bound", r.error_bound}};
}

Json to_json(const TkCheck& r) {
  Json c = Json::array();
  for (const auto& [d, e] : r.constant) c.push_back({{"delta", d}, {"error", e}});
  Json h = Json::array();
  for (const auto& [hh, e] : r.heterogeneous) h.push_back({{"h", hh}, {"error", e}});
  return Json{{"constant",
               {{"points", c},
                {"slope_vs_delta_minus2", r.constant_fit.slope},
                {"r_squared", r.constant_fit.r_squared},
                {"pass", r.constant_pass}}},
              {"heterogeneous",
               {{"points", h},
                {"loglog_slope", r.heterogeneous_fit.slope},
                {"slope_se", r.heterogeneous_fit.slope_se},
                {"pass", r.heterogeneous_pass}}},
              {"seconds", r.seconds}};
}

void write_rate_csv(std::ostream& out, const std::vector<RateStudyResult>& rates) {
  out << "mode,delta,epsilon,replications,failures,rmse,mean,bias,stderr,n_shifts,n_eps,"
         "ref_eps_3_4,ref_eps_1_2\n";
  for (const auto& rs : rates) {
    if (rs.rows.empty()) continue;
    // dashed reference lines anchored at the first row
    const RateRow& a = rs.rows.front();
    for (const auto& r : rs.rows) {
      out << r.mode << ',' << fmt(r.delta) << ',' << fmt(r.epsilon) << ',' << r.replications << ','
          << r.failures << ',' << fmt(r.rmse) << ',' << fmt(r.mean) << ',' << fmt(r.bias) << ','
          << fmt(r.stderr_mean) << ',' << r.n_shifts << ',' << r.n_eps << ','
          << fmt(a.rmse * std::pow(r.epsilon / a.epsilon, 0.75)) << ','
          << fmt(a.rmse * std::pow(r.epsilon / a.epsilon, 0.5)) << '\n';
    }
  }
}

void write_replications_csv(std::ostream& out, const std::vector<ReplicationRecord>& recs) {
  out << "mode,delta,rep,ok,theta_hat,I,M,qv_M,ci_lo,ci_hi\n";
  for (const auto& r : recs) {
    out << r.mode << ',' << fmt(r.delta) << ',' << r.rep << ',' << (r.ok ? 1 : 0) << ','
        << fmt(r.theta_hat) << ',' << fmt(r.I) << ',' << fmt(r.M) << ',' << fmt(r.qv_M) << ','
        << (r.ci ? fmt(r.ci->lo) : "nan") << ',' << (r.ci ? fmt(r.ci->hi) : "nan") << '\n';
  }
}

void write_profile_csv(std::ostream& out, const std::vector<ProfileRow>& rows, bool with_truth) {
  out << "delta,rep,x0,theta_hat,n_shifts,ci_lo,ci_hi";
  if (with_truth) out << ",theta_true";
  out << '\n';
  for (const auto& r : rows) {
    out << fmt(r.delta) << ',' << r.rep << ',' << fmt(r.x0) << ',' << fmt(r.theta_hat) << ','
        << r.n_shifts << ',' << (r.ci ? fmt(r.ci->lo) : "nan") << ','
        << (r.ci ? fmt(r.ci->hi) : "nan");
    if (with_truth) out << ',' << fmt(r.theta_true);
    out << '\n';
  }
}

void write_profile_summary_csv(std::ostream& out, const std::vector<ProfileSummaryRow>& rows) {
  out << "delta,x0,n,mean_theta_hat,sd_theta_hat,theta_true\n";
  for (const auto& r : rows) {
    out << fmt(r.delta) << ',' << fmt(r.x0) << ',' << r.n << ',' << fmt(r.mean) << ','
        << fmt(r.sd) << ',' << fmt(r.theta_true) << '\n';
  }
}

}  // namespace heatest::harness
