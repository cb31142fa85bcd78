#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "harness/config.hpp"
#include "harness/manifest.hpp"
#include "harness/montecarlo.hpp"
#include "harness/studies.hpp"
#include "heatest/error.hpp"
#include "heatest/estimator.hpp"
#include "heatest/field_io.hpp"
#include "heatest/simulator.hpp"

namespace fs = std::filesystem;
using namespace heatest;
using namespace heatest::harness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCheck = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out = "heatest-out";
  std::vector<std::string> overrides;
  bool quiet = false;
  bool check_only = false;
};

struct Run {
  Json config;
  fs::path dir;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  RunManifest manifest;
  Progress progress;
};

// Config errors surface with exit code 2, whatever their origin.
template <class F>
auto configured(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

Run open_run(const std::string& command, const Common& c) {
  Run r;
  r.config = load_config(c.config_path);
  for (const auto& o : c.overrides) apply_override(r.config, o);
  if (c.seed) r.config["seed"] = *c.seed;
  const auto seed = get_integer(r.config, "seed", 0);
  if (seed < 0) throw ConfigError("config key 'seed' must be non-negative");
  r.seed = static_cast<std::uint64_t>(seed);
  r.threads = thread_count(c.threads);
  r.dir = c.out;
  r.manifest.command = command;
  r.manifest.config = r.config;
  r.manifest.version = version_tag();
  r.manifest.seed = r.seed;
  r.manifest.started = utc_timestamp();
  if (!c.quiet) {
    r.progress = [](const std::string& msg) { std::cerr << "[heatest] " << msg << '\n'; };
  }
  return r;
}

void prepare_dir(const Run& r) {
  std::error_code ec;
  fs::create_directories(r.dir, ec);
  if (ec) throw IoError("cannot create output directory '" + r.dir.string() + "': " + ec.message());
}

template <class F>
void write_output(Run& r, const std::string& name, F&& writer) {
  const fs::path p = r.dir / name;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  writer(out);
  out.close();
  if (!out) throw IoError("write failed for '" + p.string() + "'");
  r.manifest.record(r.dir, name);
}

void write_json(Run& r, const std::string& name, const Json& j) {
  write_output(r, name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

void finish(Run& r) {
  r.manifest.finished = utc_timestamp();
  write_manifest(r.dir, r.manifest);
}

void say(const Run& r, const std::string& msg) {
  if (r.progress) r.progress(msg);
}

double constant_theta(const Json& config) {
  const Json* t = find(config, "theta");
  if (!t) throw ConfigError("missing config key 'theta'");
  const DiffusivityField th = theta_from_json(*t);
  if (!th.is_constant()) throw ConfigError("config key 'theta' must be constant for this command");
  return th(0.5);
}

std::vector<std::string> get_strings(const Json& config, std::string_view key,
                                     const std::vector<std::string>& fallback) {
  const Json* v = find(config, key);
  if (!v) return fallback;
  if (v->is_string()) return {v->get<std::string>()};
  if (!v->is_array()) throw ConfigError("config key '" + std::string(key) + "' must be a list of strings");
  std::vector<std::string> out;
  for (const auto& e : *v) {
    if (!e.is_string()) throw ConfigError("config key '" + std::string(key) + "' must be a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::size_t get_count(const Json& config, std::string_view key, std::size_t fallback) {
  const auto v = get_integer(config, key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ConfigError("config key '" + std::string(key) + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Common& c) {
  Run r = open_run("simulate", c);
  const ModelConfig m = configured([&] { return model_from_config(r.config); });
  const std::size_t stride = get_count(r.config, "output.slice_stride",
                                       std::max<std::size_t>(1, m.spec.grid.nt() / 50));
  if (stride == 0) throw ConfigError("config key 'output.slice_stride' must be positive");
  const double entries = static_cast<double>(m.spec.grid.n_rows()) * m.spec.grid.n_interior();
  if (c.check_only) {
    std::cout << "config ok: nt = " << m.spec.grid.nt() << ", nx = " << m.spec.grid.nx()
              << ", dt = " << m.spec.grid.dt() << ", dx = " << m.spec.grid.dx()
              << ", stored entries = " << entries << '\n';
    return kExitOk;
  }
  prepare_dir(r);
  say(r, "simulating " + std::to_string(m.spec.grid.nt()) + " steps on " +
             std::to_string(m.spec.grid.nx()) + " cells");
  auto traj = std::make_shared<const Trajectory>(
      simulate(m.spec, {}, SeedSpec{r.seed, 0, NoisePurpose::Dynamic}));
  write_output(r, "trajectory.hest",
               [&](std::ostream& o) { write_field(o, traj->grid(), traj->values()); });
  write_output(r, "trajectory_slices.csv", [&](std::ostream& o) {
    write_field_csv(o, traj->grid(), traj->values(), stride);
  });
  if (m.epsilon > 0.0) {
    const Observation obs =
        add_static_noise(traj, m.epsilon, SeedSpec{r.seed, 0, NoisePurpose::Static}, false);
    write_output(r, "observation.hest",
                 [&](std::ostream& o) { write_field(o, obs.grid(), obs.values()); });
    write_output(r, "observation_slices.csv", [&](std::ostream& o) {
      write_field_csv(o, obs.grid(), obs.values(), stride);
    });
  }
  finish(r);
  return kExitOk;
}

int cmd_estimate(const Common& c) {
  Run r = open_run("estimate", c);
  const std::string input = get_string(r.config, "input.observation", "");
  const std::string input_traj = get_string(r.config, "input.trajectory", "");
  const bool diagnostic = get_bool(r.config, "diagnostic", false);
  const double level = get_number(r.config, "estimator.ci_level", 0.95);
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("config key 'estimator.ci_level' must be in (0, 1)");

  std::optional<ModelConfig> model;
  double eps = 0.0;
  double sigma = 0.0;
  std::optional<DiffusivityField> theta;
  configured([&] {
    if (input.empty()) {
      model = model_from_config(r.config);
      eps = model->epsilon;
      sigma = model->spec.sigma;
      theta = model->spec.theta;
    } else {
      eps = get_number(r.config, "epsilon");
      sigma = get_number(r.config, "sigma");
      if (diagnostic) {
        const Json* t = find(r.config, "theta");
        if (!t) throw ConfigError("missing config key 'theta'");
        theta = theta_from_json(*t);
      }
    }
    if (!(eps > 0.0)) throw ConfigError("config key 'epsilon' must be positive");
    return 0;
  });
  const EstimatorConfig cfg = configured([&] {
    EstimatorConfig e = estimator_from_config(r.config, eps, sigma);
    e.validate();
    return e;
  });
  if (c.check_only) {
    std::cout << "config ok: x0 = " << cfg.x0 << ", eps = " << cfg.eps << ", delta = " << cfg.delta()
              << ", h = " << cfg.bandwidth() << '\n';
    return kExitOk;
  }
  prepare_dir(r);

  EstimateReport report;
  std::optional<Decomposition> dec;
  if (!input.empty()) {
    say(r, "reading " + input);
    StoredField f = read_field(input);
    std::shared_ptr<const Trajectory> traj;
    if (diagnostic) {
      if (input_traj.empty()) {
        throw DiagnosticsUnavailable("diagnostic mode needs 'input.trajectory' with a file input");
      }
      StoredField x = read_field(input_traj);
      if (!(x.grid == f.grid)) throw InvalidInput("trajectory and observation grids differ");
      traj = std::make_shared<const Trajectory>(SimulationSpec{x.grid, *theta, sigma, 1.0},
                                                std::move(x.values), std::vector<double>{},
                                                SeedSpec{r.seed, 0, NoisePurpose::Dynamic});
    }
    const Observation obs(f.grid, std::move(f.values), eps,
                          SeedSpec{r.seed, 0, NoisePurpose::Static}, traj);
    report = estimate(obs, cfg);
    if (diagnostic) dec = error_decomposition(obs, cfg, *theta);
  } else {
    const SpaceTimeGrid& grid = model->spec.grid;
    auto plan = std::make_unique<StatPlan>(cfg.kernel, cfg.delta(), grid);
    const EstimatorSetup setup = prepare_estimate(cfg, *plan);
    MonteCarloJob job{.spec = model->spec};
    job.seed = r.seed;
    job.replications = 1;
    job.threads = 1;
    job.stats.push_back(StatRequest{plan.get(), static_noise_sd(eps, grid), false});
    std::unique_ptr<StatPlan> clean;
    if (diagnostic) {
      clean = std::make_unique<StatPlan>(cfg.kernel, cfg.delta(), grid);
      prepare_estimate(cfg, *clean);
      clean->set_bracket(*theta, (*theta)(cfg.x0));
      job.stats.push_back(StatRequest{clean.get(), 0.0, true});
    }
    say(r, "streaming one trajectory (" + std::to_string(grid.nt()) + " steps)");
    std::vector<StatTable> tables;
    run_monte_carlo(job, [&](Replication&& rep) { tables = std::move(rep.tables); });
    report = evaluate_estimate(setup, tables[0], grid);
    if (diagnostic) dec = decompose(setup, tables[0], tables[1], (*theta)(cfg.x0));
  }
  if (dec) {
    report.B = dec->B;
    report.M = dec->M;
  }
  Json j = to_json(report);
  try {
    report.ci = confidence_interval(report, level);
    j["ci"] = Json{{"lo", report.ci->lo}, {"hi", report.ci->hi}, {"level", report.ci->level}};
  } catch (const Error& e) {
    j["ci_error"] = std::string(to_string(e.kind())) + ": " + e.what();
  }
  if (dec) {
    j["decomposition"] = Json{{"theta_true", (*theta)(cfg.x0)}, {"I", dec->I}, {"B", dec->B},
                              {"M", dec->M}, {"qv_M", dec->qv_M}};
  }
  write_json(r, "estimate.json", j);
  std::cout << "theta_hat = " << fmt(report.theta_hat) << '\n';
  finish(r);
  return kExitOk;
}

int cmd_rate_study(const Common& c) {
  Run r = open_run("rate-study", c);
  ParametricStudyOptions o = configured([&] {
    ParametricStudyOptions s;
    s.theta0 = constant_theta(r.config);
    s.sigma = get_number(r.config, "sigma");
    s.T = get_number(r.config, "T", s.T);
    s.nt = get_count(r.config, "nt", s.nt);
    s.nx = get_count(r.config, "nx", s.nx);
    s.seed = r.seed;
    s.threads = r.threads;
    s.deltas = get_numbers(r.config, "study.deltas", s.deltas);
    s.replications = get_count(r.config, "study.replications", s.replications);
    s.modes = get_strings(r.config, "study.modes", s.modes);
    s.ci_deltas = get_numbers(r.config, "study.ci_deltas", s.ci_deltas);
    s.ci_level = get_number(r.config, "study.ci_level", s.ci_level);
    s.probes = get_bool(r.config, "study.probes", s.probes);
    s.probe_delta = get_number(r.config, "study.probe_delta", s.probe_delta);
    s.oracle_modes = get_count(r.config, "study.oracle_modes", s.oracle_modes);
    s.max_failure_fraction = get_number(r.config, "study.max_failure_fraction", s.max_failure_fraction);
    s.estimator = estimator_from_config(r.config, 1e-4, s.sigma);
    for (const auto& m : s.modes) {
      if (m != "parametric" && m != "lipschitz") {
        throw ConfigError("config key 'study.modes' accepts \"parametric\" and \"lipschitz\"");
      }
    }
    return s;
  });
  if (c.check_only) {
    std::cout << "config ok: " << o.deltas.size() << " scales, " << o.replications
              << " replications\n";
    return kExitOk;
  }
  prepare_dir(r);
  const ParametricStudy st = run_parametric_study(o, r.progress);
  write_output(r, "rate.csv", [&](std::ostream& out) { write_rate_csv(out, st.rates); });
  write_output(r, "replications.csv",
               [&](std::ostream& out) { write_replications_csv(out, st.records); });
  Json rates = Json::array();
  for (const auto& rs : st.rates) rates.push_back(to_json(rs));
  Json mart = Json::array();
  for (const auto& m : st.martingale) {
    mart.push_back({{"delta", m.delta}, {"n", m.n}, {"mean_M", m.mean_M}, {"stderr_M", m.stderr_M},
                    {"mean_M2", m.mean_M2}, {"mean_qv", m.mean_qv}, {"ratio", m.ratio}});
  }
  Json cov = Json::array();
  for (const auto& v : st.coverage) {
    cov.push_back({{"delta", v.delta}, {"level", v.level}, {"covered", v.covered},
                   {"total", v.total}, {"frequency", v.frequency},
                   {"mean_half_width", v.mean_half_width}});
  }
  Json probes = Json::array();
  for (const auto& p : st.probes) {
    probes.push_back({{"name", p.name}, {"n", p.n}, {"mc_variance", p.mc_variance},
                      {"mc_stderr", p.mc_stderr}, {"oracle", p.oracle},
                      {"oracle_error", p.oracle_error}, {"z", p.z}, {"pass", p.pass}});
  }
  write_json(r, "rate.json",
             Json{{"rates", rates}, {"martingale", mart}, {"coverage", cov}, {"probes", probes}});
  for (const auto& rs : st.rates) {
    std::cout << rs.mode << ": ";
    if (rs.fit.defined) {
      std::cout << "slope " << fmt(rs.fit.fit.slope) << " +- " << fmt(rs.fit.fit.slope_se) << '\n';
    } else {
      std::cout << "slope undefined\n";
    }
  }
  finish(r);
  return kExitOk;
}

int cmd_profile(const Common& c) {
  Run r = open_run("profile", c);
  const bool diagnostic = get_bool(r.config, "diagnostic", false);
  ProfileStudyOptions o = configured([&] {
    ProfileStudyOptions s;
    const Json* t = find(r.config, "theta");
    if (!t) throw ConfigError("missing config key 'theta'");
    s.theta = theta_from_json(*t);
    s.sigma = get_number(r.config, "sigma");
    s.T = get_number(r.config, "T", s.T);
    s.nt = get_count(r.config, "nt", s.nt);
    s.nx = get_count(r.config, "nx", s.nx);
    s.seed = r.seed;
    s.threads = r.threads;
    s.deltas = get_numbers(r.config, "study.deltas", s.deltas);
    s.replications = get_count(r.config, "study.replications", s.replications);
    s.x0_list = get_numbers(r.config, "study.x0", {});
    s.ci = get_bool(r.config, "study.ci", s.ci);
    s.estimator = estimator_from_config(r.config, 1e-4, s.sigma);
    if (find(r.config, "estimator.h")) {
      const Json cfg = r.config;
      const double sigma = s.sigma;
      s.bandwidth = [cfg, sigma](double eps) {
        return estimator_from_config(cfg, eps, sigma).bandwidth();
      };
    }
    return s;
  });
  if (c.check_only) {
    std::cout << "config ok: " << o.deltas.size() << " scales, " << o.replications
              << " replications\n";
    return kExitOk;
  }
  prepare_dir(r);
  const ProfileStudy st = run_profile_study(o, r.progress);
  write_output(r, "profile.csv",
               [&](std::ostream& out) { write_profile_csv(out, st.rows, diagnostic); });
  write_output(r, "profile_summary.csv",
               [&](std::ostream& out) { write_profile_summary_csv(out, st.summary); });
  Json mae = Json::array();
  for (const auto& [d, e] : st.mean_abs_error) {
    mae.push_back({{"delta", d}, {"mean_abs_error", std::isnan(e) ? Json(nullptr) : Json(e)}});
  }
  Json errors = Json::array();
  for (const auto& row : st.rows) {
    if (!row.error.empty()) {
      errors.push_back({{"delta", row.delta}, {"rep", row.rep}, {"x0", row.x0}, {"error", row.error}});
    }
  }
  write_json(r, "profile.json", Json{{"mean_abs_error", mae}, {"errors", errors}});
  finish(r);
  return kExitOk;
}

TkCheckOptions tk_options(const Json& config) {
  TkCheckOptions s;
  s.p = get_number(config, "tk.p", s.p);
  s.const_theta = get_number(config, "tk.const_theta", s.const_theta);
  s.const_t = get_number(config, "tk.const_t", s.const_t);
  s.const_x0 = get_number(config, "tk.const_x0", s.const_x0);
  s.const_deltas = get_numbers(config, "tk.const_deltas", s.const_deltas);
  if (const Json* t = find(config, "tk.het_theta")) s.het_theta = theta_from_json(*t, "tk.het_theta");
  s.het_x0 = get_number(config, "tk.het_x0", s.het_x0);
  s.het_t = get_number(config, "tk.het_t", s.het_t);
  s.het_delta = get_number(config, "tk.het_delta", s.het_delta);
  s.het_h = get_numbers(config, "tk.het_h", s.het_h);
  s.min_r_squared = get_number(config, "tk.min_r_squared", s.min_r_squared);
  s.slope_lo = get_number(config, "tk.slope_lo", s.slope_lo);
  s.slope_hi = get_number(config, "tk.slope_hi", s.slope_hi);
  return s;
}

int cmd_oracle_check(const Common& c) {
  Run r = open_run("oracle-check", c);
  OracleCheckOptions o = configured([&] {
    OracleCheckOptions s;
    s.theta0 = constant_theta(r.config);
    s.sigma = get_number(r.config, "sigma");
    s.T = get_number(r.config, "T", s.T);
    s.nt = get_count(r.config, "nt", s.nt);
    s.nx = get_count(r.config, "nx", s.nx);
    s.seed = r.seed;
    s.threads = r.threads;
    s.noise_scale_hook = get_number(r.config, "noise_scale_hook", s.noise_scale_hook);
    s.replications = get_count(r.config, "check.replications", s.replications);
    s.probe_delta = get_number(r.config, "check.probe_delta", s.probe_delta);
    s.oracle_modes = get_count(r.config, "check.oracle_modes", s.oracle_modes);
    s.cinf_tolerance = get_number(r.config, "check.cinf_tolerance", s.cinf_tolerance);
    s.run_tk = get_bool(r.config, "check.trotter_kato", s.run_tk);
    s.tk = tk_options(r.config);
    return s;
  });
  if (c.check_only) {
    std::cout << "config ok\n";
    return kExitOk;
  }
  prepare_dir(r);
  const OracleCheck oc = run_oracle_check(o, r.progress);
  Json checks = Json::array();
  for (const auto& k : oc.checks) {
    checks.push_back({{"name", k.name}, {"pass", k.pass}, {"detail", k.detail}});
    std::cout << (k.pass ? "PASS " : "FAIL ") << k.name << '\n';
  }
  Json records = Json::array();
  for (const auto& rec : oc.records) records.push_back(to_json(rec));
  write_json(r, "oracle_check.json",
             Json{{"all_pass", oc.all_pass}, {"checks", checks}, {"records", records}});
  finish(r);
  return oc.all_pass ? kExitOk : kExitCheck;
}

int cmd_tk_check(const Common& c) {
  Run r = open_run("tk-check", c);
  const TkCheckOptions o = configured([&] { return tk_options(r.config); });
  if (c.check_only) {
    std::cout << "config ok\n";
    return kExitOk;
  }
  prepare_dir(r);
  say(r, "trotter-kato decay checks");
  const TkCheck tk = run_tk_check(o);
  write_json(r, "tk_check.json", to_json(tk));
  std::cout << (tk.constant_pass ? "PASS" : "FAIL") << " constant theta: R^2 = "
            << fmt(tk.constant_fit.r_squared) << '\n'
            << (tk.heterogeneous_pass ? "PASS" : "FAIL") << " heterogeneous theta: slope = "
            << fmt(tk.heterogeneous_fit.slope) << '\n';
  finish(r);
  return tk.constant_pass && tk.heterogeneous_pass ? kExitOk : kExitCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heatest: diffusivity estimation for the stochastic heat equation"};
  app.require_subcommand(1);
  Common common;

  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const Common&);
  };
  const std::vector<Entry> entries{
      {"simulate", "Simulate a trajectory and its noisy observation", cmd_simulate},
      {"estimate", "Estimate theta(x0) from a file or a streamed trajectory", cmd_estimate},
      {"rate-study", "Monte Carlo RMSE rate study for constant theta", cmd_rate_study},
      {"profile", "Reconstruct a diffusivity profile", cmd_profile},
      {"oracle-check", "Simulator and constants against the oracles", cmd_oracle_check},
      {"tk-check", "Trotter-Kato decay checks", cmd_tk_check},
  };
  std::vector<CLI::App*> subs;
  for (const auto& e : entries) {
    CLI::App* s = app.add_subcommand(e.name, e.help);
    s->add_option("--config", common.config_path, "Config file (TOML subset, or a manifest.json)")
        ->required();
    s->add_option("--seed", common.seed, "Master seed, overrides the config");
    s->add_option("--threads", common.threads, "Worker threads")->envname("HEATEST_THREADS");
    s->add_option("--out", common.out, "Output directory");
    s->add_option("--override", common.overrides, "KEY=VALUE config override (repeatable)")
        ->allow_extra_args(false);
    s->add_flag("--quiet", common.quiet, "No progress messages");
    s->add_flag("--check", common.check_only, "Validate the config and exit");
    subs.push_back(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) return entries[i].fn(common);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << to_string(e.kind()) << ": " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
