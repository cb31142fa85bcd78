#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "harness/config.hpp"
#include "heatest/estimator.hpp"
#include "heatest/numerics.hpp"
#include "heatest/oracle.hpp"
#include "heatest/semigroup.hpp"

namespace heatest::harness {

using Progress = std::function<void(const std::string&)>;

// ---------------------------------------------------------------------------
// Covariance probes: <X, phi> against the spectral oracle.

struct Probe {
  std::string name;
  SeparableTest test;  // continuous, for the oracle
  SeparableFunctional functional;  // discrete Riemann sum on the grid
};

/// Low sine mode, localized kernel at scale `delta` (x0 = 0.5, middle time
/// window) and the product probe sin(pi t / T) e_1(x) e_2(x).
std::vector<Probe> default_probes(const SpaceTimeGrid& grid, double delta);

struct ProbeRow {
  std::string name;
  std::size_t n = 0;
  double mc_variance = 0.0;
  double mc_stderr = 0.0;
  double oracle = 0.0;
  double oracle_error = 0.0;
  double z = 0.0;  // (mc - oracle) / stderr
  bool pass = false;
};

/// Sample variance of each probe (zero-mean model) against the oracle.
std::vector<ProbeRow> compare_probes(const std::vector<Probe>& probes,
                                     const std::vector<std::vector<double>>& samples,
                                     const SpectralOracle& oracle, double z_max = 3.0);

// ---------------------------------------------------------------------------
// Constant-theta rate study with martingale, coverage and probe diagnostics.

struct RateRow {
  std::string mode;
  double delta = 0.0;
  double epsilon = 0.0;
  std::size_t replications = 0;
  std::size_t failures = 0;
  double rmse = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double stderr_mean = 0.0;
  std::size_t n_shifts = 0;
  std::size_t n_eps = 0;
};

struct RateFit {
  bool defined = false;
  LinearFit fit;
};

struct RateStudyResult {
  std::string mode;
  std::vector<RateRow> rows;
  RateFit fit;
};

struct MartingaleRow {
  double delta = 0.0;
  std::size_t n = 0;
  double mean_M = 0.0;
  double stderr_M = 0.0;
  double mean_M2 = 0.0;
  double mean_qv = 0.0;
  double ratio = 0.0;
};

struct CoverageRow {
  double delta = 0.0;
  double level = 0.95;
  std::size_t covered = 0;
  std::size_t total = 0;
  double frequency = 0.0;
  double mean_half_width = 0.0;
};

struct ReplicationRecord {
  std::string mode;
  double delta = 0.0;
  std::size_t rep = 0;
  bool ok = false;
  std::string error;
  double theta_hat = 0.0;
  double I = 0.0;
  double M = 0.0;
  double qv_M = 0.0;
  std::optional<ConfidenceInterval> ci;
};

struct ParametricStudyOptions {
  double theta0 = 0.02;
  double sigma = 10.0;
  double T = 1.0;
  std::size_t nt = 250000;
  std::size_t nx = 1024;
  std::vector<double> deltas{0.05, 0.02, 0.01};
  std::size_t replications = 200;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  /// "parametric" (h = 1) and/or "lipschitz" (h = sqrt(eps)).
  std::vector<std::string> modes{"parametric", "lipschitz"};
  EstimatorConfig estimator;  // x0, kernel, weights, margin; eps/h set per row
  std::vector<double> ci_deltas{0.02};
  double ci_level = 0.95;
  bool probes = true;
  double probe_delta = 0.05;
  std::size_t oracle_modes = 4096;
  double max_failure_fraction = 0.1;
};

struct ParametricStudy {
  std::vector<RateStudyResult> rates;
  std::vector<MartingaleRow> martingale;
  std::vector<CoverageRow> coverage;
  std::vector<ProbeRow> probes;
  std::vector<ReplicationRecord> records;
  double seconds = 0.0;
};

ParametricStudy run_parametric_study(const ParametricStudyOptions& opt,
                                     const Progress& progress = {});

/// Least-squares slope of log rmse on log eps over rows with rmse > 0.
RateFit fit_rate(const std::vector<RateRow>& rows);

// ---------------------------------------------------------------------------
// Heterogeneous profile reconstruction.

struct ProfileStudyOptions {
  DiffusivityField theta = DiffusivityField::logistic_profile();
  double sigma = 10.0;
  double T = 1.0;
  std::size_t nt = 250000;
  std::size_t nx = 1024;
  std::vector<double> deltas{0.04, 0.02, 0.01};
  std::size_t replications = 20;
  std::vector<double> x0_list;  // empty: 0.05 i, i = 1..19
  /// Bandwidth as a function of eps; empty: eps^{1/3}.
  std::function<double(double)> bandwidth;
  EstimatorConfig estimator;
  std::uint64_t seed = 2;
  std::size_t threads = 1;
  /// Parametric CI columns for the first replication.
  bool ci = true;
};

struct ProfileRow {
  double delta = 0.0;
  std::size_t rep = 0;
  double x0 = 0.0;
  std::optional<double> theta_hat;
  std::size_t n_shifts = 0;
  std::optional<ConfidenceInterval> ci;
  double theta_true = 0.0;
  std::string error;
};

struct ProfileSummaryRow {
  double delta = 0.0;
  double x0 = 0.0;
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double theta_true = 0.0;
};

struct ProfileStudy {
  std::vector<ProfileRow> rows;
  std::vector<ProfileSummaryRow> summary;
  /// Mean over replications and x0 of |theta_hat - theta(x0)|, per delta.
  std::vector<std::pair<double, double>> mean_abs_error;
  double seconds = 0.0;
};

std::vector<double> default_profile_points();
ProfileStudy run_profile_study(const ProfileStudyOptions& opt, const Progress& progress = {});

// ---------------------------------------------------------------------------
// Noise level from the temporal quadratic variation.

struct NoiseStudyOptions {
  double theta0 = 0.02;
  double sigma = 10.0;
  double T = 1.0;
  std::size_t nt = 25000;
  std::size_t nx = 256;
  double epsilon = 0.01;
  std::size_t runs = 50;
  std::uint64_t seed = 3;
};

struct NoiseStudy {
  std::vector<double> ratios;  // eps_hat / eps per run
  double mean_ratio = 0.0;
  double sd_ratio = 0.0;
  double seconds = 0.0;
};

NoiseStudy run_noise_study(const NoiseStudyOptions& opt);

// ---------------------------------------------------------------------------
// Trotter-Kato approximation checks.

struct TkCheckOptions {
  double p = 2.0;
  // constant theta: error against delta^-2
  double const_theta = 1.0;
  double const_t = 1.0;
  double const_x0 = 0.5;
  std::vector<double> const_deltas{0.12, 0.1, 0.09, 0.08, 0.07};
  // heterogeneous theta normalized to 1 at x0: error against h
  DiffusivityField het_theta = DiffusivityField::logistic_profile();
  double het_x0 = 0.4;
  double het_t = 0.5;
  double het_delta = 1e-5;
  std::vector<double> het_h{0.08, 0.04, 0.02, 0.01};
  double min_r_squared = 0.95;
  double slope_lo = 0.7;
  double slope_hi = 1.3;
};

struct TkCheck {
  std::vector<std::pair<double, double>> constant;  // (delta, error)
  LinearFit constant_fit;  // log error on delta^-2
  bool constant_pass = false;
  std::vector<std::pair<double, double>> heterogeneous;  // (h, error)
  LinearFit heterogeneous_fit;  // log error on log h
  bool heterogeneous_pass = false;
  double seconds = 0.0;
};

TkCheck run_tk_check(const TkCheckOptions& opt);

// ---------------------------------------------------------------------------
// Oracle self-consistency and simulator agreement.

struct OracleRecord {
  std::string quantity;
  Json params;
  double value = 0.0;
  double error_bound = 0.0;
};

struct CheckRecord {
  std::string name;
  bool pass = false;
  Json detail;
};

struct OracleCheckOptions {
  double theta0 = 0.02;
  double sigma = 10.0;
  double T = 1.0;
  std::size_t nt = 25000;
  std::size_t nx = 256;
  std::size_t replications = 200;
  std::uint64_t seed = 4;
  std::size_t threads = 1;
  double noise_scale_hook = 1.0;
  double probe_delta = 0.05;
  std::size_t oracle_modes = 4096;
  double cinf_tolerance = 1e-4;
  bool run_tk = true;
  TkCheckOptions tk;
};

struct OracleCheck {
  std::vector<CheckRecord> checks;
  std::vector<OracleRecord> records;
  std::vector<ProbeRow> probes;
  bool all_pass = false;
  double seconds = 0.0;
};

OracleCheck run_oracle_check(const OracleCheckOptions& opt, const Progress& progress = {});

// ---------------------------------------------------------------------------
// Serialization.

Json to_json(const EstimateReport& r);
Json to_json(const RateStudyResult& r);
Json to_json(const OracleRecord& r);
Json to_json(const TkCheck& r);

/// %.12g, "nan" for missing values; stable across runs.
std::string fmt(double v);
std::string fmt(const std::optional<double>& v);

void write_rate_csv(std::ostream& out, const std::vector<RateStudyResult>& rates);
void write_replications_csv(std::ostream& out, const std::vector<ReplicationRecord>& recs);
void write_profile_csv(std::ostream& out, const std::vector<ProfileRow>& rows, bool with_truth);
void write_profile_summary_csv(std::ostream& out, const std::vector<ProfileSummaryRow>& rows);

}  // namespace heatest::harness
