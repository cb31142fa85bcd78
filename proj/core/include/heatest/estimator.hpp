#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "heatest/diffusivity.hpp"
#include "heatest/kernel.hpp"
#include "heatest/simulator.hpp"
#include "heatest/statistics.hpp"

namespace heatest {

enum class WeightScheme { UniformWindow, LocallyLinear };
enum class DeltaVariant { SqrtEps, SqrtEpsOverSigma };

std::string to_string(WeightScheme s);
std::string to_string(DeltaVariant v);
WeightScheme parse_weight_scheme(const std::string& s);
DeltaVariant parse_delta_variant(const std::string& s);

struct EstimatorConfig {
  double x0 = 0.5;
  double eps = 4e-4;
  /// Bandwidth in space units; empty selects eps^{3 / (4 gamma + 2)}.
  std::optional<double> h;
  WeightScheme weights = WeightScheme::UniformWindow;
  double gamma = 1.0;
  double margin_factor = 0.1;
  DeltaVariant delta_variant = DeltaVariant::SqrtEps;
  /// Dynamic noise level, used for sigma_K^2 and the delta variant.
  double sigma = 1.0;
  /// Relative floor for the information I.
  double info_floor = 1e-12;
  Kernel kernel = bump_kernel();

  double delta() const;
  double bandwidth() const;
  /// eps / delta^2, the static-noise factor in sigma_K^2.
  double noise_factor() const;
  /// Throws InvalidInput / BandwidthTooSmall on inconsistent settings.
  void validate() const;
};

struct ShiftGrid {
  std::vector<int> shifts;  // even integers, delta units
  double delta = 0.0;
  double x0 = 0.0;
  std::size_t n_eps = 0;

  std::size_t n_eff() const noexcept { return n_eps * shifts.size(); }
};

ShiftGrid build_shift_grid(const EstimatorConfig& config, const SpaceTimeGrid& grid);

struct WeightVector {
  std::vector<int> shifts;
  std::vector<double> weights;

  double sum() const;
  double first_moment() const;
  bool uniform() const;
};

/// Window |x| < h / (2 delta) in shift units.
WeightVector build_weights(WeightScheme scheme, const ShiftGrid& grid, double h, double eps);
WeightVector build_weights_delta(WeightScheme scheme, const ShiftGrid& grid, double h,
                                 double delta);

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
};

struct EstimateReport {
  double theta_hat = 0.0;
  double numerator = 0.0;
  double I = 0.0;
  double qv_M = 0.0;
  double sigma_K_sq = 0.0;
  std::optional<double> B;
  std::optional<double> M;
  std::optional<ConfidenceInterval> ci;
  EstimatorConfig config;
  double delta = 0.0;
  double h = 0.0;
  std::size_t n_eps = 0;
  std::size_t n_shifts = 0;
  double T = 0.0;
  WeightVector weights;
};

/// Shift grid, weights and statistic sites of one configuration inside a
/// shared StatPlan, so several estimates can reuse one pass over the data.
struct EstimatorSetup {
  EstimatorConfig config;
  ShiftGrid shifts;
  WeightVector weights;
  std::vector<std::size_t> sites;  // per weight entry
  double h = 0.0;
  double sigma_K_sq_at(double theta0) const;
};

EstimatorSetup prepare_estimate(const EstimatorConfig& config, StatPlan& plan);
EstimateReport evaluate_estimate(const EstimatorSetup& setup, const StatTable& table,
                                 const SpaceTimeGrid& grid);

EstimateReport estimate(const Observation& obs, const EstimatorConfig& config);

struct Decomposition {
  double theta_hat = 0.0;
  double I = 0.0;
  double B = 0.0;
  double M = 0.0;
  double qv_M = 0.0;
};

/// Needs obs.trajectory(); throws DiagnosticsUnavailable otherwise.
Decomposition error_decomposition(const Observation& obs, const EstimatorConfig& config,
                                  const DiffusivityField& theta_true);
/// Same from precomputed tables: `obs_table` on Y, `clean_table` on X with
/// the bracket enabled at theta(x0).
Decomposition decompose(const EstimatorSetup& setup, const StatTable& obs_table,
                        const StatTable& clean_table, double theta0);

/// Limiting constants of the parametric CLT for a kernel.
struct CltConstants {
  double c_inf_dd = 0.0;      // C_inf(Delta K, Delta K)
  double c_inf_dd_lag = 0.0;  // C_inf(Delta K, Delta K_{-1,0})
  double lap_norm_sq = 0.0;   // ||Delta K||^2
};

/// Parametric CI; needs uniform weights. Throws CLTInapplicable if
/// c_inf_dd_lag <= 0.
ConfidenceInterval confidence_interval(const EstimateReport& report, double level,
                                       const CltConstants& constants);
/// Same with the constants evaluated at theta_hat.
ConfidenceInterval confidence_interval(const EstimateReport& report, double level);

/// Static noise level from the temporal quadratic variation of <Y, probe>.
double estimate_noise_level(const Observation& obs, const std::function<double(double)>& probe);

struct ProfilePoint {
  double x0 = 0.0;
  std::optional<EstimateReport> report;
  std::string error;
};

std::vector<ProfilePoint> estimate_profile(const Observation& obs,
                                           const std::vector<double>& x0_list,
                                           const EstimatorConfig& config_template);

}  // namespace heatest
