#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "heatest/diffusivity.hpp"
#include "heatest/grid.hpp"
#include "heatest/kernel.hpp"
#include "heatest/simulator.hpp"

namespace heatest {

/// Minimum grid cells per kernel spatial half-width and time steps per
/// kernel temporal width.
inline constexpr double kMinCellsPerHalfWidth = 8.0;
inline constexpr double kMinStepsPerWidth = 8.0;

/// Number of usable time shifts floor(T / delta^2) - 1.
std::size_t time_shift_count(double T, double delta);

/// Throws ResolutionTooCoarse unless the grid resolves a kernel at scale delta.
void check_resolution(const Kernel& kernel, double delta, const SpaceTimeGrid& grid);

/// Precomputed node and row weights for the statistics X' and X^Delta of one
/// kernel at one scale delta. A site is a spatial placement of the localized
/// kernel; time windows k = 0..N cover the grid rows.
class StatPlan {
 public:
  StatPlan(const Kernel& kernel, double delta, const SpaceTimeGrid& grid);

  const Kernel& kernel() const noexcept { return time_.base(); }
  double delta() const noexcept { return time_.delta(); }
  const SpaceTimeGrid& grid() const noexcept { return grid_; }
  std::size_t n_windows() const noexcept { return n_windows_; }
  std::size_t n_sites() const noexcept { return sites_.size(); }

  /// Site of the kernel centred at x0 + delta x (x in delta units). Sites
  /// with coinciding centres are shared. Throws SupportViolation if the
  /// support leaves (0, 1).
  std::size_t add_site(double x0, double x);

  /// Additionally accumulate the bracket (theta - theta0) Delta K + theta' grad K.
  void set_bracket(const DiffusivityField& theta, double theta0);
  bool has_bracket() const noexcept { return bracket_.has_value(); }

  struct Site {
    double x0 = 0.0;
    double x = 0.0;
    std::size_t begin = 0;  // first interior node index
    std::vector<double> w0;  // space0 at nodes begin..
    std::vector<double> w2;  // space2
    std::vector<double> wb;  // bracket weights (optional)
  };
  const Site& site(std::size_t s) const { return sites_[s]; }

  /// Window index of a row, or -1.
  std::int32_t row_window(std::size_t row) const { return row_window_[row]; }
  double row_t0(std::size_t row) const { return row_t0_[row]; }
  double row_t1(std::size_t row) const { return row_t1_[row]; }

 private:
  void fill_bracket(Site& s) const;

  SpaceTimeGrid grid_;
  LocalizedKernel time_;
  std::size_t n_windows_ = 0;
  std::vector<std::int32_t> row_window_;
  std::vector<double> row_t0_;
  std::vector<double> row_t1_;
  std::vector<Site> sites_;
  struct Bracket {
    DiffusivityField theta;
    double theta0;
  };
  std::optional<Bracket> bracket_;
};

/// X'[k][site] and X^Delta[k][site] (and the bracket when requested).
class StatTable {
 public:
  StatTable() = default;
  StatTable(std::size_t n_windows, std::size_t n_sites, bool bracket)
      : n_windows_(n_windows),
        n_sites_(n_sites),
        prime_(n_windows * n_sites, 0.0),
        delta_(n_windows * n_sites, 0.0),
        bracket_(bracket ? n_windows * n_sites : 0, 0.0) {}

  std::size_t n_windows() const noexcept { return n_windows_; }
  std::size_t n_sites() const noexcept { return n_sites_; }
  bool has_bracket() const noexcept { return !bracket_.empty(); }

  double xprime(std::size_t k, std::size_t s) const { return prime_[k * n_sites_ + s]; }
  double xdelta(std::size_t k, std::size_t s) const { return delta_[k * n_sites_ + s]; }
  double bracket(std::size_t k, std::size_t s) const { return bracket_[k * n_sites_ + s]; }
  double& xprime(std::size_t k, std::size_t s) { return prime_[k * n_sites_ + s]; }
  double& xdelta(std::size_t k, std::size_t s) { return delta_[k * n_sites_ + s]; }
  double& bracket(std::size_t k, std::size_t s) { return bracket_[k * n_sites_ + s]; }

  /// Multiplies every entry by c (used for Y -> cY checks).
  void scale(double c);

 private:
  std::size_t n_windows_ = 0;
  std::size_t n_sites_ = 0;
  std::vector<double> prime_;
  std::vector<double> delta_;
  std::vector<double> bracket_;
};

/// Row-by-row accumulation of a StatPlan for `lanes` interleaved fields
/// y[node * lanes + lane]. Lane l of a batch gives bit-identical results to a
/// single-lane run over the same values.
class StatAccumulator {
 public:
  StatAccumulator(const StatPlan& plan, std::size_t lanes = 1);

  void add_row(std::size_t row, std::span<const double> y);
  StatTable table(std::size_t lane = 0) const;

 private:
  template <std::size_t L>
  void add_row_impl(std::size_t row, const double* y);

  const StatPlan* plan_;
  std::size_t lanes_;
  bool bracket_;
  // [(window * sites + site) * lanes + lane]
  std::vector<double> acc_prime_;
  std::vector<double> acc_delta_;
  std::vector<double> acc_bracket_;
};

/// All statistics of a plan over a stored field.
StatTable compute_statistics(const StatPlan& plan, const SpaceTimeField& field);

/// (X', X^Delta) of one localized kernel against the observation.
std::pair<double, double> riemann_pair(const Observation& obs, const LocalizedKernel& lk);

/// Linear functional sum_i a_i sum_j y_ij w_j dt dx of a space-time field.
class SeparableFunctional {
 public:
  SeparableFunctional(const SpaceTimeGrid& grid, std::vector<double> time_weights,
                      std::vector<double> space_weights);

  double apply(const SpaceTimeField& field) const;
  const std::vector<double>& time_weights() const noexcept { return a_; }
  const std::vector<double>& space_weights() const noexcept { return w_; }
  const SpaceTimeGrid& grid() const noexcept { return grid_; }

 private:
  SpaceTimeGrid grid_;
  std::vector<double> a_;
  std::vector<double> w_;
};

/// Streaming evaluation of several functionals for a lane batch.
class FunctionalAccumulator {
 public:
  FunctionalAccumulator(std::vector<SeparableFunctional> functionals, std::size_t lanes);
  void add_row(std::size_t row, std::span<const double> y);
  double value(std::size_t functional, std::size_t lane) const;
  std::size_t size() const noexcept { return functionals_.size(); }

 private:
  std::vector<SeparableFunctional> functionals_;
  std::size_t lanes_;
  std::vector<double> acc_;  // [functional * lanes + lane]
};

}  // namespace heatest
