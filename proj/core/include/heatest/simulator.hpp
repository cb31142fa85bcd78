#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "heatest/diffusivity.hpp"
#include "heatest/grid.hpp"
#include "heatest/rng.hpp"
#include "heatest/tridiag.hpp"

namespace heatest {

/// Default cap on stored entries (rows x interior nodes) for simulate().
inline constexpr std::size_t kDefaultStorageBudget = 200'000'000;

/// Flux-form discretization of d/dx theta(x) d/dx with zero Dirichlet ghosts:
///   (AX)_j = [theta_{j+1/2}(X_{j+1} - X_j) - theta_{j-1/2}(X_j - X_{j-1})] / dx^2
/// with theta evaluated at the half-grid midpoints. Throws GridTooCoarse for nx < 3.
Tridiagonal discretize_diffusion(const DiffusivityField& theta, const SpaceTimeGrid& grid);

/// Model parameters for the implicit Euler-Maruyama scheme.
struct SimulationSpec {
  SpaceTimeGrid grid;
  DiffusivityField theta;
  double sigma = 0.0;
  /// Multiplies the dynamic noise increment. Test hook only; 1 in production.
  double noise_scale_hook = 1.0;
};

class Trajectory {
 public:
  Trajectory(SimulationSpec spec, SpaceTimeField values, std::vector<double> initial,
             SeedSpec seed)
      : spec_(std::move(spec)),
        values_(std::move(values)),
        initial_(std::move(initial)),
        seed_(seed) {}

  const SpaceTimeGrid& grid() const noexcept { return spec_.grid; }
  const SimulationSpec& spec() const noexcept { return spec_; }
  double sigma() const noexcept { return spec_.sigma; }
  const DiffusivityField& theta() const noexcept { return spec_.theta; }
  const SpaceTimeField& values() const noexcept { return values_; }
  std::span<const double> initial() const noexcept { return initial_; }
  const SeedSpec& seed() const noexcept { return seed_; }

 private:
  SimulationSpec spec_;
  SpaceTimeField values_;
  std::vector<double> initial_;
  SeedSpec seed_;
};

/// Noisy field Y = X + eta * zeta with eta = epsilon / sqrt(dt dx).
class Observation {
 public:
  Observation(SpaceTimeGrid grid, SpaceTimeField values, double epsilon, SeedSpec seed,
              std::shared_ptr<const Trajectory> trajectory = nullptr);

  const SpaceTimeGrid& grid() const noexcept { return grid_; }
  const SpaceTimeField& values() const noexcept { return values_; }
  double epsilon() const noexcept { return epsilon_; }
  double eta() const noexcept { return eta_; }
  const SeedSpec& seed() const noexcept { return seed_; }
  /// Clean trajectory, present only in diagnostic mode.
  const std::shared_ptr<const Trajectory>& trajectory() const noexcept { return trajectory_; }

  /// c * Y with epsilon scaled accordingly; drops the trajectory reference.
  Observation scaled(double c) const;

 private:
  SpaceTimeGrid grid_;
  SpaceTimeField values_;
  double epsilon_;
  double eta_;
  SeedSpec seed_;
  std::shared_ptr<const Trajectory> trajectory_;
};

double static_noise_sd(double epsilon, const SpaceTimeGrid& grid);

/// Solves (I - dt A) X^{n+1} = X^n + sigma sqrt(dt/dx) xi^n with the Thomas
/// algorithm. Row 0 is the initial condition. Throws InvalidInput if the
/// trajectory would exceed `storage_budget` entries; use simulate_stream then.
Trajectory simulate(const SimulationSpec& spec, std::span<const double> initial,
                    const SeedSpec& seed,
                    std::size_t storage_budget = kDefaultStorageBudget);

/// Y_ij = X_ij + eta zeta_ij. With keep_reference the observation retains
/// the clean trajectory for diagnostics.
Observation add_static_noise(std::shared_ptr<const Trajectory> trajectory, double epsilon,
                             const SeedSpec& seed, bool keep_reference = true);

// ---------------------------------------------------------------------------
// Streaming: several trajectories advanced together, rows handed to sinks.

inline constexpr std::size_t kStreamLanes = 8;

/// One time row for a batch of trajectories, interleaved [node * lanes + lane].
struct LaneRow {
  std::size_t row = 0;
  double time = 0.0;
  std::size_t lanes = 0;
  std::size_t active_lanes = 0;
  std::span<const double> signal;
  /// Standard normal static-noise draws, same layout; empty when not requested.
  std::span<const double> static_noise;
};

class RowSink {
 public:
  virtual ~RowSink() = default;
  virtual void consume(const LaneRow& row) = 0;
};

struct StreamBatch {
  std::uint64_t master_seed = 0;
  /// Trajectory indices, at most kStreamLanes. Lane l uses
  /// SeedSpec{master, trajectories[l], Dynamic/Static}.
  std::vector<std::uint64_t> trajectories;
  bool static_noise = false;
};

/// Advances the batch with zero initial condition (or `initial` for every
/// lane), calling each sink on every row 0..nt. Lane l reproduces
/// simulate(spec, initial, {master, trajectories[l], Dynamic}) bit for bit.
void simulate_stream(const SimulationSpec& spec, std::span<const double> initial,
                     const StreamBatch& batch, std::span<RowSink* const> sinks);

}  // namespace heatest
