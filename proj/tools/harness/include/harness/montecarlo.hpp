#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "heatest/simulator.hpp"
#include "heatest/statistics.hpp"

namespace heatest::harness {

/// Statistics of one plan, accumulated on Y = X + eta zeta or on clean X.
struct StatRequest {
  const StatPlan* plan = nullptr;
  double eta = 0.0;
  bool clean = false;
};

struct MonteCarloJob {
  SimulationSpec spec;
  std::uint64_t seed = 0;
  std::uint64_t first_trajectory = 0;
  std::size_t replications = 0;
  std::size_t threads = 1;
  std::vector<StatRequest> stats{};
  /// Evaluated on clean X.
  std::vector<SeparableFunctional> functionals{};
};

struct Replication {
  std::uint64_t trajectory = 0;
  std::size_t index = 0;  // 0..replications-1
  std::vector<StatTable> tables;  // per StatRequest
  std::vector<double> functionals;
};

/// Streams the job in lane batches over `threads` workers. `consume` is
/// called once per replication, serialized by the engine, in no particular
/// order; replication i uses trajectory first_trajectory + i, so results do
/// not depend on the thread count. `progress` (optional) gets batches done.
void run_monte_carlo(const MonteCarloJob& job, const std::function<void(Replication&&)>& consume,
                     const std::function<void(std::size_t, std::size_t)>& progress = {});

}  // namespace heatest::harness
