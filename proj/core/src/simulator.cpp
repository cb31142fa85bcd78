#include "heatest/simulator.hpp"

#include <cmath>
#include <string>

#include "heatest/error.hpp"

namespace heatest {

Tridiagonal discretize_diffusion(const DiffusivityField& theta, const SpaceTimeGrid& grid) {
  if (grid.nx() < 3) {
    throw GridTooCoarse("discretize_diffusion: need nx >= 3, got " + std::to_string(grid.nx()));
  }
  const std::size_t n = grid.n_interior();
  const double dx = grid.dx();
  const double inv_dx2 = 1.0 / (dx * dx);
  // theta at the nx half-grid points (j + 1/2) dx, j = 0..nx-1
  std::vector<double> half(grid.nx());
  for (std::size_t j = 0; j < half.size(); ++j) {
    half[j] = theta((static_cast<double>(j) + 0.5) * dx);
  }
  Tridiagonal a;
  a.lower.assign(n, 0.0);
  a.diag.assign(n, 0.0);
  a.upper.assign(n, 0.0);
  // storage index j is node j + 1; its left face is half[j], right face half[j + 1]
  for (std::size_t j = 0; j < n; ++j) {
    const double left = half[j] * inv_dx2;
    const double right = half[j + 1] * inv_dx2;
    a.diag[j] = -(left + right);
    if (j > 0) a.lower[j] = left;
    if (j + 1 < n) a.upper[j] = right;
  }
  return a;
}

double static_noise_sd(double epsilon, const SpaceTimeGrid& grid) {
  return epsilon / std::sqrt(grid.dt() * grid.dx());
}

Observation::Observation(SpaceTimeGrid grid, SpaceTimeField values, double epsilon,
                         SeedSpec seed, std::shared_ptr<const Trajectory> trajectory)
    : grid_(grid),
      values_(std::move(values)),
      epsilon_(epsilon),
      eta_(static_noise_sd(epsilon, grid)),
      seed_(seed),
      trajectory_(std::move(trajectory)) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidInput("observation: epsilon must be finite and >= 0");
  }
  if (values_.rows() != grid_.n_rows() || values_.cols() != grid_.n_interior()) {
    throw InvalidInput("observation: field shape does not match grid");
  }
}

Observation Observation::scaled(double c) const {
  SpaceTimeField y(values_.rows(), values_.cols());
  auto src = values_.data();
  auto dst = y.data();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = c * src[k];
  return Observation(grid_, std::move(y), std::abs(c) * epsilon_, seed_);
}

namespace {

void validate(const SimulationSpec& spec) {
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) {
    throw InvalidInput("simulate: sigma must be finite and >= 0");
  }
  if (!(spec.theta.min() > 0.0)) throw InvalidInput("simulate: theta_min must be positive");
}

/// Shared stepping loop for L interleaved trajectories. `emit` receives
/// (row, signal, static_noise) after each row is ready.
template <std::size_t L, class Emit>
void run_engine(const SimulationSpec& spec, std::span<const double> initial,
                std::span<const SeedSpec> dynamic_seeds,
                std::span<const SeedSpec> static_seeds, Emit&& emit) {
  validate(spec);
  const SpaceTimeGrid& grid = spec.grid;
  const std::size_t n = grid.n_interior();
  const std::size_t active = dynamic_seeds.size();
  if (active == 0 || active > L) throw InvalidInput("simulate: bad lane count");
  if (!initial.empty() && initial.size() != n) {
    throw InvalidInput("simulate: initial condition length must be nx - 1");
  }
  for (double v : initial) {
    if (!std::isfinite(v)) throw InvalidInput("simulate: non-finite initial condition");
  }

  const Tridiagonal a = discretize_diffusion(spec.theta, grid);
  const ThomasSolver solver(a.shifted_identity(-grid.dt()));
  const double noise_scale =
      spec.sigma * std::sqrt(grid.dt() / grid.dx()) * spec.noise_scale_hook;

  std::vector<double> x(n * L, 0.0);
  std::vector<double> rhs(n * L, 0.0);
  std::vector<double> zeta(static_seeds.empty() ? 0 : n * L, 0.0);
  std::vector<double> draws(n);

  if (!initial.empty()) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t l = 0; l < active; ++l) x[j * L + l] = initial[j];
    }
  }

  auto fill_static = [&](std::size_t row) {
    if (static_seeds.empty()) return;
    for (std::size_t l = 0; l < active; ++l) {
      fill_normals(static_seeds[l], row, draws);
      for (std::size_t j = 0; j < n; ++j) zeta[j * L + l] = draws[j];
    }
  };

  fill_static(0);
  emit(std::size_t{0}, std::span<const double>(x), std::span<const double>(zeta));

  for (std::size_t step = 0; step < grid.nt(); ++step) {
    for (std::size_t l = 0; l < active; ++l) {
      if (noise_scale != 0.0) {
        fill_normals(dynamic_seeds[l], step, draws);
        for (std::size_t j = 0; j < n; ++j) {
          rhs[j * L + l] = x[j * L + l] + noise_scale * draws[j];
        }
      } else {
        for (std::size_t j = 0; j < n; ++j) rhs[j * L + l] = x[j * L + l];
      }
    }
    solver.solve_lanes<L>(rhs, x);
    fill_static(step + 1);
    emit(step + 1, std::span<const double>(x), std::span<const double>(zeta));
  }
}

}  // namespace

Trajectory simulate(const SimulationSpec& spec, std::span<const double> initial,
                    const SeedSpec& seed, std::size_t storage_budget) {
  const SpaceTimeGrid& grid = spec.grid;
  const std::size_t entries = grid.n_rows() * grid.n_interior();
  if (entries > storage_budget) {
    throw InvalidInput("simulate: " + std::to_string(entries) +
                       " entries exceed the storage budget; use simulate_stream");
  }
  SpaceTimeField values(grid.n_rows(), grid.n_interior());
  const SeedSpec dyn = seed.with_purpose(NoisePurpose::Dynamic);
  run_engine<1>(spec, initial, std::span<const SeedSpec>(&dyn, 1), {},
                [&](std::size_t row, std::span<const double> x, std::span<const double>) {
                  auto dst = values.row(row);
                  std::copy(x.begin(), x.end(), dst.begin());
                });
  std::vector<double> init(initial.begin(), initial.end());
  if (init.empty()) init.assign(grid.n_interior(), 0.0);
  return Trajectory(spec, std::move(values), std::move(init), dyn);
}

Observation add_static_noise(std::shared_ptr<const Trajectory> trajectory, double epsilon,
                             const SeedSpec& seed, bool keep_reference) {
  if (!trajectory) throw InvalidInput("add_static_noise: null trajectory");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidInput("add_static_noise: epsilon must be finite and >= 0");
  }
  const SpaceTimeGrid& grid = trajectory->grid();
  const double eta = static_noise_sd(epsilon, grid);
  const SeedSpec st = seed.with_purpose(NoisePurpose::Static);
  const auto& x = trajectory->values();
  SpaceTimeField y(x.rows(), x.cols());
  std::vector<double> draws(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto src = x.row(i);
    auto dst = y.row(i);
    if (epsilon == 0.0) {
      std::copy(src.begin(), src.end(), dst.begin());
      continue;
    }
    fill_normals(st, i, draws);
    for (std::size_t j = 0; j < draws.size(); ++j) dst[j] = src[j] + eta * draws[j];
  }
  return Observation(grid, std::move(y), epsilon, st,
                     keep_reference ? std::move(trajectory) : nullptr);
}

void simulate_stream(const SimulationSpec& spec, std::span<const double> initial,
                     const StreamBatch& batch, std::span<RowSink* const> sinks) {
  const std::size_t active = batch.trajectories.size();
  if (active == 0 || active > kStreamLanes) {
    throw InvalidInput("simulate_stream: batch must hold 1.." +
                       std::to_string(kStreamLanes) + " trajectories");
  }
  std::vector<SeedSpec> dyn(active);
  std::vector<SeedSpec> st;
  for (std::size_t l = 0; l < active; ++l) {
    dyn[l] = SeedSpec{batch.master_seed, batch.trajectories[l], NoisePurpose::Dynamic};
    if (batch.static_noise) {
      st.push_back(SeedSpec{batch.master_seed, batch.trajectories[l], NoisePurpose::Static});
    }
  }
  run_engine<kStreamLanes>(
      spec, initial, dyn, st,
      [&](std::size_t row, std::span<const double> x, std::span<const double> z) {
        LaneRow lr;
        lr.row = row;
        lr.time = spec.grid.time(row);
        lr.lanes = kStreamLanes;
        lr.active_lanes = active;
        lr.signal = x;
        lr.static_noise = z;
        for (RowSink* s : sinks) s->consume(lr);
      });
}

}  // namespace heatest
