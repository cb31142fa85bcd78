#include <benchmark/benchmark.h>

#include <vector>

#include "heatest/rng.hpp"
#include "heatest/simulator.hpp"
#include "heatest/statistics.hpp"
#include "heatest/tridiag.hpp"

using namespace heatest;

static void BM_FillNormals(benchmark::State& state) {
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  std::uint64_t step = 0;
  for (auto _ : state) {
    fill_normals(SeedSpec{1, 0, NoisePurpose::Dynamic}, step++, v);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FillNormals)->Arg(1023)->Arg(8184);

template <std::size_t L>
static void BM_ThomasLanes(benchmark::State& state) {
  const SpaceTimeGrid g(1.0, 250000, static_cast<std::size_t>(state.range(0)));
  const Tridiagonal m = discretize_diffusion(DiffusivityField::logistic_profile(), g).shifted_identity(-g.dt());
  const ThomasSolver solver(m);
  std::vector<double> rhs(m.size() * L, 1.0);
  std::vector<double> x(rhs.size());
  for (auto _ : state) {
    solver.solve_lanes<L>(rhs, x);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rhs.size()));
}
BENCHMARK(BM_ThomasLanes<1>)->Arg(1024);
BENCHMARK(BM_ThomasLanes<8>)->Arg(1024);

// one full-grid time row for a lane batch, with static noise draws
static void BM_StreamRows(benchmark::State& state) {
  const SpaceTimeGrid g(0.01, 100, 1024);
  const SimulationSpec spec{g, DiffusivityField::constant(0.02), 10.0, 1.0};
  struct Null : RowSink {
    void consume(const LaneRow& r) override { benchmark::DoNotOptimize(r.signal.data()); }
  } sink;
  RowSink* sinks[] = {&sink};
  StreamBatch batch{1, {0, 1, 2, 3, 4, 5, 6, 7}, true};
  for (auto _ : state) simulate_stream(spec, {}, batch, sinks);
  state.SetItemsProcessed(state.iterations() * 8 * static_cast<std::int64_t>(g.n_rows()));
}
BENCHMARK(BM_StreamRows)->Unit(benchmark::kMillisecond);

static void BM_StatisticsRow(benchmark::State& state) {
  const SpaceTimeGrid g(1.0, 250000, 1024);
  const double delta = 0.01;
  StatPlan plan(bump_kernel(), delta, g);
  for (int k = -24; k <= 24; ++k) plan.add_site(0.5, 2.0 * k);
  const std::size_t lanes = static_cast<std::size_t>(state.range(0));
  StatAccumulator acc(plan, lanes);
  std::vector<double> y(g.n_interior() * lanes);
  fill_normals(SeedSpec{2, 0, NoisePurpose::Auxiliary}, 0, y);
  std::size_t row = 1;
  for (auto _ : state) {
    acc.add_row(row, y);
    row = row % 24000 + 1;
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(lanes));
}
BENCHMARK(BM_StatisticsRow)->Arg(1)->Arg(8);

BENCHMARK_MAIN();
