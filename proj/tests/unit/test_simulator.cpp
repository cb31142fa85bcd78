#include <doctest.h>

#include <cmath>
#include <cstring>
#include <memory>
#include <numbers>
#include <vector>

#include "heatest/error.hpp"
#include "heatest/oracle.hpp"
#include "heatest/simulator.hpp"
#include "support.hpp"

using namespace heatest;

namespace {

std::vector<double> sine(const SpaceTimeGrid& g, int m = 1) {
  std::vector<double> v(g.n_interior());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::sin(m * std::numbers::pi * g.node(j));
  return v;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct Collect : RowSink {
  std::vector<SpaceTimeField> x;
  std::vector<SpaceTimeField> z;
  Collect(std::size_t lanes, const SpaceTimeGrid& g) {
    for (std::size_t l = 0; l < lanes; ++l) {
      x.emplace_back(g.n_rows(), g.n_interior());
      z.emplace_back(g.n_rows(), g.n_interior());
    }
  }
  void consume(const LaneRow& r) override {
    for (std::size_t l = 0; l < r.active_lanes; ++l) {
      for (std::size_t j = 0; j < x[l].cols(); ++j) {
        x[l](r.row, j) = r.signal[j * r.lanes + l];
        if (!r.static_noise.empty()) z[l](r.row, j) = r.static_noise[j * r.lanes + l];
      }
    }
  }
};

}  // namespace

TEST_CASE("discrete operator on the first sine mode") {
  const SpaceTimeGrid g(1.0, 10, 128);
  const Tridiagonal A = discretize_diffusion(DiffusivityField::constant(1.0), g);
  const auto x = sine(g);
  std::vector<double> ax(x.size());
  A.apply(x, ax);
  // exact discrete eigenvalue of the three-point Laplacian
  const double s = std::sin(std::numbers::pi * g.dx() / 2);
  const double mu = 4.0 * s * s / (g.dx() * g.dx());
  double worst_discrete = 0.0;
  double worst_continuum = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    worst_discrete = std::max(worst_discrete, std::abs(ax[j] + mu * x[j]) / std::abs(mu * x[j]));
    const double pi2 = std::numbers::pi * std::numbers::pi;
    worst_continuum = std::max(worst_continuum, std::abs(ax[j] + pi2 * x[j]) / std::abs(pi2 * x[j]));
  }
  // rounding: 4 / dx^2 against mu is a cancellation of about 6600
  CHECK(worst_discrete < 1e-10);
  // O(dx^2): (pi dx)^2 / 12 to leading order
  const double lead = std::pow(std::numbers::pi * g.dx(), 2) / 12;
  CHECK(worst_continuum < 1.01 * lead);
  CHECK(worst_continuum > 0.9 * lead);
}

TEST_CASE("discrete operator structure") {
  const SpaceTimeGrid g(1.0, 10, 200);
  const Tridiagonal A1 = discretize_diffusion(DiffusivityField::constant(1.0), g);
  const Tridiagonal Ac = discretize_diffusion(DiffusivityField::constant(0.37), g);
  for (std::size_t j = 0; j < A1.size(); ++j) {
    CHECK(Ac.diag[j] == doctest::Approx(0.37 * A1.diag[j]).epsilon(1e-15));
    if (j + 1 < A1.size()) CHECK(Ac.upper[j] == doctest::Approx(0.37 * A1.upper[j]).epsilon(1e-15));
  }
  const Tridiagonal Ah = discretize_diffusion(DiffusivityField::logistic_profile(), g);
  double asym = 0.0;
  for (std::size_t j = 0; j + 1 < Ah.size(); ++j) asym = std::max(asym, std::abs(Ah.upper[j] - Ah.lower[j + 1]));
  CHECK(asym == 0.0);
  // flux form with midpoint theta
  const auto th = DiffusivityField::logistic_profile();
  const double dx2 = g.dx() * g.dx();
  for (std::size_t j : {0u, 50u, 101u, 198u}) {
    const double x = g.node(j);
    CHECK(Ah.diag[j] == doctest::Approx(-(th(x - g.dx() / 2) + th(x + g.dx() / 2)) / dx2).epsilon(1e-14));
  }
  const Tridiagonal M = Ah.shifted_identity(-g.dt());
  CHECK(M.diagonal_dominance_margin() >= 1.0 - 1e-12);
  CHECK_THROWS_AS(discretize_diffusion(DiffusivityField::constant(1.0), SpaceTimeGrid(1.0, 1, 2)),
                  GridTooCoarse);
}

TEST_CASE("thomas solver inverts the operator") {
  const SpaceTimeGrid g(1.0, 100, 64);
  const Tridiagonal M = discretize_diffusion(DiffusivityField::logistic_profile(), g).shifted_identity(-0.01);
  const ThomasSolver solver(M);
  std::vector<double> b(M.size());
  for (std::size_t j = 0; j < b.size(); ++j) b[j] = std::cos(0.3 * j) + 0.1 * j;
  std::vector<double> x(b.size());
  solver.solve(b, x);
  std::vector<double> r(b.size());
  M.apply(x, r);
  for (std::size_t j = 0; j < b.size(); ++j) CHECK(r[j] == doctest::Approx(b[j]).epsilon(1e-12));

  // lanes: identical bits to separate solves
  constexpr std::size_t L = 4;
  std::vector<double> bl(b.size() * L);
  for (std::size_t j = 0; j < b.size(); ++j)
    for (std::size_t l = 0; l < L; ++l) bl[j * L + l] = b[j] * (l + 1);
  std::vector<double> xl(bl.size());
  solver.solve_lanes<L>(bl, xl);
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<double> bs(b.size());
    std::vector<double> xs(b.size());
    for (std::size_t j = 0; j < b.size(); ++j) bs[j] = bl[j * L + l];
    solver.solve(bs, xs);
    for (std::size_t j = 0; j < b.size(); ++j) CHECK(xs[j] == xl[j * L + l]);
  }
}

TEST_CASE("deterministic heat flow") {
  const double c = 1.0;
  const SpaceTimeGrid g(0.1, 1000, 64);
  const SimulationSpec spec{g, DiffusivityField::constant(c), 0.0, 1.0};
  const auto x0 = sine(g);
  const Trajectory tr = simulate(spec, x0, SeedSpec{1, 0, NoisePurpose::Dynamic});
  CHECK(std::memcmp(tr.values().row(0).data(), x0.data(), x0.size() * 8) == 0);

  const double s = std::sin(std::numbers::pi * g.dx() / 2);
  const double mu = c * 4.0 * s * s / (g.dx() * g.dx());
  const double discrete = std::pow(1.0 + g.dt() * mu, -static_cast<double>(g.nt()));
  const double exact = std::exp(-c * std::numbers::pi * std::numbers::pi * g.T());
  double err_discrete = 0.0;
  double err_exact = 0.0;
  for (std::size_t j = 0; j < x0.size(); ++j) {
    const double v = tr.values()(g.nt(), j);
    err_discrete = std::max(err_discrete, std::abs(v - discrete * x0[j]) / (discrete * x0[j]));
    err_exact = std::max(err_exact, std::abs(v - exact * x0[j]) / (exact * x0[j]));
  }
  CHECK(err_discrete < 1e-10);
  // measured C = 1.9 on this grid, frozen with headroom
  CHECK(err_exact <= 2.5 * (g.dt() + g.dx() * g.dx()));

  // contraction of the implicit step
  for (std::size_t i = 1; i < g.n_rows(); i += 50) {
    double a = 0.0, b = 0.0;
    for (double v : tr.values().row(i)) a += v * v;
    for (double v : tr.values().row(i - 1)) b += v * v;
    CHECK(a <= b);
  }

  // constants are not preserved under Dirichlet conditions
  std::vector<double> one(g.n_interior(), 1.0);
  const Trajectory tc = simulate(spec, one, SeedSpec{1, 0, NoisePurpose::Dynamic});
  CHECK(max_abs(tc.values().row(g.nt())) < 0.9);
  CHECK(tc.values()(g.nt(), 0) < 0.5);
}

TEST_CASE("zero dynamics and noise linearity") {
  const SpaceTimeGrid g(1.0, 200, 32);
  const SimulationSpec quiet{g, DiffusivityField::constant(0.02), 0.0, 1.0};
  const Trajectory z = simulate(quiet, {}, SeedSpec{3, 0, NoisePurpose::Dynamic});
  CHECK(max_abs(z.values().data()) == 0.0);

  const SimulationSpec s1{g, DiffusivityField::logistic_profile(), 1.0, 1.0};
  const SimulationSpec s3{g, DiffusivityField::logistic_profile(), 3.0, 1.0};
  const Trajectory a = simulate(s1, {}, SeedSpec{3, 0, NoisePurpose::Dynamic});
  const Trajectory b = simulate(s3, {}, SeedSpec{3, 0, NoisePurpose::Dynamic});
  double worst = 0.0;
  for (std::size_t k = 0; k < a.values().data().size(); ++k) {
    const double av = a.values().data()[k];
    if (av != 0.0) worst = std::max(worst, std::abs(b.values().data()[k] - 3.0 * av) / std::abs(3.0 * av));
  }
  CHECK(worst < 1e-11);  // rounding accumulated over 200 solves
  CHECK_THROWS_AS(simulate(SimulationSpec{g, DiffusivityField::constant(1.0), -1.0, 1.0}, {},
                           SeedSpec{}),
                  InvalidInput);
  CHECK_THROWS_AS(simulate(s1, {}, SeedSpec{}, 100), InvalidInput);
}

TEST_CASE("static noise calibration") {
  const SpaceTimeGrid full(1.0, 1000000, 1000);
  CHECK(static_noise_sd(0.16, full) == doctest::Approx(5059.6442562694).epsilon(1e-12));

  const SpaceTimeGrid g(1.0, 400, 128);
  const SimulationSpec spec{g, DiffusivityField::constant(0.02), 10.0, 1.0};
  auto tr = std::make_shared<const Trajectory>(simulate(spec, {}, SeedSpec{8, 0, NoisePurpose::Dynamic}));
  const Observation clean = add_static_noise(tr, 0.0, SeedSpec{8, 0, NoisePurpose::Static});
  CHECK(std::memcmp(clean.values().data().data(), tr->values().data().data(),
                    tr->values().data().size() * 8) == 0);
  CHECK(clean.eta() == 0.0);

  const double eps = 0.16;
  const Observation obs = add_static_noise(tr, eps, SeedSpec{8, 0, NoisePurpose::Static});
  CHECK(obs.eta() == eps / std::sqrt(g.dt() * g.dx()));
  CHECK(obs.trajectory() == tr);
  double ss = 0.0;
  const auto y = obs.values().data();
  const auto x = tr->values().data();
  for (std::size_t k = 0; k < y.size(); ++k) ss += (y[k] - x[k]) * (y[k] - x[k]);
  const double n = static_cast<double>(y.size());
  const double var = ss / n;
  CHECK(std::abs(var / (obs.eta() * obs.eta()) - 1.0) < 4.0 / std::sqrt(n));

  const Observation half = obs.scaled(0.5);
  CHECK(half.epsilon() == 0.5 * eps);
  CHECK(half.values()(3, 4) == 0.5 * obs.values()(3, 4));
  CHECK_FALSE(half.trajectory());
  CHECK_THROWS_AS(add_static_noise(tr, -1.0, SeedSpec{}), InvalidInput);
}

TEST_CASE("streamed lanes reproduce stored trajectories") {
  const SpaceTimeGrid g(0.5, 300, 48);
  const SimulationSpec spec{g, DiffusivityField::logistic_profile(), 10.0, 1.0};
  Collect sink(3, g);
  RowSink* sinks[] = {&sink};
  simulate_stream(spec, {}, StreamBatch{77, {4, 9, 2}, true}, sinks);
  const std::uint64_t ids[] = {4, 9, 2};
  for (std::size_t l = 0; l < 3; ++l) {
    const Trajectory t = simulate(spec, {}, SeedSpec{77, ids[l], NoisePurpose::Dynamic});
    CHECK(std::memcmp(t.values().data().data(), sink.x[l].data().data(), t.values().data().size() * 8) == 0);
    std::vector<double> z(g.n_interior());
    fill_normals(SeedSpec{77, ids[l], NoisePurpose::Static}, 5, z);
    for (std::size_t j = 0; j < z.size(); ++j) CHECK(z[j] == sink.z[l](5, j));
    // Y built from the streamed draws matches add_static_noise
    auto tp = std::make_shared<const Trajectory>(t);
    const Observation obs = add_static_noise(tp, 0.01, SeedSpec{77, ids[l], NoisePurpose::Static});
    const double eta = static_noise_sd(0.01, g);
    for (std::size_t i : {0u, 1u, 150u, 300u}) {
      for (std::size_t j = 0; j < g.n_interior(); j += 7) {
        CHECK(obs.values()(i, j) == sink.x[l](i, j) + eta * sink.z[l](i, j));
      }
    }
  }
}

TEST_CASE("pointwise variance matches the spectral oracle") {
  const double theta = 0.02, sigma = 10.0;
  const SpaceTimeGrid g(1.0, 4000, 128);
  const SimulationSpec spec{g, DiffusivityField::constant(theta), sigma, 1.0};
  const std::size_t reps = 400;
  const std::size_t mid = g.n_interior() / 2;  // x = 0.5
  std::vector<double> v;
  struct Last : RowSink {
    std::size_t nt, mid;
    std::vector<double>* out;
    void consume(const LaneRow& r) override {
      if (r.row != nt) return;
      for (std::size_t l = 0; l < r.active_lanes; ++l) out->push_back(r.signal[mid * r.lanes + l]);
    }
  } last;
  last.nt = g.nt();
  last.mid = mid;
  last.out = &v;
  RowSink* sinks[] = {&last};
  for (std::size_t b = 0; b < reps; b += kStreamLanes) {
    StreamBatch batch{31, {}, false};
    for (std::size_t l = 0; l < kStreamLanes; ++l) batch.trajectories.push_back(b + l);
    simulate_stream(spec, {}, batch, sinks);
  }
  REQUIRE(v.size() == reps);
  double m2 = 0.0;
  for (double x : v) m2 += x * x;
  m2 /= reps;
  const SpectralOracle oracle(theta, sigma);
  const OracleValue ref = pointwise_variance(oracle, 1.0, 0.5);
  const double se = m2 * std::sqrt(2.0 / reps);
  CHECK(std::abs(m2 - ref.value) <= 3.0 * se);
}
