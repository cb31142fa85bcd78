#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "heatest/error.hpp"
#include "heatest/oracle.hpp"
#include "support.hpp"

using namespace heatest;
using testsupport::rel;

namespace {

constexpr double kPi = std::numbers::pi;

std::function<double(double)> mode(int m) {
  return [m](double x) { return std::numbers::sqrt2 * std::sin(m * kPi * x); };
}

// sigma^2 / 2 int_0^T int_0^T (e^{-l|t-s|} - e^{-l(t+s)}) / l ds dt
double indicator_mode_variance(double sigma, double lambda, double T) {
  const double e = -std::expm1(-lambda * T);
  const double stat = 2.0 * T / lambda - 2.0 * e / (lambda * lambda);
  const double init = (e / lambda) * (e / lambda);
  return 0.5 * sigma * sigma * (stat - init) / lambda;
}

}  // namespace

TEST_CASE("time correlation and laplace transform") {
  const TimeCorrelation tc(TimeProfile::indicator(0, 1), TimeProfile::indicator(0, 1));
  for (double l : {0.1, 1.0, 7.5, 40.0}) {
    const double expect = 2.0 / l + 2.0 * std::expm1(-l) / (l * l);
    CHECK(rel(tc.stationary(l), expect) < 1e-10);
  }
  const TimeCorrelation tc2(TimeProfile::indicator(0, 1), TimeProfile::indicator(0, 2));
  CHECK(rel(tc2.stationary(0.0), 2.0) < 1e-12);
  const TimeProfile tri{[](double t) { return t; }, 0.0, 1.0};
  const TimeCorrelation tc3(tri, TimeProfile::indicator(0.5, 1.5));
  CHECK(rel(tc3.stationary(0.0), 0.5) < 1e-12);
  CHECK_THROWS_AS(tc.stationary(-1.0), InvalidInput);

  const LaplaceTransform la(TimeProfile::indicator(0.5, 2.0));
  for (double l : {0.0, 0.3, 5.0}) {
    const double expect = l == 0.0 ? 1.5 : (std::exp(-0.5 * l) - std::exp(-2.0 * l)) / l;
    CHECK(rel(la(l), expect) < 1e-12);
  }
}

TEST_CASE("spectral oracle basics") {
  const SpectralOracle o(0.02, 10.0, 512);
  CHECK(o.lambda(3) == doctest::Approx(0.02 * 9 * kPi * kPi));
  for (std::size_t m = 1; m < 512; ++m) CHECK(o.lambda(m + 1) > o.lambda(m));
  CHECK(o.tail_bound() == doctest::Approx(100.0 / (2 * 0.02 * kPi * kPi * 512)));
  const auto c = o.coefficients(mode(5));
  CHECK(c[4] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(c[3]) < 1e-12);
  CHECK(std::abs(c[5]) < 1e-12);
  const auto p = o.coefficients([](double x) { return x * (1 - x); });
  // <x(1 - x), sqrt2 sin(m pi x)> = 4 sqrt2 / (m pi)^3 for odd m
  for (int m : {1, 3, 7}) CHECK(rel(p[m - 1], 4 * std::numbers::sqrt2 / std::pow(m * kPi, 3)) < 1e-8);
  CHECK(std::abs(p[1]) < 1e-14);
  CHECK_THROWS_AS(SpectralOracle(0.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(SpectralOracle(1.0, -1.0), InvalidInput);
}

TEST_CASE("spectral covariance closed forms") {
  const double theta = 0.02, sigma = 10.0, T = 1.0;
  const SpectralOracle o(theta, sigma);
  const SeparableTest e1{TimeProfile::indicator(0, T), mode(1)};
  const OracleValue v = spectral_covariance(e1, e1, o);
  const double expect = indicator_mode_variance(sigma, theta * kPi * kPi, T);
  CHECK(rel(v.value, expect) < 1e-8);

  const TimeProfile rho{[](double t) { return std::sin(kPi * t); }, 0.0, 1.0};
  const TimeProfile drho{[](double t) { return kPi * std::cos(kPi * t); }, 0.0, 1.0};
  const OracleValue orth = spectral_covariance(SeparableTest{rho, mode(1)}, SeparableTest{drho, mode(2)}, o);
  CHECK(std::abs(orth.value) < 1e-12 * v.value);

  // bilinearity
  const SeparableTest e2{rho, mode(2)};
  const OracleValue sum = spectral_covariance(std::vector{e1, e2}, std::vector{e1, e2}, o);
  const double parts = v.value + spectral_covariance(e2, e2, o).value +
                       2 * spectral_covariance(e1, e2, o).value;
  CHECK(rel(sum.value, parts) < 1e-12);
}

TEST_CASE("spectral covariance is symmetric, positive and converged") {
  const SpectralOracle o(0.03, 2.0);
  const SpectralOracle o2(0.03, 2.0, 8192);
  std::mt19937_64 gen(12345);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a0 = u(gen), a1 = u(gen), a2 = u(gen);
    const double lo = 0.5 * (u(gen) + 1.0) * 0.5;
    const double b0 = u(gen), b1 = u(gen), b2 = u(gen);
    const double c = 0.5 + 0.4 * u(gen);
    const SeparableTest phi{TimeProfile{[=](double t) { return a0 + a1 * std::cos(3 * t) + a2 * t * t; }, lo, 1.0},
                            [=](double x) {
                              return x * (1 - x) * (b0 + b1 * x + b2 * std::exp(-20 * (x - c) * (x - c)));
                            }};
    const OracleValue v = spectral_covariance(phi, phi, o);
    CHECK(v.value >= -v.error_bound);
    if (trial < 5) {
      const OracleValue w = spectral_covariance(phi, phi, o2);
      CHECK(std::abs(w.value - v.value) <= 1e-8 * std::abs(v.value) + 1e-14);
    }
  }
  const TimeProfile rho{[](double t) { return std::sin(kPi * t); }, 0.0, 1.0};
  const SeparableTest p{rho, [](double x) { return x * x * (1 - x); }};
  const SeparableTest q{TimeProfile::indicator(0.3, 0.9), [](double x) { return std::sin(kPi * x) * std::cos(kPi * x); }};
  const double pq = spectral_covariance(p, q, o).value;
  const double qp = spectral_covariance(q, p, o).value;
  CHECK(rel(pq, qp) < 1e-12);
}

TEST_CASE("pointwise variance") {
  const SpectralOracle o(0.02, 10.0);
  const OracleValue v = pointwise_variance(o, 1.0, 0.5);
  long double s = 0.0L;
  for (int m = 1; m <= 4096; ++m) {
    const long double lam = 0.02L * m * m * std::numbers::pi_v<long double> * std::numbers::pi_v<long double>;
    const long double e = std::sin(m * std::numbers::pi_v<long double> * 0.5L);
    s += (1 - std::exp(-2 * lam)) / (2 * lam) * 2 * e * e;
  }
  CHECK(rel(v.value, static_cast<double>(100 * s)) < 1e-12);
  CHECK(v.error_bound > 0.0);
  CHECK(pointwise_variance(o, 0.0, 0.5).value == 0.0);
  CHECK_THROWS_AS(pointwise_variance(o, -1.0, 0.5), InvalidInput);
}

TEST_CASE("limiting constant") {
  const Kernel K = bump_kernel();
  const Kernel L = K.laplacian_kernel();
  const double c1 = c_infinity(L, L, 0.02, 1.0);
  const double c2 = c_infinity(L, L, 0.02, 2.0);
  CHECK(c1 > 0.0);
  CHECK(c2 == 4.0 * c1);
  const double grad = c_infinity_gradient_form(K, 0.02, 1.0);
  CHECK(rel(c1, grad) < 1e-4);
  const OracleValue chk = c_infinity_checked(L, L, 0.02, 1.0);
  CHECK(chk.error_bound < 1e-4 * chk.value);
  const Kernel Lm = L.time_shifted(-1.0);
  const double lag = c_infinity(L, Lm, 0.02, 1.0);
  CHECK(rel(lag, c_infinity(Lm, L, 0.02, 1.0)) < 1e-10);
  const CltConstants cc = clt_constants(K, 0.02, 1.0);
  CHECK(rel(cc.c_inf_dd, c1) < 1e-12);
  CHECK(rel(cc.c_inf_dd_lag, lag) < 1e-12);
  CHECK(rel(cc.lap_norm_sq, kernel_norms(K).lap) < 1e-12);
  CHECK_THROWS_AS(c_infinity(K, K, 0.02, 1.0), DivergentConstant);
  CHECK_NOTHROW(c_infinity(K, L, 0.02, 1.0));
  CHECK_THROWS_AS(c_infinity(L, L, 0.0, 1.0), InvalidInput);
  CInfinityOptions bad;
  bad.fft_points = 1000;
  CHECK_THROWS_AS(c_infinity(L, L, 0.02, 1.0, bad), InvalidInput);
}
