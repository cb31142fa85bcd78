#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "heatest/estimator.hpp"
#include "heatest/kernel.hpp"

namespace heatest {

struct OracleValue {
  double value = 0.0;
  double error_bound = 0.0;
};

/// Time profile t -> f(t) supported in [lo, hi]; f is only called inside.
struct TimeProfile {
  std::function<double(double)> f;
  double lo = 0.0;
  double hi = 1.0;

  static TimeProfile indicator(double lo, double hi);
};

/// Space-time test function f(t) g(x); g is read on [0, 1].
struct SeparableTest {
  TimeProfile time;
  std::function<double(double)> space;
};

/// Localized kernel (or its time derivative / Laplacian) as a separable test.
enum class KernelPart { Value, TimeDerivative, Laplacian };
SeparableTest separable_test(const LocalizedKernel& lk, KernelPart part = KernelPart::Value);

/// Double time integrals of two profiles against exp(-lambda |t - s|),
/// built once from the cross-correlation c(u) = int a(t) b(t + u) dt at
/// fixed nodes and reused for every lambda.
class TimeCorrelation {
 public:
  TimeCorrelation(const TimeProfile& a, const TimeProfile& b, std::size_t nodes_per_panel = 16);

  /// int int a(t) b(s) exp(-lambda |t - s|) ds dt, lambda >= 0.
  double stationary(double lambda) const;
  std::size_t size() const noexcept { return u_.size(); }

 private:
  std::vector<double> u_;
  std::vector<double> wg_;  // weight * (c(u) + c(-u))
};

/// int a(t) exp(-lambda t) dt.
class LaplaceTransform {
 public:
  explicit LaplaceTransform(const TimeProfile& a, std::size_t nodes_per_panel = 16);
  double operator()(double lambda) const;

 private:
  double lo_ = 0.0;
  std::vector<double> v_;
  std::vector<double> wa_;
};

/// Constant-theta Dirichlet problem on (0, 1) in the sine basis
/// e_m = sqrt(2) sin(m pi x), lambda_m = theta0 m^2 pi^2.
class SpectralOracle {
 public:
  SpectralOracle(double theta0, double sigma, std::size_t n_modes = 4096);

  double theta0() const noexcept { return theta0_; }
  double sigma() const noexcept { return sigma_; }
  std::size_t n_modes() const noexcept { return n_modes_; }
  double lambda(std::size_t m) const;
  double eigenfunction(std::size_t m, double x) const;
  /// sum_{m > M} sigma^2 / (2 lambda_m), bounded by an integral.
  double tail_bound() const;
  /// <g, e_m> for m = 1..M (index m - 1), by a sine transform on 2^k cells.
  std::vector<double> coefficients(const std::function<double(double)>& g) const;

 private:
  double theta0_;
  double sigma_;
  std::size_t n_modes_;
};

/// Cov(<X, phi>, <X, psi>) for X_0 = 0. error_bound = |S_M - S_{M/2}|.
OracleValue spectral_covariance(const SeparableTest& phi, const SeparableTest& psi,
                                const SpectralOracle& oracle);
/// Bilinear extension to sums of separable terms.
OracleValue spectral_covariance(const std::vector<SeparableTest>& phi,
                                const std::vector<SeparableTest>& psi,
                                const SpectralOracle& oracle);

/// Var X(t, x).
OracleValue pointwise_variance(const SpectralOracle& oracle, double t, double x);

struct CInfinityOptions {
  std::size_t fft_points = 4096;
  double half_width = 8.0;
  std::size_t time_nodes = 16;
};

/// Limiting covariance of the localized statistics on the whole line.
/// Needs unit-scale spatial factors; throws DivergentConstant unless the
/// spatial derivative orders add up to at least two.
double c_infinity(const Kernel& phi, const Kernel& psi, double theta0, double sigma,
                  const CInfinityOptions& options = {});
/// Same with error_bound from doubling the FFT grid and the time order.
OracleValue c_infinity_checked(const Kernel& phi, const Kernel& psi, double theta0,
                               double sigma, const CInfinityOptions& options = {});

/// C_inf(Delta K, Delta K) from the gradient form
/// sigma^2 / (2 theta0) int int <grad K_t, S_0(|t - s|) grad K_s> ds dt,
/// evaluated without Fourier transforms.
double c_infinity_gradient_form(const Kernel& K, double theta0, double sigma);

CltConstants clt_constants(const Kernel& K, double theta0, double sigma);

}  // namespace heatest
