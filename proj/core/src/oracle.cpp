#include "heatest/oracle.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>

#include "heatest/error.hpp"
#include "heatest/numerics.hpp"

namespace heatest {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW planning is not thread safe; execution is.
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> merged_breaks(std::vector<double> breaks, double lo, double hi) {
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::vector<double> out;
  for (double b : breaks) {
    if (b >= lo && b <= hi) out.push_back(b);
  }
  std::sort(out.begin(), out.end());
  const double tol = 1e-14 * std::max(1.0, hi - lo);
  std::vector<double> uniq;
  for (double b : out) {
    if (uniq.empty() || b - uniq.back() > tol) uniq.push_back(b);
  }
  if (uniq.back() < hi) uniq.back() = hi;
  return uniq;
}

// Nodes graded towards 0 on [0, len], plus extra breakpoints.
QuadratureRule graded_rule(double len, const std::vector<double>& extra, std::size_t n) {
  std::vector<double> br = graded_breaks(0.0, len, 1e-10 * len, 1.5);
  br.insert(br.end(), extra.begin(), extra.end());
  return composite_gauss_legendre(merged_breaks(std::move(br), 0.0, len), n);
}

double overlap_integral(const TimeProfile& a, const TimeProfile& b, double u, std::size_t n) {
  const double lo = std::max(a.lo, b.lo - u);
  const double hi = std::min(a.hi, b.hi - u);
  if (!(hi > lo)) return 0.0;
  constexpr int panels = 8;
  double s = 0.0;
  const double w = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const QuadratureRule r = gauss_legendre(n, lo + p * w, lo + (p + 1) * w);
    s += r.apply([&](double t) { return a.f(t) * b.f(t + u); });
  }
  return s;
}

TimeProfile profile_of(const BumpFactor& f) {
  return TimeProfile{[f](double t) { return f(t); }, f.lo(), f.hi()};
}

}  // namespace

TimeProfile TimeProfile::indicator(double lo, double hi) {
  if (!(hi > lo)) throw InvalidInput("indicator: empty interval");
  return TimeProfile{[](double) { return 1.0; }, lo, hi};
}

SeparableTest separable_test(const LocalizedKernel& lk, KernelPart part) {
  const SupportBox box = lk.support();
  TimeProfile time;
  time.lo = box.t_lo;
  time.hi = box.t_hi;
  if (part == KernelPart::TimeDerivative) {
    time.f = [lk](double t) { return lk.time1(t); };
  } else {
    time.f = [lk](double t) { return lk.time0(t); };
  }
  std::function<double(double)> space;
  if (part == KernelPart::Laplacian) {
    space = [lk](double y) { return lk.space2(y); };
  } else {
    space = [lk](double y) { return lk.space0(y); };
  }
  return SeparableTest{std::move(time), std::move(space)};
}

TimeCorrelation::TimeCorrelation(const TimeProfile& a, const TimeProfile& b,
                                 std::size_t nodes_per_panel) {
  if (!(a.hi > a.lo) || !(b.hi > b.lo)) throw InvalidInput("time correlation: empty support");
  // c(u) lives on (b.lo - a.hi, b.hi - a.lo); kinks where support ends meet
  const std::vector<double> ends{b.lo - a.hi, b.hi - a.lo, b.lo - a.lo, b.hi - a.hi};
  double umax = 0.0;
  std::vector<double> extra;
  for (double e : ends) {
    umax = std::max(umax, std::abs(e));
    extra.push_back(std::abs(e));
  }
  const QuadratureRule rule = graded_rule(umax, extra, nodes_per_panel);
  const std::size_t inner = std::max<std::size_t>(nodes_per_panel, 8);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double u = rule.nodes[i];
    const double g = overlap_integral(a, b, u, inner) + overlap_integral(a, b, -u, inner);
    if (g == 0.0) continue;
    u_.push_back(u);
    wg_.push_back(rule.weights[i] * g);
  }
}

double TimeCorrelation::stationary(double lambda) const {
  if (!(lambda >= 0.0)) throw InvalidInput("time correlation: lambda must be >= 0");
  double s = 0.0;
  for (std::size_t i = 0; i < u_.size(); ++i) s += wg_[i] * std::exp(-lambda * u_[i]);
  return s;
}

LaplaceTransform::LaplaceTransform(const TimeProfile& a, std::size_t nodes_per_panel)
    : lo_(a.lo) {
  if (!(a.hi > a.lo)) throw InvalidInput("laplace transform: empty support");
  const QuadratureRule rule = graded_rule(a.hi - a.lo, {}, nodes_per_panel);
  v_ = rule.nodes;
  wa_.resize(v_.size());
  for (std::size_t i = 0; i < v_.size(); ++i) wa_[i] = rule.weights[i] * a.f(a.lo + v_[i]);
}

double LaplaceTransform::operator()(double lambda) const {
  double s = 0.0;
  for (std::size_t i = 0; i < v_.size(); ++i) s += wa_[i] * std::exp(-lambda * (lo_ + v_[i]));
  return s;
}

SpectralOracle::SpectralOracle(double theta0, double sigma, std::size_t n_modes)
    : theta0_(theta0), sigma_(sigma), n_modes_(n_modes) {
  if (!(theta0 > 0.0)) throw InvalidInput("spectral oracle: theta0 must be positive");
  if (!(sigma >= 0.0)) throw InvalidInput("spectral oracle: sigma must be >= 0");
  if (n_modes < 2) throw InvalidInput("spectral oracle: need at least 2 modes");
}

double SpectralOracle::lambda(std::size_t m) const {
  const double mp = static_cast<double>(m) * kPi;
  return theta0_ * mp * mp;
}

double SpectralOracle::eigenfunction(std::size_t m, double x) const {
  return std::numbers::sqrt2 * std::sin(static_cast<double>(m) * kPi * x);
}

double SpectralOracle::tail_bound() const {
  return sigma_ * sigma_ / (2.0 * theta0_ * kPi * kPi * static_cast<double>(n_modes_));
}

std::vector<double> SpectralOracle::coefficients(const std::function<double(double)>& g) const {
  std::size_t cells = 16384;
  while (cells < 4 * n_modes_) cells *= 2;
  const std::size_t n = cells - 1;
  std::vector<double> in(n);
  std::vector<double> out(n);
  const double dx = 1.0 / static_cast<double>(cells);
  for (std::size_t j = 0; j < n; ++j) in[j] = g(static_cast<double>(j + 1) * dx);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    plan = fftw_plan_r2r_1d(static_cast<int>(n), in.data(), out.data(), FFTW_RODFT00,
                            FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  std::vector<double> c(n_modes_);
  for (std::size_t m = 0; m < n_modes_; ++m) c[m] = std::numbers::sqrt2 * dx * 0.5 * out[m];
  return c;
}

OracleValue spectral_covariance(const SeparableTest& phi, const SeparableTest& psi,
                                const SpectralOracle& oracle) {
  const std::vector<double> a = oracle.coefficients(phi.space);
  const std::vector<double> b = oracle.coefficients(psi.space);
  const TimeCorrelation tc(phi.time, psi.time);
  const LaplaceTransform la(phi.time);
  const LaplaceTransform lb(psi.time);
  const std::size_t half = oracle.n_modes() / 2;
  double s_half = 0.0;
  double s = 0.0;
  for (std::size_t m = 1; m <= oracle.n_modes(); ++m) {
    const double ab = a[m - 1] * b[m - 1];
    if (ab != 0.0) {
      const double lam = oracle.lambda(m);
      s += ab * (tc.stationary(lam) - la(lam) * lb(lam)) / lam;
    }
    if (m == half) s_half = s;
  }
  const double pre = 0.5 * oracle.sigma() * oracle.sigma();
  return OracleValue{pre * s, pre * std::abs(s - s_half)};
}

OracleValue spectral_covariance(const std::vector<SeparableTest>& phi,
                                const std::vector<SeparableTest>& psi,
                                const SpectralOracle& oracle) {
  OracleValue total;
  for (const auto& p : phi) {
    for (const auto& q : psi) {
      const OracleValue v = spectral_covariance(p, q, oracle);
      total.value += v.value;
      total.error_bound += v.error_bound;
    }
  }
  return total;
}

OracleValue pointwise_variance(const SpectralOracle& oracle, double t, double x) {
  if (!(t >= 0.0)) throw InvalidInput("pointwise variance: t must be >= 0");
  const double s2 = oracle.sigma() * oracle.sigma();
  double s = 0.0;
  for (std::size_t m = 1; m <= oracle.n_modes(); ++m) {
    const double lam = oracle.lambda(m);
    const double e = oracle.eigenfunction(m, x);
    s += -std::expm1(-2.0 * lam * t) / (2.0 * lam) * e * e;
  }
  return OracleValue{s2 * s, 4.0 * oracle.tail_bound()};
}

namespace {

// |b^(ξ_k)|^2 on ξ_k = k pi / L, k = 0..n/2.
std::vector<double> bump_power_spectrum(std::size_t n, double L) {
  std::vector<double> in(n);
  const double dx = 2.0 * L / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) in[j] = bump(-L + static_cast<double>(j) * dx);
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  std::vector<double> p(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) p[k] = dx * dx * std::norm(out[k]);
  return p;
}

}  // namespace

double c_infinity(const Kernel& phi, const Kernel& psi, double theta0, double sigma,
                  const CInfinityOptions& opt) {
  if (!(theta0 > 0.0)) throw InvalidInput("c_infinity: theta0 must be positive");
  const BumpFactor& fp = phi.space_factor();
  const BumpFactor& fq = psi.space_factor();
  if (fp.scale != 1.0 || fq.scale != 1.0) {
    throw InvalidInput("c_infinity: spatial factors must have unit scale");
  }
  if (opt.fft_points < 4096 || (opt.fft_points & (opt.fft_points - 1)) != 0) {
    throw InvalidInput("c_infinity: fft_points must be a power of two >= 4096");
  }
  if (!(opt.half_width >= 1.0)) throw InvalidInput("c_infinity: half_width must cover [-1, 1]");
  const int m = fp.order + fq.order;
  if (m < 2) {
    throw DivergentConstant("c_infinity: spatial derivative orders " + std::to_string(fp.order) +
                            " + " + std::to_string(fq.order) +
                            " leave a 1/xi^2 singularity at xi = 0");
  }
  const std::vector<double> power = bump_power_spectrum(opt.fft_points, opt.half_width);
  const TimeCorrelation tc(profile_of(phi.time_factor()), profile_of(psi.time_factor()),
                           opt.time_nodes);
  const double dxi = kPi / opt.half_width;
  const double phase = 0.5 * kPi * (fp.order - fq.order);
  const double dc = fp.center - fq.center;
  const double amp = fp.amp * fq.amp / theta0;
  double s = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double xi = dxi * static_cast<double>(k);
    const double f = amp * std::pow(xi, m - 2) * power[k] * std::cos(phase - xi * dc) *
                     tc.stationary(theta0 * xi * xi);
    s += (k == 0 ? 0.5 : 1.0) * f;
  }
  // (1 / 2 pi) over the whole line, the integrand being even in xi
  return 0.5 * sigma * sigma * s * dxi / kPi;
}

OracleValue c_infinity_checked(const Kernel& phi, const Kernel& psi, double theta0,
                               double sigma, const CInfinityOptions& options) {
  const double v = c_infinity(phi, psi, theta0, sigma, options);
  CInfinityOptions fine = options;
  fine.fft_points *= 2;
  fine.time_nodes *= 2;
  const double w = c_infinity(phi, psi, theta0, sigma, fine);
  return OracleValue{v, std::abs(w - v)};
}

double c_infinity_gradient_form(const Kernel& K, double theta0, double sigma) {
  if (!(theta0 > 0.0)) throw InvalidInput("c_infinity_gradient_form: theta0 must be positive");
  const BumpFactor beta = K.space_factor();
  const BumpFactor tau = K.time_factor();
  // R(y) = int beta'(x) beta'(x + y) dx
  auto R = [&](double y) {
    const double lo = std::max(beta.lo(), beta.lo() - y);
    const double hi = std::min(beta.hi(), beta.hi() - y);
    if (!(hi > lo)) return 0.0;
    std::vector<double> br(17);
    for (int i = 0; i <= 16; ++i) br[i] = lo + (hi - lo) * i / 16.0;
    const QuadratureRule q = composite_gauss_legendre(br, 24);
    return q.apply([&](double x) { return beta(x, 1) * beta(x + y, 1); });
  };
  // G(r) = <beta', heat kernel at time r * beta'>, Gaussian variance 2 theta0 r
  const QuadratureRule gh = gauss_hermite(120);
  auto G = [&](double r) {
    const double s = std::sqrt(4.0 * theta0 * r);
    return gh.apply([&](double u) { return R(s * u); }) / std::sqrt(kPi);
  };
  // A(u) = int tau(t) tau(t + u) dt on u >= 0, symmetric
  const double width = tau.hi() - tau.lo();
  auto A = [&](double u) {
    const double lo = tau.lo();
    const double hi = tau.hi() - u;
    if (!(hi > lo)) return 0.0;
    std::vector<double> br(9);
    for (int i = 0; i <= 8; ++i) br[i] = lo + (hi - lo) * i / 8.0;
    const QuadratureRule q = composite_gauss_legendre(br, 24);
    return q.apply([&](double t) { return tau(t) * tau(t + u); });
  };
  std::vector<double> br(17);
  for (int i = 0; i <= 16; ++i) br[i] = width * i / 16.0;
  const QuadratureRule q = composite_gauss_legendre(br, 16);
  const double integral = 2.0 * q.apply([&](double u) { return A(u) * G(u); });
  return sigma * sigma / (2.0 * theta0) * integral;
}

CltConstants clt_constants(const Kernel& K, double theta0, double sigma) {
  const Kernel lap = K.laplacian_kernel();
  CltConstants c;
  c.c_inf_dd = c_infinity(lap, lap, theta0, sigma);
  c.c_inf_dd_lag = c_infinity(lap, lap.time_shifted(-1.0), theta0, sigma);
  c.lap_norm_sq = kernel_norms(K).lap;
  return c;
}

}  // namespace heatest
