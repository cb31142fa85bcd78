#include <doctest.h>

#include <cmath>
#include <numbers>

#include "heatest/error.hpp"
#include "heatest/kernel.hpp"
#include "heatest/semigroup.hpp"
#include "support.hpp"

using namespace heatest;
using testsupport::rel;
using testsupport::simpson;

namespace {
constexpr double kPi = std::numbers::pi;
double b(double x) { return bump(x); }
}  // namespace

TEST_CASE("semigroup at time zero is the identity") {
  const GridFunction g = dirichlet_semigroup(b, 0.0, -2.0, 2.0, 0.5);
  for (std::size_t j = 0; j < g.values.size(); ++j) CHECK(g.values[j] == b(g.node(j)));
  const GridFunction h = dirichlet_semigroup(b, 0.0, -2.0, 2.0, [](double) { return 0.5; });
  for (std::size_t j = 0; j < h.values.size(); j += 11) CHECK(h.values[j] == b(h.node(j)));
}

TEST_CASE("first mode decays at its eigenvalue") {
  const double L = 2.0, theta = 0.3, t = 0.7;
  const auto e1 = [&](double y) { return std::sin(kPi * (y + L) / (2 * L)); };
  const double decay = std::exp(-theta * std::pow(kPi / (2 * L), 2) * t);
  const GridFunction s = dirichlet_semigroup(e1, t, -L, L, theta);
  const GridFunction f = dirichlet_semigroup(e1, t, -L, L, [&](double) { return theta; });
  for (std::size_t j = 0; j < s.values.size(); j += 7) CHECK(std::abs(s.values[j] - decay * e1(s.node(j))) < 1e-12);
  for (std::size_t j = 0; j < f.values.size(); j += 7) CHECK(std::abs(f.values[j] - decay * e1(f.node(j))) < 1e-6);
}

TEST_CASE("finite differences agree with an independent sine expansion") {
  const double L = 2.0, theta = 0.05, t = 3.0;
  const GridFunction f = dirichlet_semigroup(b, t, -L, L, [&](double) { return theta; });
  // coefficients of the bump in sin(m pi (y + L) / 2L)
  std::vector<double> c(200);
  for (int m = 1; m <= 200; ++m) {
    c[m - 1] = static_cast<double>(simpson([&](long double y) {
      return bump(static_cast<double>(y)) * std::sin(m * std::numbers::pi_v<long double> * (y + L) / (2 * L));
    }, -1, 1, 4000)) * 2 / (2 * L);
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < f.values.size(); j += 5) {
    const double y = f.node(j);
    double s = 0.0;
    for (int m = 1; m <= 200; ++m) {
      s += c[m - 1] * std::exp(-theta * std::pow(m * kPi / (2 * L), 2) * t) * std::sin(m * kPi * (y + L) / (2 * L));
    }
    worst = std::max(worst, std::abs(f.values[j] - s));
  }
  CHECK(worst < 1e-6 * bump(0.0));

  const GridFunction g = dirichlet_semigroup(b, t, -L, L, theta);
  const GridFunction b0 = dirichlet_semigroup(b, 0.0, -L, L, theta);
  CHECK(g.norm_l2() <= b0.norm_l2());
  CHECK(f.norm_l2() <= b0.norm_l2());
  CHECK_THROWS_AS(dirichlet_semigroup(b, -1.0, -L, L, theta), InvalidInput);
}

TEST_CASE("whole line heat flow") {
  const CompactFunction ind{[](double) { return 1.0; }, -1.0, 1.0};
  const double theta = 0.4, t = 0.3;
  const double s = std::sqrt(4 * theta * t);
  for (double x : {-1.5, 0.0, 0.9, 2.2}) {
    const double expect = 0.5 * (std::erf((x + 1) / s) - std::erf((x - 1) / s));
    CHECK(std::abs(whole_line_heat(ind, t, theta, x) - expect) < 1e-10);
  }
  const CompactFunction bf{b, -1.0, 1.0};
  const long double mass = simpson([&](long double x) { return whole_line_heat(bf, t, theta, static_cast<double>(x)); }, -6, 6, 2000);
  CHECK(std::abs(static_cast<double>(mass) - 1.0) < 1e-9);
  CHECK(whole_line_heat(bf, 0.0, theta, 0.3) == b(0.3));
}

TEST_CASE("approximation error of the localized semigroup") {
  const CompactFunction bf{b, -1.0, 1.0};
  const auto th = DiffusivityField::constant(1.0);
  CHECK(trotter_kato_error(bf, 0.0, 0.2, 0.2, 2.0, th, 0.5) == 0.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double d : {0.25, 0.2, 0.15, 0.1}) {
    const double e = trotter_kato_error(bf, 1.0, d, d, 2.0, th, 0.5);
    CHECK(e < prev);
    prev = e;
  }
  CHECK(prev < 1e-2);
  CHECK_THROWS_AS(trotter_kato_error(bf, 1.0, 0.2, 0.2, 0.5, th, 0.5), InvalidInput);
}
