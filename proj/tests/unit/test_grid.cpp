#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "heatest/diffusivity.hpp"
#include "heatest/error.hpp"
#include "heatest/field_io.hpp"
#include "heatest/grid.hpp"
#include "heatest/numerics.hpp"
#include "support.hpp"

using namespace heatest;

TEST_CASE("grid steps and nodes") {
  const SpaceTimeGrid g(1.0, 250000, 1024);
  CHECK(g.dt() == 1.0 / 250000);
  CHECK(g.dx() == 1.0 / 1024);
  CHECK(g.n_interior() == 1023);
  CHECK(g.n_rows() == 250001);
  CHECK(g.node(0) == g.dx());
  CHECK(g.node(1022) == 1023.0 / 1024);
  for (std::size_t j = 1; j < g.n_interior(); ++j) {
    CHECK(std::abs((g.node(j) - g.node(j - 1)) - g.dx()) <= 2e-16);
  }
  CHECK(static_cast<double>(g.nt()) * g.dt() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("grid rejects invalid sizes") {
  CHECK_THROWS_AS(SpaceTimeGrid(0.0, 10, 10), InvalidInput);
  CHECK_THROWS_AS(SpaceTimeGrid(1.0, 0, 10), InvalidInput);
  CHECK_THROWS_AS(SpaceTimeGrid(1.0, 10, 1), InvalidInput);
  CHECK_THROWS_AS(SpaceTimeGrid(std::nan(""), 10, 10), InvalidInput);
}

TEST_CASE("sample_field") {
  const SpaceTimeGrid g(1.0, 10, 4);
  const auto zero = sample_field([](double) { return 0.0; }, g);
  CHECK(zero.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(zero[i] == 0.0);

  const auto s = sample_field([](double x) { return std::sin(std::numbers::pi * x); }, g);
  CHECK(s[0] == doctest::Approx(std::sin(std::numbers::pi / 4)).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s[2] == doctest::Approx(std::sin(3 * std::numbers::pi / 4)).epsilon(1e-15));

  CHECK_THROWS_AS(sample_field([](double x) { return 1.0 / (x - 0.5); }, g), InvalidInput);
  CHECK_THROWS_AS(ScalarField1D(g, {1.0, 2.0}), InvalidInput);
}

TEST_CASE("profile diffusivity at 0.5 against a long double evaluation") {
  const DiffusivityField th = DiffusivityField::logistic_profile();
  auto psi = [](long double y) { return 1.0L / (1.0L + std::exp(50.0L * y)); };
  const long double ref = 0.04L * psi(0.5L - 0.4L) + 0.02L * psi(0.6L - 0.5L);
  CHECK(testsupport::rel(th(0.5), static_cast<double>(ref)) < 1e-14);
  const SpaceTimeGrid g(1.0, 10, 2);
  CHECK(testsupport::rel(sample_field([&](double x) { return th(x); }, g)[0],
                         static_cast<double>(ref)) < 1e-14);
  // plateau values and the derivative by central differences
  CHECK(th(0.1) == doctest::Approx(0.04).epsilon(1e-6));
  CHECK(th(0.9) == doctest::Approx(0.02).epsilon(1e-6));
  for (double x : {0.3, 0.45, 0.5, 0.62}) {
    const double h = 1e-6;
    CHECK(th.derivative(x) ==
          doctest::Approx((th(x + h) - th(x - h)) / (2 * h)).epsilon(1e-6));
  }
  CHECK(th.min() > 0.0);
  CHECK(th.max() <= 0.0400001);
  CHECK_FALSE(th.is_constant());
}

TEST_CASE("diffusivity validation and scaling") {
  CHECK_THROWS_AS(DiffusivityField::constant(0.0), InvalidInput);
  CHECK_THROWS_AS(DiffusivityField::constant(-1.0), InvalidInput);
  const auto c = DiffusivityField::constant(0.02);
  CHECK(c.is_constant());
  CHECK(c(0.3) == 0.02);
  CHECK(c.derivative(0.3) == 0.0);
  const auto s = DiffusivityField::logistic_profile().scaled(2.0);
  CHECK(s(0.2) == doctest::Approx(2.0 * DiffusivityField::logistic_profile()(0.2)));
  CHECK_THROWS_AS(c.scaled(0.0), InvalidInput);
}

TEST_CASE("binary field round trip and header layout") {
  const SpaceTimeGrid g(0.5, 3, 5);
  SpaceTimeField f(g.n_rows(), g.n_interior());
  for (std::size_t i = 0; i < f.rows(); ++i) {
    for (std::size_t j = 0; j < f.cols(); ++j) f(i, j) = std::sin(1.0 + i * 7.0 + j) * 1e-3;
  }
  std::stringstream ss;
  write_field(ss, g, f);
  const std::string bytes = ss.str();
  REQUIRE(bytes.size() == 5 + 8 + 8 + 8 + 4 * 4 * 8);
  CHECK(bytes.substr(0, 5) == "HEST1");
  std::uint64_t nt = 0;
  std::memcpy(&nt, bytes.data() + 5, 8);
  CHECK(nt == 3);
  double T = 0;
  std::memcpy(&T, bytes.data() + 21, 8);
  CHECK(T == 0.5);

  const StoredField back = read_field(ss);
  CHECK(back.grid == g);
  CHECK(std::memcmp(back.values.data().data(), f.data().data(), f.data().size() * 8) == 0);

  std::stringstream bad("HEST2xxxxxxxxxxxxxxxxxxxxxxxx");
  CHECK_THROWS_AS(read_field(bad), IoError);
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_field(cut), IoError);
  CHECK_THROWS_AS(read_field("/nonexistent/field.hest"), IoError);

  std::ostringstream csv;
  write_field_csv(csv, g, f, 2);
  std::istringstream lines(csv.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) ++n;
  CHECK(n == 1 + 2 * 4);  // header, rows 0 and 2
}

TEST_CASE("numerics helpers") {
  std::vector<double> v(1001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  CHECK(pairwise_sum(v) == 500500.0);
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);

  const auto gl = gauss_legendre(5, 0.0, 2.0);
  CHECK(gl.apply([](double x) { return std::pow(x, 9); }) == doctest::Approx(102.4).epsilon(1e-13));
  const auto gh = gauss_hermite(20);
  CHECK(gh.apply([](double u) { return u * u; }) ==
        doctest::Approx(std::sqrt(std::numbers::pi) / 2).epsilon(1e-13));

  CHECK(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi) ==
        doctest::Approx(2.0).epsilon(1e-12));

  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{3, 5, 7, 9};
  const LinearFit f = linear_fit(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK_THROWS_AS(linear_fit(std::vector<double>{1.0}, std::vector<double>{1.0}), InvalidInput);

  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);

  const auto br = graded_breaks(0.0, 1.0, 0.01, 2.0);
  CHECK(br.front() == 0.0);
  CHECK(br.back() == 1.0);
  for (std::size_t i = 1; i < br.size(); ++i) CHECK(br[i] > br[i - 1]);
}
