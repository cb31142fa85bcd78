#include "heatest/diffusivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "heatest/error.hpp"

namespace heatest {

namespace {

// psi(y) = 1 / (1 + exp(s y)), written to avoid overflow for large |s y|.
double logistic(double s, double y) {
  const double z = s * y;
  if (z > 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

// psi'(y) = -s psi(y) (1 - psi(y)).
double logistic_derivative(double s, double y) {
  const double p = logistic(s, y);
  return -s * p * (1.0 - p);
}

}  // namespace

DiffusivityField::DiffusivityField(Fn value, Fn derivative, Regularity regularity,
                                   std::string kind,
                                   std::map<std::string, double> params)
    : value_(std::move(value)),
      derivative_(std::move(derivative)),
      regularity_(regularity),
      kind_(std::move(kind)),
      params_(std::move(params)) {
  constexpr int kSamples = 20001;
  min_ = std::numeric_limits<double>::infinity();
  max_ = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kSamples; ++i) {
    const double x = static_cast<double>(i) / (kSamples - 1);
    const double v = value_(x);
    if (!std::isfinite(v)) throw InvalidInput("diffusivity is not finite on [0, 1]");
    min_ = std::min(min_, v);
    max_ = std::max(max_, v);
  }
  if (!(min_ > 0.0)) {
    throw InvalidInput("diffusivity must be bounded away from zero (min = " +
                       std::to_string(min_) + ")");
  }
}

DiffusivityField DiffusivityField::constant(double value) {
  return DiffusivityField([value](double) { return value; },
                          [](double) { return 0.0; }, Regularity::Constant,
                          "constant", {{"value", value}});
}

DiffusivityField DiffusivityField::logistic_pair(double a, double c1, double b,
                                                 double c2, double steepness) {
  auto value = [=](double x) {
    return a * logistic(steepness, x - c1) + b * logistic(steepness, c2 - x);
  };
  auto deriv = [=](double x) {
    return a * logistic_derivative(steepness, x - c1) -
           b * logistic_derivative(steepness, c2 - x);
  };
  return DiffusivityField(
      value, deriv, Regularity::Smooth, "logistic",
      {{"a", a}, {"c1", c1}, {"b", b}, {"c2", c2}, {"steepness", steepness}});
}

DiffusivityField DiffusivityField::logistic_profile() {
  return logistic_pair(0.04, 0.4, 0.02, 0.6, 50.0);
}

DiffusivityField DiffusivityField::scaled(double factor) const {
  if (!(factor > 0.0)) throw InvalidInput("diffusivity scale must be positive");
  auto params = params_;
  params["scale"] = factor * (params_.count("scale") ? params_.at("scale") : 1.0);
  return DiffusivityField([v = value_, factor](double x) { return factor * v(x); },
                          [d = derivative_, factor](double x) { return factor * d(x); },
                          regularity_, kind_, std::move(params));
}

}  // namespace heatest
