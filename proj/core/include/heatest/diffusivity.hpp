#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

namespace heatest {

enum class Regularity { Constant, Smooth };

/// Spatially varying diffusivity x -> theta(x) on [0, 1] with its derivative.
///
/// Bounds are taken over a dense sample of [0, 1] at construction and
/// theta_min must be strictly positive.
class DiffusivityField {
 public:
  using Fn = std::function<double(double)>;

  DiffusivityField(Fn value, Fn derivative, Regularity regularity,
                   std::string kind, std::map<std::string, double> params);

  static DiffusivityField constant(double value);
  /// a * psi(x - c1) + b * psi(c2 - x) with psi(y) = 1 / (1 + exp(s * y)).
  static DiffusivityField logistic_pair(double a, double c1, double b, double c2,
                                        double steepness);
  /// The two-plateau profile 0.04 psi(x - 0.4) + 0.02 psi(0.6 - x), s = 50.
  static DiffusivityField logistic_profile();

  double operator()(double x) const { return value_(x); }
  double derivative(double x) const { return derivative_(x); }

  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }
  Regularity regularity() const noexcept { return regularity_; }
  bool is_constant() const noexcept { return regularity_ == Regularity::Constant; }

  const std::string& kind() const noexcept { return kind_; }
  const std::map<std::string, double>& params() const noexcept { return params_; }

  /// factor * theta(x), e.g. to normalize theta(x0) to one.
  DiffusivityField scaled(double factor) const;

 private:
  Fn value_;
  Fn derivative_;
  Regularity regularity_;
  std::string kind_;
  std::map<std::string, double> params_;
  double min_ = 0.0;
  double max_ = 0.0;
};

}  // namespace heatest
