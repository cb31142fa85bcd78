#include "heatest/tridiag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "heatest/error.hpp"

namespace heatest {

void Tridiagonal::apply(std::span<const double> v, std::span<double> out) const {
  const std::size_t n = size();
  if (v.size() != n || out.size() != n) throw InvalidInput("tridiagonal apply: size mismatch");
  for (std::size_t j = 0; j < n; ++j) {
    double acc = diag[j] * v[j];
    if (j > 0) acc += lower[j] * v[j - 1];
    if (j + 1 < n) acc += upper[j] * v[j + 1];
    out[j] = acc;
  }
}

Tridiagonal Tridiagonal::shifted_identity(double scale) const {
  Tridiagonal m;
  const std::size_t n = size();
  m.lower.resize(n);
  m.diag.resize(n);
  m.upper.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    m.lower[j] = scale * lower[j];
    m.diag[j] = 1.0 + scale * diag[j];
    m.upper[j] = scale * upper[j];
  }
  return m;
}

double Tridiagonal::diagonal_dominance_margin() const {
  double margin = std::numeric_limits<double>::infinity();
  const std::size_t n = size();
  for (std::size_t j = 0; j < n; ++j) {
    double off = 0.0;
    if (j > 0) off += std::abs(lower[j]);
    if (j + 1 < n) off += std::abs(upper[j]);
    margin = std::min(margin, std::abs(diag[j]) - off);
  }
  return margin;
}

ThomasSolver::ThomasSolver(const Tridiagonal& m)
    : lower_(m.lower), c_prime_(m.size()), inv_pivot_(m.size()) {
  const std::size_t n = m.size();
  if (n == 0) throw InvalidInput("Thomas solver: empty matrix");
  double prev_c = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double pivot = m.diag[j] - (j > 0 ? m.lower[j] * prev_c : 0.0);
    if (pivot == 0.0 || !std::isfinite(pivot)) {
      throw SolverBreakdown("Thomas solver: zero pivot at row " + std::to_string(j));
    }
    inv_pivot_[j] = 1.0 / pivot;
    prev_c = (j + 1 < n) ? m.upper[j] * inv_pivot_[j] : 0.0;
    c_prime_[j] = prev_c;
  }
}

}  // namespace heatest
