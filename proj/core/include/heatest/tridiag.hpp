#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace heatest {

/// Tridiagonal matrix stored by diagonals: row j reads
///   lower[j] * v[j-1] + diag[j] * v[j] + upper[j] * v[j+1]
/// with lower[0] and upper[n-1] unused (kept at zero).
struct Tridiagonal {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  std::size_t size() const noexcept { return diag.size(); }

  void apply(std::span<const double> v, std::span<double> out) const;
  /// I + scale * this
  Tridiagonal shifted_identity(double scale) const;
  /// min_j (|diag_j| - |lower_j| - |upper_j|)
  double diagonal_dominance_margin() const;
};

/// Thomas algorithm with the elimination coefficients precomputed, for
/// repeated solves against one matrix. The lane variant solves L systems
/// with the same matrix stored interleaved as v[j * L + l].
class ThomasSolver {
 public:
  explicit ThomasSolver(const Tridiagonal& m);

  std::size_t size() const noexcept { return inv_pivot_.size(); }

  void solve(std::span<const double> rhs, std::span<double> x) const {
    solve_lanes<1>(rhs, x);
  }

  template <std::size_t L>
  void solve_lanes(std::span<const double> rhs, std::span<double> x) const {
    const std::size_t n = inv_pivot_.size();
    const double* lo = lower_.data();
    const double* cp = c_prime_.data();
    const double* m = inv_pivot_.data();
    const double* r = rhs.data();
    double* y = x.data();
    for (std::size_t l = 0; l < L; ++l) y[l] = r[l] * m[0];
    for (std::size_t j = 1; j < n; ++j) {
      const double a = lo[j];
      const double mj = m[j];
      for (std::size_t l = 0; l < L; ++l) {
        y[j * L + l] = (r[j * L + l] - a * y[(j - 1) * L + l]) * mj;
      }
    }
    for (std::size_t j = n - 1; j-- > 0;) {
      const double c = cp[j];
      for (std::size_t l = 0; l < L; ++l) {
        y[j * L + l] = y[j * L + l] - c * y[(j + 1) * L + l];
      }
    }
  }

 private:
  std::vector<double> lower_;
  std::vector<double> c_prime_;
  std::vector<double> inv_pivot_;
};

}  // namespace heatest
