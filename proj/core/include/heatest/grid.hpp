#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace heatest {

/// Uniform discretization of [0, T) x (0, 1).
///
/// Spatial state vectors hold the nx - 1 interior nodes x_j = j * dx,
/// j = 1..nx-1; the Dirichlet endpoints are implicit zeros. Time rows are
/// t_i = i * dt for i = 0..nt, row 0 being the initial condition.
class SpaceTimeGrid {
 public:
  SpaceTimeGrid(double T, std::size_t nt, std::size_t nx);

  double T() const noexcept { return T_; }
  std::size_t nt() const noexcept { return nt_; }
  std::size_t nx() const noexcept { return nx_; }
  double dt() const noexcept { return dt_; }
  double dx() const noexcept { return dx_; }

  /// Number of interior spatial nodes (nx - 1).
  std::size_t n_interior() const noexcept { return nx_ - 1; }
  /// Number of stored time rows (nt + 1).
  std::size_t n_rows() const noexcept { return nt_ + 1; }

  /// Coordinate of interior node with storage index `idx` (0-based).
  double node(std::size_t idx) const noexcept {
    return static_cast<double>(idx + 1) * dx_;
  }
  double time(std::size_t row) const noexcept {
    return static_cast<double>(row) * dt_;
  }

  bool operator==(const SpaceTimeGrid&) const = default;

 private:
  double T_;
  std::size_t nt_;
  std::size_t nx_;
  double dt_;
  double dx_;
};

/// Values of a spatial function at the interior nodes of a grid.
class ScalarField1D {
 public:
  ScalarField1D(const SpaceTimeGrid& grid, std::vector<double> values);

  const SpaceTimeGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  SpaceTimeGrid grid_;
  std::vector<double> values_;
};

/// Dense row-major matrix [time row][interior node].
class SpaceTimeField {
 public:
  SpaceTimeField() = default;
  SpaceTimeField(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> row(std::size_t i) noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  double& operator()(std::size_t i, std::size_t j) noexcept {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * cols_ + j];
  }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// values[j-1] = f(j * dx); throws InvalidInput on a non-finite value.
ScalarField1D sample_field(const std::function<double(double)>& f,
                           const SpaceTimeGrid& grid);

}  // namespace heatest
