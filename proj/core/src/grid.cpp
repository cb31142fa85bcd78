#include "heatest/grid.hpp"

#include <cmath>
#include <string>

#include "heatest/error.hpp"

namespace heatest {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::SolverBreakdown: return "SolverBreakdown";
    case ErrorKind::SupportViolation: return "SupportViolation";
    case ErrorKind::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorKind::DomainTooSmall: return "DomainTooSmall";
    case ErrorKind::BandwidthTooSmall: return "BandwidthTooSmall";
    case ErrorKind::WeightInfeasible: return "WeightInfeasible";
    case ErrorKind::DegenerateInformation: return "DegenerateInformation";
    case ErrorKind::DiagnosticsUnavailable: return "DiagnosticsUnavailable";
    case ErrorKind::CLTInapplicable: return "CLTInapplicable";
    case ErrorKind::DivergentConstant: return "DivergentConstant";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

SpaceTimeGrid::SpaceTimeGrid(double T, std::size_t nt, std::size_t nx)
    : T_(T), nt_(nt), nx_(nx) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw InvalidInput("grid: T must be positive and finite");
  }
  if (nt == 0 || nx < 2) {
    throw InvalidInput("grid: need nt >= 1 and nx >= 2");
  }
  dt_ = T / static_cast<double>(nt);
  dx_ = 1.0 / static_cast<double>(nx);
}

ScalarField1D::ScalarField1D(const SpaceTimeGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.n_interior()) {
    throw InvalidInput("field length " + std::to_string(values_.size()) +
                       " does not match nx - 1 = " +
                       std::to_string(grid_.n_interior()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidInput("field contains non-finite value");
  }
}

ScalarField1D sample_field(const std::function<double(double)>& f,
                           const SpaceTimeGrid& grid) {
  std::vector<double> values(grid.n_interior());
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double x = grid.node(j);
    const double v = f(x);
    if (!std::isfinite(v)) {
      throw InvalidInput("sample_field: non-finite value at x = " + std::to_string(x));
    }
    values[j] = v;
  }
  return ScalarField1D(grid, std::move(values));
}

}  // namespace heatest
