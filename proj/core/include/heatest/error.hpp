#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heatest {

enum class ErrorKind {
  InvalidInput,
  GridTooCoarse,
  SolverBreakdown,
  SupportViolation,
  ResolutionTooCoarse,
  DomainTooSmall,
  BandwidthTooSmall,
  WeightInfeasible,
  DegenerateInformation,
  DiagnosticsUnavailable,
  CLTInapplicable,
  DivergentConstant,
  ConvergenceFailure,
  Io,
  Config,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base class for every error raised by the library. The kind lets callers
/// branch without catching a dozen exception types.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define HEATEST_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  }

HEATEST_DEFINE_ERROR(InvalidInput, InvalidInput);
HEATEST_DEFINE_ERROR(GridTooCoarse, GridTooCoarse);
HEATEST_DEFINE_ERROR(SolverBreakdown, SolverBreakdown);
HEATEST_DEFINE_ERROR(SupportViolation, SupportViolation);
HEATEST_DEFINE_ERROR(ResolutionTooCoarse, ResolutionTooCoarse);
HEATEST_DEFINE_ERROR(DomainTooSmall, DomainTooSmall);
HEATEST_DEFINE_ERROR(BandwidthTooSmall, BandwidthTooSmall);
HEATEST_DEFINE_ERROR(WeightInfeasible, WeightInfeasible);
HEATEST_DEFINE_ERROR(DegenerateInformation, DegenerateInformation);
HEATEST_DEFINE_ERROR(DiagnosticsUnavailable, DiagnosticsUnavailable);
HEATEST_DEFINE_ERROR(CLTInapplicable, CLTInapplicable);
HEATEST_DEFINE_ERROR(DivergentConstant, DivergentConstant);
HEATEST_DEFINE_ERROR(ConvergenceFailure, ConvergenceFailure);
HEATEST_DEFINE_ERROR(IoError, Io);
HEATEST_DEFINE_ERROR(ConfigError, Config);

#undef HEATEST_DEFINE_ERROR

}  // namespace heatest
