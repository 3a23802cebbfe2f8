#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tensens {

enum class ErrorCode {
  InvalidParameter,
  OutOfSupport,
  NonFinite,
  DimensionTooLarge,
  DomainError,
  DegreeExceeded,
  SizeOverflow,
  RankDeficient,
  UnderDetermined,
  EmptySet,
  ZeroVariance,
  LeverageOne,
  FitFailure,
  NumericalBreakdown,
  NoFeasibleModel,
  NonDecreasingGuard,
  CollinearRankOneTerms,
  AllRanksFailed,
  NegativeVariance,
  SubsetTooLarge,
  ModelFailure,
  ZeroRankVariance,
  SingularStiffness,
  EigenFailure,
  UnreadableModel,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. `stage` names the pipeline step that failed
/// (e.g. "lra.correction_step"), and grows as the error propagates.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string stage = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Returns a copy with `outer` prepended to the stage path.
  Error within(std::string_view outer) const;

 private:
  ErrorCode code_;
  std::string stage_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, std::string message, std::string stage = {});

}  // namespace tensens
