#include "tensens/error.hpp"

namespace tensens {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::OutOfSupport: return "OutOfSupport";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DegreeExceeded: return "DegreeExceeded";
    case ErrorCode::SizeOverflow: return "SizeOverflow";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::UnderDetermined: return "UnderDetermined";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::LeverageOne: return "LeverageOne";
    case ErrorCode::FitFailure: return "FitFailure";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::NoFeasibleModel: return "NoFeasibleModel";
    case ErrorCode::NonDecreasingGuard: return "NonDecreasingGuard";
    case ErrorCode::CollinearRankOneTerms: return "CollinearRankOneTerms";
    case ErrorCode::AllRanksFailed: return "AllRanksFailed";
    case ErrorCode::NegativeVariance: return "NegativeVariance";
    case ErrorCode::SubsetTooLarge: return "SubsetTooLarge";
    case ErrorCode::ModelFailure: return "ModelFailure";
    case ErrorCode::ZeroRankVariance: return "ZeroRankVariance";
    case ErrorCode::SingularStiffness: return "SingularStiffness";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::UnreadableModel: return "UnreadableModel";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& stage, const std::string& message) {
  std::string out(to_string(code));
  if (!stage.empty()) out += " [" + stage + "]";
  out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, std::string message, std::string stage)
    : std::runtime_error(compose(code, stage, message)),
      code_(code),
      stage_(std::move(stage)),
      detail_(std::move(message)) {}

Error Error::within(std::string_view outer) const {
  std::string path(outer);
  if (!stage_.empty()) path += "/" + stage_;
  return Error(code_, detail_, std::move(path));
}

void fail(ErrorCode code, std::string message, std::string stage) {
  throw Error(code, std::move(message), std::move(stage));
}

}  // namespace tensens
