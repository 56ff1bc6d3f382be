#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spectral_forge {

enum class Errc {
  NonFiniteState,
  EmptyInterval,
  NonPositiveLambda,
  ZeroState,
  XAtOrBelowShift,
  BadDimension,
  OutOfRange,
  BlockTooShort,
  PhaseNotFound,
  ContractViolated,
  DegenerateEnergies,
  EmptySpectrum,
  InconsistentPlan,
  NonNeumannAngles,
  TailNotConverged,
  OutOfDomain,
  ZeroAtJunction,
  GridTooCoarse,
  ConfigInvalid,
  MissingArtifact,
  InvalidArgument,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NonFiniteState: return "NonFiniteState";
    case Errc::EmptyInterval: return "EmptyInterval";
    case Errc::NonPositiveLambda: return "NonPositiveLambda";
    case Errc::ZeroState: return "ZeroState";
    case Errc::XAtOrBelowShift: return "XAtOrBelowShift";
    case Errc::BadDimension: return "BadDimension";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::BlockTooShort: return "BlockTooShort";
    case Errc::PhaseNotFound: return "PhaseNotFound";
    case Errc::ContractViolated: return "ContractViolated";
    case Errc::DegenerateEnergies: return "DegenerateEnergies";
    case Errc::EmptySpectrum: return "EmptySpectrum";
    case Errc::InconsistentPlan: return "InconsistentPlan";
    case Errc::NonNeumannAngles: return "NonNeumannAngles";
    case Errc::TailNotConverged: return "TailNotConverged";
    case Errc::OutOfDomain: return "OutOfDomain";
    case Errc::ZeroAtJunction: return "ZeroAtJunction";
    case Errc::GridTooCoarse: return "GridTooCoarse";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::MissingArtifact: return "MissingArtifact";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace spectral_forge
