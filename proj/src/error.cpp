#include "stem/error.hpp"

#include <utility>

namespace stem {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidModel: return "InvalidModel";
    case Errc::InvalidTimeline: return "InvalidTimeline";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::UnknownState: return "UnknownState";
    case Errc::UnknownEventKind: return "UnknownEventKind";
    case Errc::UnknownName: return "UnknownName";
    case Errc::EmptyTrace: return "EmptyTrace";
    case Errc::AmbiguousModel: return "AmbiguousModel";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::TooFewObservations: return "TooFewObservations";
    case Errc::NonPositiveMeasured: return "NonPositiveMeasured";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::InfeasibleSchedule: return "InfeasibleSchedule";
    case Errc::OverlappingBursts: return "OverlappingBursts";
    case Errc::Parse: return "Parse";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message, std::vector<std::string> details)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      details_(std::move(details)) {}

}  // namespace stem
