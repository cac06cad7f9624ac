#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stem {

enum class Errc {
  InvalidModel,
  InvalidTimeline,
  InvalidArgument,
  UnknownState,
  UnknownEventKind,
  UnknownName,
  EmptyTrace,
  AmbiguousModel,
  RankDeficient,
  TooFewObservations,
  NonPositiveMeasured,
  TooFewSamples,
  InfeasibleSchedule,
  OverlappingBursts,
  Parse,
  Io,
};

std::string_view to_string(Errc code) noexcept;

/// Library-wide exception. what() reads "<Kind>: <message>"; details() carries
/// structured payload such as violation lists or offending column names.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::vector<std::string> details = {});

  Errc code() const noexcept { return code_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  Errc code_;
  std::vector<std::string> details_;
};

}  // namespace stem
