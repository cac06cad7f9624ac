#pragma once

// End-to-end experiments: synthesize ground truth for a sensor forwarder at
// several traffic rates, run the naive and transition-aware estimators, and
// aggregate their percentage errors against the integrated trace.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stem/model.hpp"
#include "stem/trace.hpp"

namespace stem {

struct SweepConfig {
  std::vector<double> rates_pps;
  double duration_s = 0.0;
  double rx_time_per_packet_s = 0.0;
  double tx_time_per_packet_s = 0.0;
  EnergyModel model_truth;
  /// Defaults to model_truth with transitions and events removed.
  std::optional<EnergyModel> model_naive;
  /// rng_seed is the base seed; each run derives its own from (rate, run).
  SynthesisSpec synthesis;
  std::size_t runs_per_rate = 20;
};

struct ErrorPoint {
  double rate_pps = 0.0;
  double err_naive_pct = 0.0;
  double err_naive_lo = 0.0;
  double err_naive_hi = 0.0;
  double err_improved_pct = 0.0;
  double err_improved_lo = 0.0;
  double err_improved_hi = 0.0;
};

struct ErrorCurve {
  std::vector<ErrorPoint> points;
};

/// Throws InvalidArgument for an empty or negative rate list or zero runs;
/// component errors propagate.
void validate_sweep(const SweepConfig& config);

/// Per-run synthesis seed derived from the base seed, the rate's bit pattern
/// and the run index.
std::uint64_t run_seed(std::uint64_t base_seed, double rate_pps, std::size_t run);

/// truth with transitions and events dropped: the classic three-state model.
EnergyModel naive_model_of(const EnergyModel& truth);

/// Mean absolute percentage error per rate with 95% Student-t intervals
/// (zero-width with a single run). Deterministic for a fixed config.
ErrorCurve run_sweep(const SweepConfig& config);

struct ComponentDelta {
  double a = 0.0;
  double b = 0.0;
  double absolute = 0.0;  // |b - a|
  double relative = 0.0;  // |b - a| / max(|a|, |b|), 0 when both are 0
};

struct ReportComparison {
  std::map<std::string, ComponentDelta> per_state;
  std::map<TransitionKey, ComponentDelta> per_transition;
  std::map<std::string, ComponentDelta> per_event;
  ComponentDelta total;
};

/// Union of both reports' keys; a key missing on one side counts as 0 there.
ReportComparison compare_reports(const EnergyReport& a, const EnergyReport& b);

}  // namespace stem
