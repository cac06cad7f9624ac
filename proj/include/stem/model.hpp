#pragma once

// Energy model and timeline value types shared by every other module.
//
// Units are SI throughout: amperes, volts, seconds, coulombs, joules.

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stem {

struct PowerState {
  std::string name;
  double avg_current_a = 0.0;
};

/// Finite-duration switch between two states. The current applies for
/// duration_s, carved from the head of the destination interval.
struct TransitionSpec {
  std::string from;
  std::string to;
  double duration_s = 0.0;
  double avg_current_a = 0.0;
};

/// Fixed excess charge added above the enclosing state's baseline each time
/// an event of this kind occurs (beacon reception, packet, ...).
struct EventSpec {
  std::string kind;
  double charge_c = 0.0;
};

struct TransitionKey {
  std::string from;
  std::string to;

  auto operator<=>(const TransitionKey&) const = default;

  /// "from->to"
  std::string label() const { return from + "->" + to; }
};

struct EnergyModel {
  double supply_voltage_v = 0.0;
  std::vector<PowerState> states;
  std::vector<TransitionSpec> transitions;
  std::vector<EventSpec> events;

  const PowerState* find_state(std::string_view name) const;
  const TransitionSpec* find_transition(std::string_view from, std::string_view to) const;
  const EventSpec* find_event(std::string_view kind) const;
};

/// Every invariant violation in the model, one message each. Empty means valid.
std::vector<std::string> validate_model(const EnergyModel& model);

/// Throws Error(InvalidModel) carrying the violations if the model is invalid.
void require_valid(const EnergyModel& model);

struct StateInterval {
  std::string state;
  double duration_s = 0.0;
};

struct TimelineEvent {
  std::string kind;
  double timestamp_s = 0.0;
};

/// Logged state residency plus discrete events. Consecutive intervals in
/// different states imply a state change at their seam.
struct Timeline {
  std::vector<StateInterval> intervals;
  std::vector<TimelineEvent> events;

  double total_duration() const;
};

/// Structural violations only (negative durations, unsorted or out-of-range
/// events). Name resolution against a model is the estimators' job.
std::vector<std::string> validate_timeline(const Timeline& timeline);

struct EnergyReport {
  std::map<std::string, double> per_state_j;
  std::map<TransitionKey, double> per_transition_j;
  std::map<std::string, double> per_event_j;
  double total_j = 0.0;

  /// Sum of every breakdown entry.
  double component_sum() const;
};

/// A contiguous piece of the waveform implied by a model and a timeline:
/// either steady state residency or a carved transition.
struct Segment {
  enum class Kind { State, Transition };

  Kind kind = Kind::State;
  double start_s = 0.0;
  double duration_s = 0.0;
  double current_a = 0.0;
  std::string state;  // destination state for transitions
  std::optional<TransitionKey> transition;
};

/// Lays the timeline out in time. With carve_transitions, each state change
/// that has a TransitionSpec takes min(duration, destination interval) from
/// the head of the destination interval. Zero-length pieces are kept so
/// callers can count them. Throws UnknownState.
std::vector<Segment> resolve_segments(const EnergyModel& model, const Timeline& timeline,
                                      bool carve_transitions);

}  // namespace stem
