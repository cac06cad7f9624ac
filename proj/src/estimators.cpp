#include "stem/estimators.hpp"

#include <map>

#include "stem/error.hpp"

namespace stem {

namespace {

EnergyReport state_and_transition_report(const EnergyModel& model, const Timeline& timeline,
                                         bool carve) {
  require_valid(model);
  const auto segments = resolve_segments(model, timeline, carve);

  // Accumulate residency first so each entry is U * I * T_total.
  std::map<std::string, double> state_time;
  std::map<TransitionKey, double> transition_time;
  for (const auto& seg : segments) {
    if (seg.kind == Segment::Kind::Transition)
      transition_time[*seg.transition] += seg.duration_s;
    else
      state_time[seg.state] += seg.duration_s;
  }

  const double u = model.supply_voltage_v;
  EnergyReport report;
  for (const auto& [name, seconds] : state_time)
    report.per_state_j[name] = u * (model.find_state(name)->avg_current_a * seconds);
  for (const auto& [key, seconds] : transition_time)
    report.per_transition_j[key] =
        u * (model.find_transition(key.from, key.to)->avg_current_a * seconds);
  report.total_j = report.component_sum();
  return report;
}

}  // namespace

EnergyReport estimate_basic(const EnergyModel& model, const Timeline& timeline) {
  return state_and_transition_report(model, timeline, false);
}

EnergyReport estimate_with_transitions(const EnergyModel& model, const Timeline& timeline) {
  return state_and_transition_report(model, timeline, true);
}

EnergyReport estimate_with_events(const EnergyModel& model, const Timeline& timeline) {
  EnergyReport report = state_and_transition_report(model, timeline, true);

  std::map<std::string, std::size_t> counts;
  for (const auto& ev : timeline.events) {
    if (model.find_event(ev.kind) == nullptr)
      throw Error(Errc::UnknownEventKind, "timeline names unknown event kind '" + ev.kind + "'");
    ++counts[ev.kind];
  }
  const double u = model.supply_voltage_v;
  for (const auto& [kind, n] : counts)
    report.per_event_j[kind] = u * (model.find_event(kind)->charge_c * static_cast<double>(n));
  report.total_j = report.component_sum();
  return report;
}

}  // namespace stem
