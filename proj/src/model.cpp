#include "stem/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "stem/error.hpp"

namespace stem {

namespace {

bool finite_non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += "; ";
    out += item;
  }
  return out;
}

}  // namespace

const PowerState* EnergyModel::find_state(std::string_view name) const {
  auto it = std::find_if(states.begin(), states.end(),
                         [&](const PowerState& s) { return s.name == name; });
  return it == states.end() ? nullptr : &*it;
}

const TransitionSpec* EnergyModel::find_transition(std::string_view from,
                                                   std::string_view to) const {
  auto it = std::find_if(transitions.begin(), transitions.end(), [&](const TransitionSpec& t) {
    return t.from == from && t.to == to;
  });
  return it == transitions.end() ? nullptr : &*it;
}

const EventSpec* EnergyModel::find_event(std::string_view kind) const {
  auto it = std::find_if(events.begin(), events.end(),
                         [&](const EventSpec& e) { return e.kind == kind; });
  return it == events.end() ? nullptr : &*it;
}

std::vector<std::string> validate_model(const EnergyModel& model) {
  std::vector<std::string> violations;

  if (!std::isfinite(model.supply_voltage_v) || model.supply_voltage_v <= 0.0)
    violations.push_back("supply_voltage_v must be finite and > 0");
  if (model.states.empty()) violations.push_back("model has no states");

  std::set<std::string> state_names;
  for (const auto& s : model.states) {
    if (s.name.empty()) violations.push_back("state with empty name");
    if (!state_names.insert(s.name).second)
      violations.push_back("duplicate state name '" + s.name + "'");
    if (!finite_non_negative(s.avg_current_a))
      violations.push_back("state '" + s.name + "' avg_current_a must be finite and >= 0");
  }

  std::set<TransitionKey> pairs;
  for (const auto& t : model.transitions) {
    const std::string label = t.from + "->" + t.to;
    if (t.from == t.to) violations.push_back("transition " + label + " has from == to");
    if (!state_names.contains(t.from))
      violations.push_back("transition " + label + " references undefined state '" + t.from + "'");
    if (!state_names.contains(t.to))
      violations.push_back("transition " + label + " references undefined state '" + t.to + "'");
    if (!finite_non_negative(t.duration_s))
      violations.push_back("transition " + label + " duration_s must be finite and >= 0");
    if (!finite_non_negative(t.avg_current_a))
      violations.push_back("transition " + label + " avg_current_a must be finite and >= 0");
    if (!pairs.insert({t.from, t.to}).second)
      violations.push_back("duplicate transition " + label);
  }

  std::set<std::string> kinds;
  for (const auto& e : model.events) {
    if (e.kind.empty()) violations.push_back("event with empty kind");
    if (!kinds.insert(e.kind).second) violations.push_back("duplicate event kind '" + e.kind + "'");
    if (!finite_non_negative(e.charge_c))
      violations.push_back("event '" + e.kind + "' charge_c must be finite and >= 0");
  }
  return violations;
}

void require_valid(const EnergyModel& model) {
  auto violations = validate_model(model);
  if (!violations.empty()) throw Error(Errc::InvalidModel, join(violations), violations);
}

double Timeline::total_duration() const {
  double total = 0.0;
  for (const auto& iv : intervals) total += iv.duration_s;
  return total;
}

std::vector<std::string> validate_timeline(const Timeline& timeline) {
  std::vector<std::string> violations;
  for (std::size_t i = 0; i < timeline.intervals.size(); ++i) {
    if (!finite_non_negative(timeline.intervals[i].duration_s))
      violations.push_back("interval " + std::to_string(i) + " duration_s must be finite and >= 0");
  }
  const double total = timeline.total_duration();
  const double slack = 1e-9 * std::max(1.0, total);
  for (std::size_t i = 0; i < timeline.events.size(); ++i) {
    const double ts = timeline.events[i].timestamp_s;
    if (!std::isfinite(ts) || ts < -slack || ts > total + slack)
      violations.push_back("event " + std::to_string(i) + " timestamp outside [0, total_duration]");
    if (i > 0 && ts < timeline.events[i - 1].timestamp_s)
      violations.push_back("event " + std::to_string(i) + " is out of timestamp order");
  }
  return violations;
}

double EnergyReport::component_sum() const {
  double sum = 0.0;
  for (const auto& [_, e] : per_state_j) sum += e;
  for (const auto& [_, e] : per_transition_j) sum += e;
  for (const auto& [_, e] : per_event_j) sum += e;
  return sum;
}

std::vector<Segment> resolve_segments(const EnergyModel& model, const Timeline& timeline,
                                      bool carve_transitions) {
  if (auto violations = validate_timeline(timeline); !violations.empty())
    throw Error(Errc::InvalidTimeline, join(violations), violations);

  std::vector<Segment> segments;
  segments.reserve(timeline.intervals.size() * 2);
  double t = 0.0;
  const PowerState* prev = nullptr;
  for (const auto& iv : timeline.intervals) {
    const PowerState* state = model.find_state(iv.state);
    if (state == nullptr) throw Error(Errc::UnknownState, "timeline names unknown state '" + iv.state + "'");

    double carved = 0.0;
    if (carve_transitions && prev != nullptr && prev->name != state->name) {
      if (const TransitionSpec* spec = model.find_transition(prev->name, state->name)) {
        carved = std::min(spec->duration_s, iv.duration_s);
        Segment seg;
        seg.kind = Segment::Kind::Transition;
        seg.start_s = t;
        seg.duration_s = carved;
        seg.current_a = spec->avg_current_a;
        seg.state = state->name;
        seg.transition = TransitionKey{spec->from, spec->to};
        segments.push_back(std::move(seg));
      }
    }
    Segment seg;
    seg.start_s = t + carved;
    seg.duration_s = iv.duration_s - carved;
    seg.current_a = state->avg_current_a;
    seg.state = state->name;
    segments.push_back(std::move(seg));

    t += iv.duration_s;
    prev = state;
  }
  return segments;
}

}  // namespace stem
