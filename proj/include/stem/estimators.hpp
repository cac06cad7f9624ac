#pragma once

#include "stem/model.hpp"

namespace stem {

/// Classic state-based estimate: E = sum over states of T_i * I_i * U.
/// Transitions are instantaneous and events are ignored.
EnergyReport estimate_basic(const EnergyModel& model, const Timeline& timeline);

/// Like estimate_basic, but every state change with a TransitionSpec charges
/// the carved head of the destination interval at the transition current.
/// State changes without a spec stay instantaneous.
EnergyReport estimate_with_transitions(const EnergyModel& model, const Timeline& timeline);

/// estimate_with_transitions plus U * charge * count for each event kind.
/// Throws UnknownEventKind for events the model does not describe.
EnergyReport estimate_with_events(const EnergyModel& model, const Timeline& timeline);

}  // namespace stem
