#pragma once

// Least-squares calibration of state currents and transition/event charges
// from aggregate per-run observations, plus the error statistics used to
// judge estimators against measurements.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stem/model.hpp"

namespace stem {

/// Aggregate activity of one measured run. Counts are non-negative and
/// normally integral; they are stored as doubles because they enter the
/// design matrix directly.
struct Observation {
  std::map<std::string, double> state_times_s;
  std::map<TransitionKey, double> transition_counts;
  std::map<std::string, double> event_counts;
  double measured_energy_j = 0.0;
};

/// Residency times, state-change counts and event counts of a timeline.
/// Every change between different states is counted, whether or not the
/// model has a spec for it. measured_energy_j is left at 0.
Observation observe(const Timeline& timeline);

struct CalibrationResult {
  std::map<std::string, double> state_currents_a;
  /// Excess charge per occurrence on top of the logged state residency.
  /// Cheap transitions fit negative.
  std::map<TransitionKey, double> transition_charges_c;
  std::map<std::string, double> event_charges_c;
  double residual_rms_j = 0.0;
  /// Uncentered R^2 = 1 - RSS / sum(e^2); the fit has no intercept.
  double r_squared = 0.0;

  /// Design-matrix column names (t_<state>, n_<from>__<to>, n_ev_<kind>) and
  /// the matching coefficient standard errors, sqrt(s^2 (A^T A)^-1)_jj with
  /// s^2 = RSS / (m - p). Standard errors are 0 when m == p.
  std::vector<std::string> columns;
  std::vector<double> std_errors;
};

/// Column names for a skeleton, in coefficient order: states, transitions,
/// events, each in model order.
std::vector<std::string> design_columns(const EnergyModel& skeleton);

/// Solves min ||A x - e||_2 by Householder QR, where row k of A is
/// U * [T_k(states)..., C_k(transitions)..., C_k(events)...] and e_k is the
/// measured energy. No intercept. Transition counts for pairs the skeleton
/// has no spec for are ignored, as the estimators treat those changes as
/// instantaneous.
///
/// Throws TooFewObservations (fewer rows than unknowns), RankDeficient (the
/// details list every column involved in a linear dependency, including
/// all-zero columns), UnknownName, InvalidArgument, InvalidModel.
CalibrationResult fit_ols(const std::vector<Observation>& observations, const EnergyModel& skeleton);

/// U * (sum T_s I_s + sum C_tr q_tr + sum C_ev q_ev). Throws UnknownName for
/// states or event kinds the fit does not cover; unfitted transitions add 0.
double predict(const CalibrationResult& result, const Observation& obs, double supply_voltage_v);

/// 100 * |estimated - measured| / measured. Throws NonPositiveMeasured.
double estimation_error(double estimated_j, double measured_j);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
};

/// Student-t interval mean +- t_{(1+level)/2, n-1} * s / sqrt(n).
/// Throws TooFewSamples (n < 2), InvalidArgument (level outside (0, 1)).
ConfidenceInterval confidence_interval(const std::vector<double>& samples, double level = 0.95);

double mean_of(const std::vector<double>& samples);

}  // namespace stem
