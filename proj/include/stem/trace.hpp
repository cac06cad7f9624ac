#pragma once

// Ground-truth side: sampled current traces, their integration, synthesis from
// a model + timeline, segmentation back into a timeline, and peak analysis.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stem/model.hpp"

namespace stem {

/// Uniformly sampled current; sample i is taken at i * sample_period_s.
struct CurrentTrace {
  double sample_period_s = 0.0;
  std::vector<double> samples_a;
  double supply_voltage_v = 0.0;

  double duration_s() const {
    return samples_a.empty() ? 0.0 : sample_period_s * static_cast<double>(samples_a.size() - 1);
  }
};

enum class TransitionShape { Rectangular, LinearRamp };

struct EventPulse {
  double width_s = 0.0;
  double amplitude_a = 0.0;
};

struct SynthesisSpec {
  double sample_period_s = 1e-3;
  TransitionShape transition_shape = TransitionShape::Rectangular;
  double noise_stddev_a = 0.0;
  /// Pulse per event kind. Kinds without an entry get a rectangular pulse
  /// of default_pulse_samples periods carrying the model's event charge.
  std::map<std::string, EventPulse> event_pulses;
  std::uint64_t rng_seed = 0;
};

inline constexpr int default_pulse_samples = 4;

/// Supply voltage times the trapezoidal integral of current. Throws EmptyTrace.
double integrate_energy(const CurrentTrace& trace);

/// Renders the timeline as a sampled waveform.
///
/// The sample grid is stretched so the last sample lands exactly on the
/// timeline end: the effective period is total / round(total / requested).
/// A boundary at time t starts at sample ceil(t / period), so a boundary
/// within 1e-9 of a grid point snaps onto it.
///
/// Linear-ramp transitions run from the source state's current to a midpoint
/// vertex and on to the destination's current, with the vertex placed so the
/// segment mean equals the transition's avg_current_a (the vertex may dip
/// below zero for deep dips). Event pulses start at the event timestamp and
/// are shifted left when they would overrun the end of the trace.
///
/// Throws UnknownState, UnknownEventKind, InvalidModel, InvalidTimeline,
/// InvalidArgument (bad spec values).
CurrentTrace synthesize_trace(const EnergyModel& model, const Timeline& timeline,
                              const SynthesisSpec& spec);

/// Number of seams the synthesizer introduces: one between each pair of
/// consecutive non-empty resolved segments, plus two edges per event pulse.
std::size_t boundary_count(const EnergyModel& model, const Timeline& timeline);

/// One labeled run recovered from a trace.
struct TraceRun {
  double start_s = 0.0;
  double duration_s = 0.0;
  double mean_current_a = 0.0;
  std::string state;  // destination state when transition is set
  std::optional<TransitionKey> transition;
};

/// Nearest-level labeling with hysteresis over the model's state currents
/// (plus transition currents that sit more than 2*hysteresis from every state
/// level), then merging of runs shorter than min_dwell_s into the neighbor
/// whose level is closest to the run mean. A run between states p and q is
/// reported as transition p->q when the model has that spec and the run
/// mean is closer to its current than to either state.
///
/// Run edges sit halfway between samples; durations sum to the trace
/// duration. Throws AmbiguousModel, EmptyTrace, InvalidArgument.
std::vector<TraceRun> segment_runs(const CurrentTrace& trace, const EnergyModel& model,
                                   double hysteresis_a, double min_dwell_s);

/// segment_runs folded into a state timeline: each transition run is given
/// back to the head of its destination interval, mirroring how the
/// transition-aware estimator carves it out again.
Timeline segment_trace(const CurrentTrace& trace, const EnergyModel& model, double hysteresis_a,
                       double min_dwell_s);

struct PeakReport {
  std::size_t peak_count = 0;
  double period_s = 0.0;  // median spacing of peak onsets; 0 with fewer than 2 peaks
  double mean_excess_charge_c = 0.0;
  std::vector<double> onset_times_s;
};

/// Peaks are maximal runs of samples above a centered rolling-median baseline
/// plus threshold_a. Excess charge of a peak is the sum of (sample - baseline)
/// times the sample period over the run. Throws EmptyTrace, InvalidArgument
/// (window shorter than 10 sample periods).
PeakReport detect_periodic_peaks(const CurrentTrace& trace, double baseline_window_s,
                                 double threshold_a);

}  // namespace stem
