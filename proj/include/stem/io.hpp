#pragma once

// File formats. JSON goes through nlohmann::json; CSVs are plain
// comma-separated with a header row and no quoting. Numbers are written in
// shortest round-trip form so write-then-read is the identity.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "stem/analysis.hpp"
#include "stem/calibration.hpp"
#include "stem/model.hpp"
#include "stem/trace.hpp"
#include "stem/workload.hpp"

namespace stem::io {

using Json = nlohmann::ordered_json;

std::string format_number(double v);
double parse_number(const std::string& text, const std::string& context);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);
Json parse_json(const std::string& text, const std::string& context);

// EnergyModel: {supply_voltage_v, states[{name, avg_current_a}],
// transitions[{from, to, duration_s, avg_current_a}], events[{kind, charge_c}]}
Json model_to_json(const EnergyModel& model);
EnergyModel model_from_json(const Json& j);
EnergyModel load_model(const std::filesystem::path& path);

// Timeline CSV `state,duration_s`; events CSV `kind,timestamp_s`.
void write_timeline_csv(std::ostream& out, const Timeline& timeline);
void write_events_csv(std::ostream& out, const Timeline& timeline);
std::vector<StateInterval> read_timeline_csv(std::istream& in);
std::vector<TimelineEvent> read_events_csv(std::istream& in);
Timeline load_timeline(const std::filesystem::path& intervals, const std::filesystem::path& events = {});

// Trace CSV `time_s,current_a`, uniformly spaced within 1e-6 relative jitter.
// The supply voltage travels separately (flag or sidecar JSON).
void write_trace_csv(std::ostream& out, const CurrentTrace& trace);
CurrentTrace read_trace_csv(std::istream& in, double supply_voltage_v);
Json sidecar_json(double supply_voltage_v);
double voltage_from_sidecar(const Json& j);

// Observations CSV: t_<state>, n_<from>__<to>, n_ev_<kind>, energy_j.
void write_observations_csv(std::ostream& out, const std::vector<Observation>& observations);
std::vector<Observation> read_observations_csv(std::istream& in);

/// Skeleton with fitted values substituted, plus
/// fit{residual_rms_j, r_squared, transition_excess_charge_c}. A transition
/// of duration d gets avg_current_a = I_destination + q / d; zero-duration
/// transitions keep the skeleton current and appear only in the fit block.
Json calibration_to_json(const CalibrationResult& result, const EnergyModel& skeleton);

Json report_to_json(const EnergyReport& report);
EnergyReport report_from_json(const Json& j);

Json peaks_to_json(const PeakReport& report);

// ErrorCurve CSV
// rate_pps,err_naive_pct,err_naive_lo,err_naive_hi,err_improved_pct,err_improved_lo,err_improved_hi
void write_error_curve_csv(std::ostream& out, const ErrorCurve& curve);
ErrorCurve read_error_curve_csv(std::istream& in);

SynthesisSpec synthesis_from_json(const Json& j);
Json synthesis_to_json(const SynthesisSpec& spec);
SweepConfig sweep_config_from_json(const Json& j);
Json sweep_config_to_json(const SweepConfig& config);

SensorWorkloadParams sensor_params_from_json(const Json& j);
WifiWorkloadParams wifi_params_from_json(const Json& j);

}  // namespace stem::io
