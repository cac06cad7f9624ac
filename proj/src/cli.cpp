#include "stem/cli.hpp"

#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "stem/analysis.hpp"
#include "stem/calibration.hpp"
#include "stem/error.hpp"
#include "stem/estimators.hpp"
#include "stem/io.hpp"
#include "stem/trace.hpp"
#include "stem/workload.hpp"

namespace stem::cli {

namespace {

struct Options {
  std::string model;
  std::string timeline;
  std::string events;
  std::string trace;
  std::string out;
  std::string sidecar;
  std::string config;
  std::string observations;
  std::string sensor;
  std::string wifi;
  std::string events_out;
  std::string mode = "events";
  std::string shape = "rectangular";
  std::optional<double> voltage;
  std::uint64_t seed = 0;
  double noise = 0.0;
  double rate_hz = 1000.0;
  double hysteresis = 0.0;
  double min_dwell = 0.0;
  double baseline_window = 0.05;
  double threshold = 0.0;
};

void emit(const Options& o, std::ostream& out, const std::string& contents) {
  if (o.out.empty())
    out << contents;
  else
    io::write_file(o.out, contents);
}

std::string dump(const io::Json& j) { return j.dump(2) + "\n"; }

double resolve_voltage(const Options& o, double fallback) {
  if (o.voltage) return *o.voltage;
  if (!o.sidecar.empty()) return io::voltage_from_sidecar(io::parse_json(io::read_file(o.sidecar), o.sidecar));
  return fallback;
}

CurrentTrace load_trace(const Options& o, double voltage) {
  std::istringstream in(io::read_file(o.trace));
  return io::read_trace_csv(in, voltage);
}

std::string cmd_estimate(const Options& o) {
  const EnergyModel model = io::load_model(o.model);
  const Timeline timeline = io::load_timeline(o.timeline, o.events);
  EnergyReport report;
  if (o.mode == "basic")
    report = estimate_basic(model, timeline);
  else if (o.mode == "transitions")
    report = estimate_with_transitions(model, timeline);
  else
    report = estimate_with_events(model, timeline);
  return dump(io::report_to_json(report));
}

std::string cmd_calibrate(const Options& o) {
  std::istringstream in(io::read_file(o.observations));
  const auto observations = io::read_observations_csv(in);
  const EnergyModel skeleton = io::load_model(o.model);
  return dump(io::calibration_to_json(fit_ols(observations, skeleton), skeleton));
}

std::string cmd_segment(const Options& o) {
  const EnergyModel model = io::load_model(o.model);
  const CurrentTrace trace = load_trace(o, resolve_voltage(o, model.supply_voltage_v));
  std::ostringstream ss;
  io::write_timeline_csv(ss, segment_trace(trace, model, o.hysteresis, o.min_dwell));
  return ss.str();
}

std::string cmd_peaks(const Options& o) {
  const CurrentTrace trace = load_trace(o, resolve_voltage(o, 0.0));
  return dump(io::peaks_to_json(detect_periodic_peaks(trace, o.baseline_window, o.threshold)));
}

std::string cmd_integrate(const Options& o) {
  if (!o.voltage && o.sidecar.empty())
    throw Error(Errc::InvalidArgument, "integrate needs --voltage or --sidecar");
  const CurrentTrace trace = load_trace(o, resolve_voltage(o, 0.0));
  return dump(io::Json{{"energy_j", integrate_energy(trace)}});
}

std::string cmd_synth(const Options& o) {
  if (!(o.rate_hz > 0.0)) throw Error(Errc::InvalidArgument, "--rate must be > 0");
  const EnergyModel model = io::load_model(o.model);
  const Timeline timeline = io::load_timeline(o.timeline, o.events);
  SynthesisSpec spec;
  spec.sample_period_s = 1.0 / o.rate_hz;
  spec.noise_stddev_a = o.noise;
  spec.rng_seed = o.seed;
  spec.transition_shape = o.shape == "linear-ramp" ? TransitionShape::LinearRamp : TransitionShape::Rectangular;
  const CurrentTrace trace = synthesize_trace(model, timeline, spec);
  if (!o.sidecar.empty()) io::write_file(o.sidecar, dump(io::sidecar_json(trace.supply_voltage_v)));
  std::ostringstream ss;
  io::write_trace_csv(ss, trace);
  return ss.str();
}

std::string cmd_sweep(const Options& o) {
  const SweepConfig config = io::sweep_config_from_json(io::parse_json(io::read_file(o.config), o.config));
  std::ostringstream ss;
  io::write_error_curve_csv(ss, run_sweep(config));
  return ss.str();
}

std::string cmd_workload(const Options& o) {
  Timeline timeline;
  if (!o.sensor.empty())
    timeline = gen_sensor_workload(io::sensor_params_from_json(io::parse_json(io::read_file(o.sensor), o.sensor)));
  else
    timeline = gen_wifi_psm_workload(io::wifi_params_from_json(io::parse_json(io::read_file(o.wifi), o.wifi)));
  if (!o.events_out.empty()) {
    std::ostringstream ev;
    io::write_events_csv(ev, timeline);
    io::write_file(o.events_out, ev.str());
  }
  std::ostringstream ss;
  io::write_timeline_csv(ss, timeline);
  return ss.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"State-based transceiver energy modeling: estimate, calibrate, synthesize and analyze", "stem"};
  app.require_subcommand(1);
  Options o;

  auto add_model = [&](CLI::App* sub) { return sub->add_option("--model", o.model, "EnergyModel JSON")->required(); };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", o.out, "Write output here instead of stdout"); };
  auto add_voltage = [&](CLI::App* sub) {
    auto* v = sub->add_option("--voltage", o.voltage, "Supply voltage in volts");
    sub->add_option("--sidecar", o.sidecar, "JSON sidecar carrying supply_voltage_v")->excludes(v);
  };

  auto* estimate = app.add_subcommand("estimate", "Estimate energy of a timeline (EnergyReport JSON)");
  add_model(estimate);
  estimate->add_option("--timeline", o.timeline, "Timeline CSV (state,duration_s)")->required();
  estimate->add_option("--events", o.events, "Events CSV (kind,timestamp_s)");
  estimate->add_option("--mode", o.mode, "basic | transitions | events")
      ->check(CLI::IsMember({"basic", "transitions", "events"}));
  add_out(estimate);

  auto* calibrate = app.add_subcommand("calibrate", "Fit currents and charges by least squares (model JSON)");
  calibrate->add_option("--observations", o.observations, "Observations CSV")->required();
  add_model(calibrate)->description("Skeleton EnergyModel JSON");
  add_out(calibrate);

  auto* segment = app.add_subcommand("segment", "Recover a timeline from a current trace (timeline CSV)");
  segment->add_option("--trace", o.trace, "Trace CSV (time_s,current_a)")->required();
  add_model(segment);
  segment->add_option("--hysteresis", o.hysteresis, "Label hysteresis in amperes");
  segment->add_option("--min-dwell", o.min_dwell, "Minimum run length in seconds");
  add_voltage(segment);
  add_out(segment);

  auto* peaks = app.add_subcommand("peaks", "Detect periodic current peaks (PeakReport JSON)");
  peaks->add_option("--trace", o.trace, "Trace CSV (time_s,current_a)")->required();
  peaks->add_option("--baseline-window", o.baseline_window, "Rolling-median window in seconds");
  peaks->add_option("--threshold", o.threshold, "Excess over baseline in amperes")->required();
  add_voltage(peaks);
  add_out(peaks);

  auto* integrate = app.add_subcommand("integrate", "Trapezoidal energy of a trace (JSON)");
  integrate->add_option("--trace", o.trace, "Trace CSV (time_s,current_a)")->required();
  add_voltage(integrate);
  add_out(integrate);

  auto* synth = app.add_subcommand("synth", "Synthesize a ground-truth current trace (trace CSV)");
  add_model(synth);
  synth->add_option("--timeline", o.timeline, "Timeline CSV (state,duration_s)")->required();
  synth->add_option("--events", o.events, "Events CSV (kind,timestamp_s)");
  synth->add_option("--seed", o.seed, "Noise generator seed");
  synth->add_option("--noise", o.noise, "Gaussian noise stddev in amperes");
  synth->add_option("--rate", o.rate_hz, "Sample rate in Hz");
  synth->add_option("--shape", o.shape, "rectangular | linear-ramp")
      ->check(CLI::IsMember({"rectangular", "linear-ramp"}));
  synth->add_option("--sidecar", o.sidecar, "Also write the supply-voltage sidecar JSON here");
  add_out(synth);

  auto* sweep = app.add_subcommand("sweep", "Run an error-vs-traffic-rate sweep (ErrorCurve CSV)");
  sweep->add_option("--config", o.config, "Sweep config JSON")->required();
  add_out(sweep);

  auto* workload = app.add_subcommand("workload", "Generate a synthetic timeline (timeline CSV)");
  auto* sensor_opt = workload->add_option("--sensor", o.sensor, "Sensor forwarder params JSON");
  auto* wifi_opt = workload->add_option("--wifi", o.wifi, "802.11 PSM params JSON");
  sensor_opt->excludes(wifi_opt);
  workload->add_option("--events-out", o.events_out, "Write the events CSV here");
  add_out(workload);

  auto* validate = app.add_subcommand("validate", "Check a model's invariants");
  add_model(validate);

  std::vector<const char*> argv{"stem"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (*workload && o.sensor.empty() && o.wifi.empty())
      throw CLI::RequiredError("workload needs --sensor or --wifi");
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*validate) {
      const auto violations = validate_model(io::load_model(o.model));
      out << dump(io::Json{{"ok", violations.empty()}, {"violations", violations}});
      return violations.empty() ? kExitOk : kExitValidation;
    }
    std::string result;
    if (*estimate) result = cmd_estimate(o);
    else if (*calibrate) result = cmd_calibrate(o);
    else if (*segment) result = cmd_segment(o);
    else if (*peaks) result = cmd_peaks(o);
    else if (*integrate) result = cmd_integrate(o);
    else if (*synth) result = cmd_synth(o);
    else if (*sweep) result = cmd_sweep(o);
    else if (*workload) result = cmd_workload(o);
    emit(o, out, result);
    return kExitOk;
  } catch (const Error& e) {
    err << "stem: " << e.what() << '\n';
    return e.code() == Errc::Io ? kExitIo : kExitValidation;
  } catch (const std::exception& e) {
    err << "stem: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace stem::cli
