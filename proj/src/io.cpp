#include "stem/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "stem/error.hpp"

namespace stem::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Non-empty lines, header first.
std::vector<std::vector<std::string>> read_rows(std::istream& in, const std::string& what) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split(line));
  }
  if (rows.empty()) throw Error(Errc::Parse, what + ": missing header");
  return rows;
}

void expect_header(const std::vector<std::string>& header, const std::vector<std::string>& expected,
                   const std::string& what) {
  if (header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw Error(Errc::Parse, what + ": expected header '" + want + "'");
  }
}

void expect_width(const std::vector<std::string>& row, std::size_t width, std::size_t line, const std::string& what) {
  if (row.size() != width)
    throw Error(Errc::Parse, what + " line " + std::to_string(line) + ": expected " + std::to_string(width) + " fields");
}

template <typename F>
auto guarded(const std::string& context, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Parse, context + ": " + e.what());
  }
}

const char* shape_name(TransitionShape s) {
  return s == TransitionShape::LinearRamp ? "linear-ramp" : "rectangular";
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(Errc::InvalidArgument, "cannot format number");
  return std::string(buf, ptr);
}

double parse_number(const std::string& text, const std::string& context) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw Error(Errc::Parse, context + ": '" + text + "' is not a number");
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot open '" + path.string() + "' for writing");
  out << contents;
  if (!out) throw Error(Errc::Io, "failed writing '" + path.string() + "'");
}

Json parse_json(const std::string& text, const std::string& context) {
  return guarded(context, [&] { return Json::parse(text); });
}

Json model_to_json(const EnergyModel& model) {
  Json j;
  j["supply_voltage_v"] = model.supply_voltage_v;
  j["states"] = Json::array();
  for (const auto& s : model.states) j["states"].push_back({{"name", s.name}, {"avg_current_a", s.avg_current_a}});
  j["transitions"] = Json::array();
  for (const auto& t : model.transitions)
    j["transitions"].push_back(
        {{"from", t.from}, {"to", t.to}, {"duration_s", t.duration_s}, {"avg_current_a", t.avg_current_a}});
  j["events"] = Json::array();
  for (const auto& e : model.events) j["events"].push_back({{"kind", e.kind}, {"charge_c", e.charge_c}});
  return j;
}

EnergyModel model_from_json(const Json& j) {
  return guarded("model", [&] {
    EnergyModel m;
    m.supply_voltage_v = j.at("supply_voltage_v").get<double>();
    for (const auto& s : j.at("states"))
      m.states.push_back({s.at("name").get<std::string>(), s.at("avg_current_a").get<double>()});
    if (j.contains("transitions"))
      for (const auto& t : j.at("transitions"))
        m.transitions.push_back({t.at("from").get<std::string>(), t.at("to").get<std::string>(),
                                 t.at("duration_s").get<double>(), t.at("avg_current_a").get<double>()});
    if (j.contains("events"))
      for (const auto& e : j.at("events")) m.events.push_back({e.at("kind").get<std::string>(), e.at("charge_c").get<double>()});
    return m;
  });
}

EnergyModel load_model(const std::filesystem::path& path) {
  return model_from_json(parse_json(read_file(path), path.string()));
}

void write_timeline_csv(std::ostream& out, const Timeline& timeline) {
  out << "state,duration_s\n";
  for (const auto& iv : timeline.intervals) out << iv.state << ',' << format_number(iv.duration_s) << '\n';
}

void write_events_csv(std::ostream& out, const Timeline& timeline) {
  out << "kind,timestamp_s\n";
  for (const auto& ev : timeline.events) out << ev.kind << ',' << format_number(ev.timestamp_s) << '\n';
}

std::vector<StateInterval> read_timeline_csv(std::istream& in) {
  const auto rows = read_rows(in, "timeline csv");
  expect_header(rows[0], {"state", "duration_s"}, "timeline csv");
  std::vector<StateInterval> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    expect_width(rows[i], 2, i + 1, "timeline csv");
    out.push_back({rows[i][0], parse_number(rows[i][1], "timeline csv line " + std::to_string(i + 1))});
  }
  return out;
}

std::vector<TimelineEvent> read_events_csv(std::istream& in) {
  const auto rows = read_rows(in, "events csv");
  expect_header(rows[0], {"kind", "timestamp_s"}, "events csv");
  std::vector<TimelineEvent> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    expect_width(rows[i], 2, i + 1, "events csv");
    out.push_back({rows[i][0], parse_number(rows[i][1], "events csv line " + std::to_string(i + 1))});
  }
  return out;
}

Timeline load_timeline(const std::filesystem::path& intervals, const std::filesystem::path& events) {
  Timeline t;
  std::istringstream iv(read_file(intervals));
  t.intervals = read_timeline_csv(iv);
  if (!events.empty()) {
    std::istringstream ev(read_file(events));
    t.events = read_events_csv(ev);
  }
  return t;
}

void write_trace_csv(std::ostream& out, const CurrentTrace& trace) {
  out << "time_s,current_a\n";
  for (std::size_t i = 0; i < trace.samples_a.size(); ++i)
    out << format_number(static_cast<double>(i) * trace.sample_period_s) << ','
        << format_number(trace.samples_a[i]) << '\n';
}

CurrentTrace read_trace_csv(std::istream& in, double supply_voltage_v) {
  const auto rows = read_rows(in, "trace csv");
  expect_header(rows[0], {"time_s", "current_a"}, "trace csv");
  std::vector<double> times;
  CurrentTrace trace;
  trace.supply_voltage_v = supply_voltage_v;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    expect_width(rows[i], 2, i + 1, "trace csv");
    const std::string ctx = "trace csv line " + std::to_string(i + 1);
    times.push_back(parse_number(rows[i][0], ctx));
    const double current = parse_number(rows[i][1], ctx);
    if (!std::isfinite(current)) throw Error(Errc::Parse, ctx + ": current must be finite");
    trace.samples_a.push_back(current);
  }
  if (times.size() == 1) throw Error(Errc::Parse, "trace csv: at least 2 samples are needed to infer the sample period");
  if (times.size() >= 2) {
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(Errc::Parse, "trace csv: time_s must increase");
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (std::abs((times[i] - times[i - 1]) - dt) > 1e-6 * dt)
        throw Error(Errc::Parse, "trace csv: non-uniform spacing at line " + std::to_string(i + 2));
    }
    trace.sample_period_s = dt;
  }
  return trace;
}

Json sidecar_json(double supply_voltage_v) { return Json{{"supply_voltage_v", supply_voltage_v}}; }

double voltage_from_sidecar(const Json& j) {
  return guarded("sidecar", [&] { return j.at("supply_voltage_v").get<double>(); });
}

void write_observations_csv(std::ostream& out, const std::vector<Observation>& observations) {
  std::set<std::string> states;
  std::set<TransitionKey> transitions;
  std::set<std::string> events;
  for (const auto& o : observations) {
    for (const auto& [k, _] : o.state_times_s) states.insert(k);
    for (const auto& [k, _] : o.transition_counts) transitions.insert(k);
    for (const auto& [k, _] : o.event_counts) events.insert(k);
  }
  std::string header;
  for (const auto& s : states) header += "t_" + s + ",";
  for (const auto& t : transitions) header += "n_" + t.from + "__" + t.to + ",";
  for (const auto& e : events) header += "n_ev_" + e + ",";
  out << header << "energy_j\n";
  for (const auto& o : observations) {
    auto get = [](const auto& map, const auto& key) {
      auto it = map.find(key);
      return it == map.end() ? 0.0 : it->second;
    };
    for (const auto& s : states) out << format_number(get(o.state_times_s, s)) << ',';
    for (const auto& t : transitions) out << format_number(get(o.transition_counts, t)) << ',';
    for (const auto& e : events) out << format_number(get(o.event_counts, e)) << ',';
    out << format_number(o.measured_energy_j) << '\n';
  }
}

std::vector<Observation> read_observations_csv(std::istream& in) {
  const auto rows = read_rows(in, "observations csv");
  const auto& header = rows[0];

  enum class Col { State, Transition, Event, Energy };
  struct Column {
    Col kind;
    std::string name;
    TransitionKey key;
  };
  std::vector<Column> cols;
  bool has_energy = false;
  for (const auto& h : header) {
    if (h == "energy_j") {
      if (has_energy) throw Error(Errc::Parse, "observations csv: duplicate energy_j column");
      has_energy = true;
      cols.push_back({Col::Energy, h, {}});
    } else if (h.starts_with("n_ev_") && h.size() > 5) {
      cols.push_back({Col::Event, h.substr(5), {}});
    } else if (h.starts_with("n_") && h.find("__", 2) != std::string::npos) {
      const auto sep = h.find("__", 2);
      TransitionKey key{h.substr(2, sep - 2), h.substr(sep + 2)};
      if (key.from.empty() || key.to.empty()) throw Error(Errc::Parse, "observations csv: bad column '" + h + "'");
      cols.push_back({Col::Transition, h, key});
    } else if (h.starts_with("t_") && h.size() > 2) {
      cols.push_back({Col::State, h.substr(2), {}});
    } else {
      throw Error(Errc::Parse, "observations csv: unrecognized column '" + h + "'");
    }
  }
  if (!has_energy) throw Error(Errc::Parse, "observations csv: missing energy_j column");

  std::vector<Observation> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    expect_width(rows[i], cols.size(), i + 1, "observations csv");
    Observation o;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double v = parse_number(rows[i][c], "observations csv line " + std::to_string(i + 1));
      switch (cols[c].kind) {
        case Col::State: o.state_times_s[cols[c].name] = v; break;
        case Col::Transition: o.transition_counts[cols[c].key] = v; break;
        case Col::Event: o.event_counts[cols[c].name] = v; break;
        case Col::Energy: o.measured_energy_j = v; break;
      }
    }
    out.push_back(std::move(o));
  }
  return out;
}

Json calibration_to_json(const CalibrationResult& result, const EnergyModel& skeleton) {
  EnergyModel fitted = skeleton;
  for (auto& s : fitted.states) s.avg_current_a = result.state_currents_a.at(s.name);
  Json excess = Json::object();
  for (auto& t : fitted.transitions) {
    const double q = result.transition_charges_c.at({t.from, t.to});
    excess[t.from + "->" + t.to] = q;
    if (t.duration_s > 0.0) t.avg_current_a = result.state_currents_a.at(t.to) + q / t.duration_s;
  }
  for (auto& e : fitted.events) e.charge_c = result.event_charges_c.at(e.kind);

  Json j = model_to_json(fitted);
  j["fit"] = {{"residual_rms_j", result.residual_rms_j},
              {"r_squared", result.r_squared},
              {"transition_excess_charge_c", excess}};
  return j;
}

Json report_to_json(const EnergyReport& report) {
  Json j;
  j["per_state_j"] = Json::object();
  for (const auto& [k, v] : report.per_state_j) j["per_state_j"][k] = v;
  j["per_transition_j"] = Json::object();
  for (const auto& [k, v] : report.per_transition_j) j["per_transition_j"][k.label()] = v;
  j["per_event_j"] = Json::object();
  for (const auto& [k, v] : report.per_event_j) j["per_event_j"][k] = v;
  j["total_j"] = report.total_j;
  return j;
}

EnergyReport report_from_json(const Json& j) {
  return guarded("report", [&] {
    EnergyReport r;
    for (const auto& [k, v] : j.at("per_state_j").items()) r.per_state_j[k] = v.get<double>();
    for (const auto& [k, v] : j.at("per_transition_j").items()) {
      const auto arrow = k.find("->");
      if (arrow == std::string::npos) throw Error(Errc::Parse, "report: bad transition key '" + k + "'");
      r.per_transition_j[{k.substr(0, arrow), k.substr(arrow + 2)}] = v.get<double>();
    }
    for (const auto& [k, v] : j.at("per_event_j").items()) r.per_event_j[k] = v.get<double>();
    r.total_j = j.at("total_j").get<double>();
    return r;
  });
}

Json peaks_to_json(const PeakReport& report) {
  return Json{{"peak_count", report.peak_count},
              {"period_s", report.period_s},
              {"mean_excess_charge_c", report.mean_excess_charge_c}};
}

void write_error_curve_csv(std::ostream& out, const ErrorCurve& curve) {
  out << "rate_pps,err_naive_pct,err_naive_lo,err_naive_hi,err_improved_pct,err_improved_lo,err_improved_hi\n";
  for (const auto& p : curve.points) {
    out << format_number(p.rate_pps) << ',' << format_number(p.err_naive_pct) << ','
        << format_number(p.err_naive_lo) << ',' << format_number(p.err_naive_hi) << ','
        << format_number(p.err_improved_pct) << ',' << format_number(p.err_improved_lo) << ','
        << format_number(p.err_improved_hi) << '\n';
  }
}

ErrorCurve read_error_curve_csv(std::istream& in) {
  const auto rows = read_rows(in, "error curve csv");
  expect_header(rows[0],
                {"rate_pps", "err_naive_pct", "err_naive_lo", "err_naive_hi", "err_improved_pct", "err_improved_lo",
                 "err_improved_hi"},
                "error curve csv");
  ErrorCurve curve;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    expect_width(rows[i], 7, i + 1, "error curve csv");
    const std::string ctx = "error curve csv line " + std::to_string(i + 1);
    double v[7];
    for (int c = 0; c < 7; ++c) v[c] = parse_number(rows[i][static_cast<std::size_t>(c)], ctx);
    curve.points.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6]});
  }
  return curve;
}

SynthesisSpec synthesis_from_json(const Json& j) {
  return guarded("synthesis", [&] {
    SynthesisSpec s;
    s.sample_period_s = j.value("sample_period_s", s.sample_period_s);
    s.noise_stddev_a = j.value("noise_stddev_a", s.noise_stddev_a);
    s.rng_seed = j.value("rng_seed", s.rng_seed);
    const std::string shape = j.value("transition_shape", std::string("rectangular"));
    if (shape == "rectangular")
      s.transition_shape = TransitionShape::Rectangular;
    else if (shape == "linear-ramp")
      s.transition_shape = TransitionShape::LinearRamp;
    else
      throw Error(Errc::Parse, "synthesis: unknown transition_shape '" + shape + "'");
    if (j.contains("event_pulses"))
      for (const auto& [kind, p] : j.at("event_pulses").items())
        s.event_pulses[kind] = {p.at("width_s").get<double>(), p.at("amplitude_a").get<double>()};
    return s;
  });
}

Json synthesis_to_json(const SynthesisSpec& spec) {
  Json j;
  j["sample_period_s"] = spec.sample_period_s;
  j["transition_shape"] = shape_name(spec.transition_shape);
  j["noise_stddev_a"] = spec.noise_stddev_a;
  j["rng_seed"] = spec.rng_seed;
  j["event_pulses"] = Json::object();
  for (const auto& [kind, p] : spec.event_pulses)
    j["event_pulses"][kind] = {{"width_s", p.width_s}, {"amplitude_a", p.amplitude_a}};
  return j;
}

SweepConfig sweep_config_from_json(const Json& j) {
  return guarded("sweep config", [&] {
    SweepConfig c;
    c.rates_pps = j.at("rates_pps").get<std::vector<double>>();
    c.duration_s = j.at("duration_s").get<double>();
    c.rx_time_per_packet_s = j.at("rx_time_per_packet_s").get<double>();
    c.tx_time_per_packet_s = j.at("tx_time_per_packet_s").get<double>();
    c.runs_per_rate = j.value("runs_per_rate", c.runs_per_rate);
    c.model_truth = model_from_json(j.at("model_truth"));
    if (j.contains("model_naive")) c.model_naive = model_from_json(j.at("model_naive"));
    if (j.contains("synthesis")) c.synthesis = synthesis_from_json(j.at("synthesis"));
    return c;
  });
}

Json sweep_config_to_json(const SweepConfig& config) {
  Json j;
  j["rates_pps"] = config.rates_pps;
  j["duration_s"] = config.duration_s;
  j["rx_time_per_packet_s"] = config.rx_time_per_packet_s;
  j["tx_time_per_packet_s"] = config.tx_time_per_packet_s;
  j["runs_per_rate"] = config.runs_per_rate;
  j["model_truth"] = model_to_json(config.model_truth);
  if (config.model_naive) j["model_naive"] = model_to_json(*config.model_naive);
  j["synthesis"] = synthesis_to_json(config.synthesis);
  return j;
}

SensorWorkloadParams sensor_params_from_json(const Json& j) {
  return guarded("sensor workload", [&] {
    SensorWorkloadParams p;
    p.traffic_rate_pps = j.at("traffic_rate_pps").get<double>();
    p.duration_s = j.at("duration_s").get<double>();
    p.rx_time_per_packet_s = j.at("rx_time_per_packet_s").get<double>();
    p.tx_time_per_packet_s = j.at("tx_time_per_packet_s").get<double>();
    p.include_transitions = j.value("include_transitions", p.include_transitions);
    return p;
  });
}

WifiWorkloadParams wifi_params_from_json(const Json& j) {
  return guarded("wifi workload", [&] {
    WifiWorkloadParams p;
    p.disconnected_duration_s = j.value("disconnected_duration_s", p.disconnected_duration_s);
    p.connecting_duration_s = j.at("connecting_duration_s").get<double>();
    p.connected_duration_s = j.at("connected_duration_s").get<double>();
    p.beacon_interval_s = j.value("beacon_interval_s", p.beacon_interval_s);
    p.psm_enabled = j.value("psm_enabled", p.psm_enabled);
    p.psm_wake_slice_s = j.value("psm_wake_slice_s", p.psm_wake_slice_s);
    if (j.contains("traffic_bursts")) {
      for (const auto& b : j.at("traffic_bursts")) {
        TrafficBurst burst;
        burst.start_s = b.at("start_s").get<double>();
        burst.duration_s = b.at("duration_s").get<double>();
        const auto dir = b.at("direction").get<std::string>();
        if (dir == "rx")
          burst.direction = BurstDirection::Rx;
        else if (dir == "tx")
          burst.direction = BurstDirection::Tx;
        else
          throw Error(Errc::Parse, "wifi workload: burst direction must be rx or tx");
        p.traffic_bursts.push_back(burst);
      }
    }
    return p;
  });
}

}  // namespace stem::io
