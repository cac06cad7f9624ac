#include "stem/analysis.hpp"

#include <bit>
#include <cmath>

#include "stem/calibration.hpp"
#include "stem/error.hpp"
#include "stem/estimators.hpp"
#include "stem/workload.hpp"

namespace stem {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

ComponentDelta delta_of(double a, double b) {
  ComponentDelta d{a, b, std::abs(b - a), 0.0};
  const double scale = std::max(std::abs(a), std::abs(b));
  d.relative = scale > 0.0 ? d.absolute / scale : 0.0;
  return d;
}

template <typename Key>
std::map<Key, ComponentDelta> diff_maps(const std::map<Key, double>& a, const std::map<Key, double>& b) {
  std::map<Key, ComponentDelta> out;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    out[k] = delta_of(v, it == b.end() ? 0.0 : it->second);
  }
  for (const auto& [k, v] : b)
    if (!a.contains(k)) out[k] = delta_of(0.0, v);
  return out;
}

struct Summary {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

Summary summarize(const std::vector<double>& errors) {
  const double mean = mean_of(errors);
  if (errors.size() < 2) return {mean, mean, mean};
  const auto ci = confidence_interval(errors, 0.95);
  return {mean, ci.low, ci.high};
}

}  // namespace

void validate_sweep(const SweepConfig& config) {
  if (config.rates_pps.empty()) throw Error(Errc::InvalidArgument, "sweep needs at least one rate");
  for (double r : config.rates_pps)
    if (!std::isfinite(r) || r < 0.0) throw Error(Errc::InvalidArgument, "sweep rates must be finite and >= 0");
  if (config.runs_per_rate < 1) throw Error(Errc::InvalidArgument, "runs_per_rate must be >= 1");
  require_valid(config.model_truth);
  if (config.model_naive) require_valid(*config.model_naive);
}

std::uint64_t run_seed(std::uint64_t base_seed, double rate_pps, std::size_t run) {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ std::bit_cast<std::uint64_t>(rate_pps));
  return splitmix64(h ^ static_cast<std::uint64_t>(run));
}

EnergyModel naive_model_of(const EnergyModel& truth) {
  EnergyModel naive = truth;
  naive.transitions.clear();
  naive.events.clear();
  return naive;
}

ErrorCurve run_sweep(const SweepConfig& config) {
  validate_sweep(config);
  const EnergyModel naive = config.model_naive.value_or(naive_model_of(config.model_truth));

  ErrorCurve curve;
  for (double rate : config.rates_pps) {
    SensorWorkloadParams params;
    params.traffic_rate_pps = rate;
    params.duration_s = config.duration_s;
    params.rx_time_per_packet_s = config.rx_time_per_packet_s;
    params.tx_time_per_packet_s = config.tx_time_per_packet_s;
    const Timeline timeline = gen_sensor_workload(params);

    const double naive_j = estimate_basic(naive, timeline).total_j;
    const double improved_j = estimate_with_events(config.model_truth, timeline).total_j;

    std::vector<double> naive_err;
    std::vector<double> improved_err;
    for (std::size_t run = 0; run < config.runs_per_rate; ++run) {
      SynthesisSpec spec = config.synthesis;
      spec.rng_seed = run_seed(config.synthesis.rng_seed, rate, run);
      const double measured = integrate_energy(synthesize_trace(config.model_truth, timeline, spec));
      naive_err.push_back(estimation_error(naive_j, measured));
      improved_err.push_back(estimation_error(improved_j, measured));
    }

    const Summary n = summarize(naive_err);
    const Summary i = summarize(improved_err);
    curve.points.push_back({rate, n.mean, n.lo, n.hi, i.mean, i.lo, i.hi});
  }
  return curve;
}

ReportComparison compare_reports(const EnergyReport& a, const EnergyReport& b) {
  ReportComparison cmp;
  cmp.per_state = diff_maps(a.per_state_j, b.per_state_j);
  cmp.per_transition = diff_maps(a.per_transition_j, b.per_transition_j);
  cmp.per_event = diff_maps(a.per_event_j, b.per_event_j);
  cmp.total = delta_of(a.total_j, b.total_j);
  return cmp;
}

}  // namespace stem
