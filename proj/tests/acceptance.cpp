// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "stem/analysis.hpp"
#include "stem/calibration.hpp"
#include "stem/cli.hpp"
#include "stem/estimators.hpp"
#include "stem/io.hpp"
#include "stem/trace.hpp"
#include "stem/workload.hpp"

using namespace stem;

namespace {

std::string data(const char* name) { return (std::filesystem::path(STEM_DATA_DIR) / name).string(); }

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome oracle_closure() {
  Outcome r;
  test::Rng rng(20240101);
  double worst = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    const EnergyModel m = test::random_model(rng);
    const Timeline t = test::random_timeline(rng, m);
    SynthesisSpec spec;
    spec.sample_period_s = rng.uniform(1e-4, 2e-3);
    spec.transition_shape = rng.coin() ? TransitionShape::Rectangular : TransitionShape::LinearRamp;
    const CurrentTrace trace = synthesize_trace(m, t, spec);
    double i_max = 0.0;
    for (double v : trace.samples_a) i_max = std::max(i_max, std::abs(v));
    const double expected = estimate_with_events(m, t).total_j;
    const double bound = m.supply_voltage_v * i_max * 2.0 * trace.sample_period_s *
                         static_cast<double>(boundary_count(m, t));
    const double gap = std::abs(integrate_energy(trace) - expected);
    // Floating-point slack for cases where the bound itself is zero.
    r.require(gap <= bound + 1e-12 * std::abs(expected), fmt("case %d: |diff| %.3g J > bound %.3g J", iter, gap, bound));
    if (bound > 0.0) worst = std::max(worst, gap / bound);
  }
  if (r.ok) r.detail = fmt("100 cases, worst |diff|/bound = %.3f", worst);
  return r;
}

// ---------------------------------------------------------------------------

Outcome ols_recovery() {
  Outcome r;
  EnergyModel skel;
  skel.supply_voltage_v = 3.0;
  skel.states = {{"sleep", 0.0}, {"idle", 0.0}, {"rx", 0.0}, {"tx", 0.0}};
  skel.transitions = {{"sleep", "idle", 0.0, 0.0}, {"idle", "tx", 0.0, 0.0}};
  skel.events = {{"beacon", 0.0}, {"ack", 0.0}};
  const std::map<std::string, double> current{{"sleep", 0.0005}, {"idle", 0.012}, {"rx", 0.02}, {"tx", 0.028}};
  const std::map<TransitionKey, double> charge{{{"sleep", "idle"}, 4e-5}, {{"idle", "tx"}, -1.5e-5}};
  const std::map<std::string, double> event{{"beacon", 2e-4}, {"ack", 6e-5}};

  auto observations = [&](std::uint64_t seed, double sigma) {
    test::Rng rng(seed);
    std::mt19937_64 gen(seed ^ 0xabcdef);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<Observation> obs;
    for (int k = 0; k < 40; ++k) {
      Observation o;
      double q = 0.0;
      for (const auto& [s, i] : current) q += i * (o.state_times_s[s] = rng.uniform(0.1, 10.0));
      for (const auto& [key, c] : charge) q += c * (o.transition_counts[key] = rng.integer(0, 50));
      for (const auto& [kind, c] : event) q += c * (o.event_counts[kind] = rng.integer(0, 100));
      o.measured_energy_j = skel.supply_voltage_v * q + sigma * noise(gen);
      obs.push_back(o);
    }
    return obs;
  };

  const auto fit = fit_ols(observations(1, 0.0), skel);
  double worst = 0.0;
  auto rel = [&](double got, double want) { worst = std::max(worst, std::abs(got - want) / std::abs(want)); };
  for (const auto& [s, i] : current) rel(fit.state_currents_a.at(s), i);
  for (const auto& [k, q] : charge) rel(fit.transition_charges_c.at(k), q);
  for (const auto& [k, q] : event) rel(fit.event_charges_c.at(k), q);
  r.require(fit.columns.size() == 8, "expected 8 unknowns");
  r.require(worst <= 1e-9, fmt("noise-free worst relative error %.3g", worst));

  const double sigma = 1e-3;
  double lo = 1e300, hi = 0.0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const double rms = fit_ols(observations(seed, sigma), skel).residual_rms_j;
    lo = std::min(lo, rms);
    hi = std::max(hi, rms);
    r.require(rms >= 0.5 * sigma && rms <= 2.0 * sigma, fmt("seed %llu: residual_rms %.3g outside [0.5, 2] sigma",
                                                            static_cast<unsigned long long>(seed), rms));
  }
  if (r.ok) r.detail = fmt("noise-free rel err %.2g; residual_rms/sigma in [%.3f, %.3f] over 20 seeds", worst,
                           lo / sigma, hi / sigma);
  return r;
}

// ---------------------------------------------------------------------------

Outcome demo_sweep_shape() {
  Outcome r;
  const SweepConfig cfg = io::sweep_config_from_json(io::parse_json(io::read_file(data("demo_sweep.json")), "demo"));
  const ErrorCurve curve = run_sweep(cfg);
  r.require(curve.points.size() >= 5, "fewer than 5 rates");

  double i_max = 0.0;
  for (const auto& s : cfg.model_truth.states) i_max = std::max(i_max, s.avg_current_a);
  for (const auto& t : cfg.model_truth.transitions) i_max = std::max(i_max, t.avg_current_a);
  const double u = cfg.model_truth.supply_voltage_v;
  const double dt = cfg.synthesis.sample_period_s;

  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i];
    if (i > 0)
      r.require(p.err_naive_pct >= curve.points[i - 1].err_naive_pct,
                fmt("naive error decreases from %.4g to %.4g at %g pps", curve.points[i - 1].err_naive_pct,
                    p.err_naive_pct, p.rate_pps));

    const Timeline t =
        gen_sensor_workload({p.rate_pps, cfg.duration_s, cfg.rx_time_per_packet_s, cfg.tx_time_per_packet_s, true});
    const double truth_j = test::carved_energy(cfg.model_truth, t);
    const double naive_j = estimate_basic(naive_model_of(cfg.model_truth), t).total_j;
    const double oracle = test::closed_form_naive_error(cfg.model_truth, p.rate_pps, cfg.duration_s,
                                                        cfg.rx_time_per_packet_s, cfg.tx_time_per_packet_s);
    // Discretization bound plus five standard deviations of the integrated noise.
    const double samples = cfg.duration_s / dt;
    const double noise_j = 5.0 * u * cfg.synthesis.noise_stddev_a * dt * std::sqrt(samples);
    const double bound_j = u * i_max * 2.0 * dt * static_cast<double>(boundary_count(cfg.model_truth, t)) + noise_j;
    const double bound_pct = 100.0 * naive_j * bound_j / (truth_j * (truth_j - bound_j));
    r.require(std::abs(p.err_naive_pct - oracle) <= bound_pct,
              fmt("%g pps: naive %.4g%% vs closed form %.4g%% exceeds bound %.3g", p.rate_pps, p.err_naive_pct,
                  oracle, bound_pct));
  }

  const auto& top = curve.points.back();
  r.require(std::abs(top.err_naive_pct - 4.0) <= 1.0, fmt("top-rate naive error %.3f%%", top.err_naive_pct));
  r.require(top.err_improved_pct <= 1.5, fmt("top-rate transition-aware error %.3f%%", top.err_improved_pct));
  if (r.ok) {
    std::string rows;
    for (const auto& p : curve.points) rows += fmt(" %g:%.2f/%.3f", p.rate_pps, p.err_naive_pct, p.err_improved_pct);
    r.detail = "rate:naive%/aware%" + rows;
  }
  return r;
}

// ---------------------------------------------------------------------------

Outcome beacon_periodicity() {
  Outcome r;
  const EnergyModel model = io::load_model(data("wifi_model.json"));
  WifiWorkloadParams p;
  p.connected_duration_s = 5.0;
  p.beacon_interval_s = 0.1;
  p.psm_enabled = true;
  const Timeline t = gen_wifi_psm_workload(p);
  SynthesisSpec spec;
  spec.sample_period_s = 1e-3;
  const PeakReport peaks = detect_periodic_peaks(synthesize_trace(model, t, spec), 0.05, 0.05);
  r.require(peaks.peak_count == 50, fmt("peak_count %zu", peaks.peak_count));
  r.require(std::abs(peaks.period_s - 0.1) <= 0.001, fmt("period %.5f s", peaks.period_s));
  if (r.ok) r.detail = fmt("peak_count %zu, period %.5f s", peaks.peak_count, peaks.period_s);
  return r;
}

// ---------------------------------------------------------------------------

Outcome segmentation_round_trip() {
  Outcome r;
  test::Rng rng(555);
  double worst = 0.0;
  for (int iter = 0; iter < 50; ++iter) {
    const double gap = rng.uniform(0.005, 0.02);
    EnergyModel m;
    m.supply_voltage_v = rng.uniform(1.0, 5.0);
    const int n = rng.integer(2, 4);
    double level = rng.uniform(1.2, 2.0) * gap;
    for (int i = 0; i < n; ++i) {
      m.states.push_back({"s" + std::to_string(i), level});
      level += rng.uniform(1.0, 2.0) * gap;
    }
    const double lowest = m.states.front().avg_current_a;
    const double highest = m.states.back().avg_current_a;
    if (iter % 2 == 1) {
      // One transition whose plateau is a dip below or a spike above every state.
      const bool dip = rng.coin();
      m.transitions.push_back({"s0", "s" + std::to_string(n - 1), rng.uniform(0.01, 0.05),
                               dip ? lowest - rng.uniform(1.0, 1.2) * gap : highest + rng.uniform(1.0, 2.0) * gap});
    }

    Timeline t;
    const int k = rng.integer(2, 12);
    int prev = -1;
    for (int i = 0; i < k; ++i) {
      int s = rng.integer(0, n - 1);
      if (s == prev) s = (s + 1) % n;
      t.intervals.push_back({m.states[static_cast<std::size_t>(s)].name, rng.uniform(0.1, 0.4)});
      prev = s;
    }

    SynthesisSpec spec;
    spec.sample_period_s = 1e-3;
    spec.noise_stddev_a = 0.1 * gap;
    spec.rng_seed = static_cast<std::uint64_t>(iter) + 1;
    const CurrentTrace trace = synthesize_trace(m, t, spec);
    const Timeline out = segment_trace(trace, m, 0.2 * gap, 5 * spec.sample_period_s);

    std::map<std::string, double> want, got;
    for (const auto& iv : t.intervals) want[iv.state] += iv.duration_s;
    for (const auto& iv : out.intervals) got[iv.state] += iv.duration_s;
    const double tol = 2.0 * static_cast<double>(boundary_count(m, t)) * trace.sample_period_s;
    for (const auto& s : m.states) {
      const double diff = std::abs(want[s.name] - got[s.name]);
      worst = std::max(worst, diff / tol);
      r.require(diff <= tol, fmt("trace %d state %s: |dT| %.4g s > %.4g s", iter, s.name.c_str(), diff, tol));
    }
  }
  if (r.ok) r.detail = fmt("50 traces, worst |dT|/tolerance = %.3f", worst);
  return r;
}

// ---------------------------------------------------------------------------

Outcome psm_saving() {
  Outcome r;
  test::Rng rng(777);
  for (int iter = 0; iter < 100; ++iter) {
    EnergyModel m;
    m.supply_voltage_v = rng.uniform(1.0, 5.0);
    const double idle = rng.uniform(0.01, 0.3);
    const double sleep = rng.uniform(0.0, 0.95 * idle);
    m.states = {{"disconnected", rng.uniform(0.0, 0.3)}, {"idle", idle}, {"sleep", sleep},
                {"rx", rng.uniform(0.0, 0.4)}, {"tx", rng.uniform(0.0, 0.4)}};
    m.events = {{"beacon", rng.uniform(0.0, 1e-3)}};
    if (iter % 2 == 1) {
      // Sleep/idle switches that cost no more than staying idle.
      m.transitions = {{"sleep", "idle", rng.uniform(0.0, 0.004), rng.uniform(0.0, idle)},
                       {"idle", "sleep", rng.uniform(0.0, 0.004), rng.uniform(0.0, idle)}};
    }

    WifiWorkloadParams p;
    p.disconnected_duration_s = rng.uniform(0.0, 1.0);
    p.connecting_duration_s = rng.uniform(0.0, 0.5);
    p.connected_duration_s = rng.uniform(0.5, 5.0);
    p.beacon_interval_s = rng.uniform(0.05, 0.2);
    double cursor = 0.0;
    while (rng.coin(0.6)) {
      const double start = cursor + rng.uniform(0.0, 0.5);
      const double len = rng.uniform(0.001, 0.2);
      if (start + len > p.connected_duration_s) break;
      p.traffic_bursts.push_back({start, len, rng.coin() ? BurstDirection::Rx : BurstDirection::Tx});
      cursor = start + len;
    }
    p.psm_enabled = false;
    const double off = estimate_with_events(m, gen_wifi_psm_workload(p)).total_j;
    p.psm_enabled = true;
    const double on = estimate_with_events(m, gen_wifi_psm_workload(p)).total_j;
    r.require(on < off, fmt("case %d: psm on %.6g J >= off %.6g J", iter, on, off));
  }
  if (r.ok) r.detail = "100 cases";
  return r;
}

// ---------------------------------------------------------------------------

Outcome ci_correctness() {
  Outcome r;
  const double t_crit = test::t_quantile(0.975, 19.0);
  std::mt19937_64 gen(3);
  double worst = 0.0;
  for (int fixture = 0; fixture < 10; ++fixture) {
    std::normal_distribution<double> dist(fixture * 1.5, 0.1 + fixture);
    std::vector<double> x(20);
    for (double& v : x) v = dist(gen);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= 20.0;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double half = t_crit * std::sqrt(ss / 19.0) / std::sqrt(20.0);
    const auto ci = confidence_interval(x, 0.95);
    const double diff = std::max(std::abs(ci.low - (mean - half)), std::abs(ci.high - (mean + half)));
    worst = std::max(worst, diff);
    r.require(diff <= 1e-6, fmt("fixture %d: bound differs by %.3g", fixture, diff));
  }
  if (r.ok) r.detail = fmt("10 fixtures, t(0.975, 19) = %.6f, worst |diff| = %.2g", t_crit, worst);
  return r;
}

// ---------------------------------------------------------------------------

Outcome sweep_determinism() {
  Outcome r;
  auto once = [] {
    std::ostringstream out, err;
    const int code = cli::run({"sweep", "--config", data("demo_sweep.json")}, out, err);
    return std::make_pair(code, out.str());
  };
  const auto a = once();
  const auto b = once();
  r.require(a.first == 0 && b.first == 0, "sweep command failed");
  r.require(!a.second.empty(), "empty sweep output");
  r.require(a.second == b.second, "sweep outputs differ");
  if (r.ok) r.detail = fmt("%zu bytes identical", a.second.size());
  return r;
}

struct Criterion {
  const char* name;
  std::function<Outcome()> check;
  double limit_s;  // 0: no runtime requirement
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"oracle closure", oracle_closure, 10.0},
      {"OLS recovery", ols_recovery, 5.0},
      {"demo sweep error shape", demo_sweep_shape, 30.0},
      {"beacon periodicity", beacon_periodicity, 0.0},
      {"segmentation round-trip", segmentation_round_trip, 0.0},
      {"PSM saving", psm_saving, 0.0},
      {"CI correctness", ci_correctness, 0.0},
      {"sweep determinism", sweep_determinism, 0.0},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0.0 && secs >= c.limit_s) o.require(false, fmt("runtime %.2f s exceeds %.0f s", secs, c.limit_s));
    if (!o.ok) ++failures;
    std::printf("%s [%zu] %s (%.2f s): %s\n", o.ok ? "PASS" : "FAIL", i + 1, c.name, secs, o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
