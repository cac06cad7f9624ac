#include "stem/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "stem/error.hpp"

namespace stem {

namespace {

constexpr double kGridSnap = 1e-9;

bool finite_non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

void check_spec(const SynthesisSpec& spec) {
  if (!std::isfinite(spec.sample_period_s) || spec.sample_period_s <= 0.0)
    throw Error(Errc::InvalidArgument, "sample_period_s must be finite and > 0");
  if (!finite_non_negative(spec.noise_stddev_a))
    throw Error(Errc::InvalidArgument, "noise_stddev_a must be finite and >= 0");
  for (const auto& [kind, pulse] : spec.event_pulses) {
    if (!finite_non_negative(pulse.width_s) || !finite_non_negative(pulse.amplitude_a))
      throw Error(Errc::InvalidArgument, "event pulse for '" + kind + "' must have finite, non-negative width and amplitude");
  }
}

double median_of(std::vector<double>& buf) {
  const std::size_t n = buf.size();
  const auto mid = buf.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(buf.begin(), mid, buf.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(buf.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

double integrate_energy(const CurrentTrace& trace) {
  if (trace.samples_a.empty()) throw Error(Errc::EmptyTrace, "cannot integrate an empty trace");
  const auto& x = trace.samples_a;
  double sum = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) sum += 0.5 * (x[i - 1] + x[i]);
  return trace.supply_voltage_v * sum * trace.sample_period_s;
}

CurrentTrace synthesize_trace(const EnergyModel& model, const Timeline& timeline,
                              const SynthesisSpec& spec) {
  require_valid(model);
  check_spec(spec);
  const auto segments = resolve_segments(model, timeline, true);
  for (const auto& ev : timeline.events) {
    if (model.find_event(ev.kind) == nullptr)
      throw Error(Errc::UnknownEventKind, "timeline names unknown event kind '" + ev.kind + "'");
  }

  const double total = timeline.total_duration();
  const std::size_t intervals =
      total > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(total / spec.sample_period_s)))
                  : 0;
  const double dt = intervals > 0 ? total / static_cast<double>(intervals) : spec.sample_period_s;

  CurrentTrace trace;
  trace.sample_period_s = dt;
  trace.supply_voltage_v = model.supply_voltage_v;
  trace.samples_a.assign(intervals + 1, 0.0);
  auto& samples = trace.samples_a;

  auto first_index = [&](double t) {
    const double x = std::ceil(t / dt - kGridSnap);
    return static_cast<std::size_t>(std::clamp(x, 0.0, static_cast<double>(intervals + 1)));
  };

  auto value_at = [&](const Segment& seg, double t) {
    if (seg.kind != Segment::Kind::Transition || spec.transition_shape == TransitionShape::Rectangular ||
        seg.duration_s <= 0.0)
      return seg.current_a;
    const double from = model.find_state(seg.transition->from)->avg_current_a;
    const double to = model.find_state(seg.transition->to)->avg_current_a;
    const double vertex = 2.0 * seg.current_a - 0.5 * (from + to);
    const double u = std::clamp((t - seg.start_s) / seg.duration_s, 0.0, 1.0);
    if (u < 0.5) return from + (vertex - from) * 2.0 * u;
    return vertex + (to - vertex) * (2.0 * u - 1.0);
  };

  const Segment* last_filled = nullptr;
  for (const auto& seg : segments) {
    if (seg.duration_s <= 0.0) continue;
    const std::size_t begin = first_index(seg.start_s);
    const std::size_t end = std::min(first_index(seg.start_s + seg.duration_s), intervals + 1);
    for (std::size_t i = begin; i < end; ++i) samples[i] = value_at(seg, static_cast<double>(i) * dt);
    last_filled = &seg;
  }
  if (last_filled != nullptr)
    samples[intervals] = value_at(*last_filled, total);
  else if (!segments.empty())
    std::fill(samples.begin(), samples.end(), segments.back().current_a);

  for (const auto& ev : timeline.events) {
    EventPulse pulse;
    if (auto it = spec.event_pulses.find(ev.kind); it != spec.event_pulses.end()) {
      pulse = it->second;
    } else {
      pulse.width_s = default_pulse_samples * dt;
      pulse.amplitude_a = model.find_event(ev.kind)->charge_c / pulse.width_s;
    }
    if (pulse.width_s <= 0.0 || pulse.amplitude_a == 0.0) continue;
    const double start = std::max(0.0, std::min(ev.timestamp_s, total - pulse.width_s));
    const std::size_t begin = first_index(start);
    const std::size_t end = std::min(first_index(start + pulse.width_s), intervals + 1);
    for (std::size_t i = begin; i < end; ++i) samples[i] += pulse.amplitude_a;
  }

  if (spec.noise_stddev_a > 0.0) {
    std::mt19937_64 rng(spec.rng_seed);
    std::normal_distribution<double> noise(0.0, spec.noise_stddev_a);
    for (auto& s : samples) s += noise(rng);
  }
  return trace;
}

std::size_t boundary_count(const EnergyModel& model, const Timeline& timeline) {
  const auto segments = resolve_segments(model, timeline, true);
  std::size_t non_empty = 0;
  for (const auto& seg : segments)
    if (seg.duration_s > 0.0) ++non_empty;
  const std::size_t seams = non_empty > 0 ? non_empty - 1 : 0;
  return seams + 2 * timeline.events.size();
}

namespace {

struct Level {
  double current_a = 0.0;
  const PowerState* state = nullptr;  // null for transition levels
};

struct Run {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t level = 0;
  double sum = 0.0;
  std::string state;
  std::optional<TransitionKey> transition;

  double mean() const { return sum / static_cast<double>(end - begin); }
};

}  // namespace

std::vector<TraceRun> segment_runs(const CurrentTrace& trace, const EnergyModel& model,
                                   double hysteresis_a, double min_dwell_s) {
  if (trace.samples_a.empty()) throw Error(Errc::EmptyTrace, "cannot segment an empty trace");
  if (!std::isfinite(trace.sample_period_s) || trace.sample_period_s <= 0.0)
    throw Error(Errc::InvalidArgument, "trace sample_period_s must be finite and > 0");
  if (!finite_non_negative(hysteresis_a) || !finite_non_negative(min_dwell_s))
    throw Error(Errc::InvalidArgument, "hysteresis and min_dwell must be finite and >= 0");
  require_valid(model);

  std::vector<const PowerState*> by_current;
  for (const auto& s : model.states) by_current.push_back(&s);
  std::sort(by_current.begin(), by_current.end(),
            [](const PowerState* a, const PowerState* b) { return a->avg_current_a < b->avg_current_a; });
  for (std::size_t i = 1; i < by_current.size(); ++i) {
    if (by_current[i]->avg_current_a - by_current[i - 1]->avg_current_a <= 2.0 * hysteresis_a)
      throw Error(Errc::AmbiguousModel, "states '" + by_current[i - 1]->name + "' and '" + by_current[i]->name +
                                            "' are not separated by more than 2x hysteresis");
  }

  std::vector<Level> levels;
  for (const auto& s : model.states) levels.push_back({s.avg_current_a, &s});
  for (const auto& t : model.transitions) {
    bool separable = true;
    for (const auto& lv : levels) {
      const double gap = std::abs(lv.current_a - t.avg_current_a);
      if ((lv.state != nullptr && gap <= 2.0 * hysteresis_a) || (lv.state == nullptr && gap == 0.0))
        separable = false;
    }
    if (separable) levels.push_back({t.avg_current_a, nullptr});
  }

  const auto& x = trace.samples_a;
  const std::size_t n = x.size();
  const double dt = trace.sample_period_s;
  const double duration = trace.duration_s();

  auto nearest = [&](double v) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < levels.size(); ++j)
      if (std::abs(v - levels[j].current_a) < std::abs(v - levels[best].current_a)) best = j;
    return best;
  };
  // Run edges sit halfway between samples, clipped to the trace span.
  auto edge = [&](std::size_t i) {
    if (i == 0) return 0.0;
    if (i >= n) return duration;
    return std::min(duration, (static_cast<double>(i) - 0.5) * dt);
  };

  std::vector<Run> runs;
  std::size_t current = nearest(x[0]);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t candidate = nearest(x[i]);
    if (candidate != current &&
        std::abs(x[i] - levels[current].current_a) - std::abs(x[i] - levels[candidate].current_a) > hysteresis_a)
      current = candidate;
    if (runs.empty() || runs.back().level != current) runs.push_back({i, i, current, 0.0, {}, {}});
    runs.back().end = i + 1;
    runs.back().sum += x[i];
  }

  auto run_duration = [&](const Run& r) { return edge(r.end) - edge(r.begin); };
  auto absorb = [](Run& into, const Run& from) {
    into.begin = std::min(into.begin, from.begin);
    into.end = std::max(into.end, from.end);
    into.sum += from.sum;
  };
  auto coalesce = [&](auto same) {
    std::vector<Run> out;
    for (auto& r : runs) {
      if (!out.empty() && same(out.back(), r))
        absorb(out.back(), r);
      else
        out.push_back(std::move(r));
    }
    runs = std::move(out);
  };

  // Dwell filter: fold the shortest too-short run into its closer neighbor
  // until every run satisfies min_dwell.
  while (runs.size() > 1) {
    std::size_t shortest = runs.size();
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (run_duration(runs[i]) < min_dwell_s &&
          (shortest == runs.size() || run_duration(runs[i]) < run_duration(runs[shortest])))
        shortest = i;
    }
    if (shortest == runs.size()) break;
    const double mean = runs[shortest].mean();
    std::size_t target;
    if (shortest == 0) {
      target = 1;
    } else if (shortest + 1 == runs.size()) {
      target = shortest - 1;
    } else {
      const double d_prev = std::abs(mean - levels[runs[shortest - 1].level].current_a);
      const double d_next = std::abs(mean - levels[runs[shortest + 1].level].current_a);
      target = d_prev <= d_next ? shortest - 1 : shortest + 1;
    }
    absorb(runs[target], runs[shortest]);
    runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(shortest));
    coalesce([](const Run& a, const Run& b) { return a.level == b.level; });
  }

  for (auto& r : runs)
    if (levels[r.level].state != nullptr) r.state = levels[r.level].state->name;

  // Resolve transition-level runs (and short state runs that look like a
  // transition plateau) against the states on either side.
  for (std::size_t i = 0; i < runs.size(); ++i) {
    Run& r = runs[i];
    const PowerState* prev =
        (i > 0 && !runs[i - 1].state.empty() && !runs[i - 1].transition) ? model.find_state(runs[i - 1].state) : nullptr;
    const PowerState* next = (i + 1 < runs.size() && levels[runs[i + 1].level].state != nullptr)
                                 ? levels[runs[i + 1].level].state
                                 : nullptr;
    const double mean = r.mean();
    const bool transition_level = levels[r.level].state == nullptr;

    const TransitionSpec* spec =
        (prev != nullptr && next != nullptr) ? model.find_transition(prev->name, next->name) : nullptr;
    bool is_transition = false;
    if (spec != nullptr) {
      const double to_spec = std::abs(mean - spec->avg_current_a);
      const bool closer = to_spec < std::abs(mean - prev->avg_current_a) &&
                          to_spec < std::abs(mean - next->avg_current_a);
      const bool plateau_sized = run_duration(r) <= spec->duration_s + 2.0 * dt;
      is_transition = closer && (transition_level || (plateau_sized && r.state != prev->name &&
                                                      r.state != next->name));
    }
    if (is_transition) {
      r.transition = TransitionKey{spec->from, spec->to};
      r.state = spec->to;
    } else if (transition_level) {
      const PowerState* pick = nullptr;
      for (const PowerState* cand : {prev, next}) {
        if (cand != nullptr &&
            (pick == nullptr || std::abs(mean - cand->avg_current_a) < std::abs(mean - pick->avg_current_a)))
          pick = cand;
      }
      if (pick == nullptr) {
        for (const auto& s : model.states)
          if (pick == nullptr || std::abs(mean - s.avg_current_a) < std::abs(mean - pick->avg_current_a)) pick = &s;
      }
      r.state = pick->name;
    }
  }
  coalesce([](const Run& a, const Run& b) { return !a.transition && !b.transition && a.state == b.state; });

  std::vector<TraceRun> out;
  out.reserve(runs.size());
  for (const auto& r : runs)
    out.push_back({edge(r.begin), run_duration(r), r.mean(), r.state, r.transition});
  return out;
}

Timeline segment_trace(const CurrentTrace& trace, const EnergyModel& model, double hysteresis_a,
                       double min_dwell_s) {
  Timeline timeline;
  double carry = 0.0;
  for (const auto& run : segment_runs(trace, model, hysteresis_a, min_dwell_s)) {
    if (run.transition) {
      carry += run.duration_s;
      continue;
    }
    if (!timeline.intervals.empty() && timeline.intervals.back().state == run.state)
      timeline.intervals.back().duration_s += carry + run.duration_s;
    else
      timeline.intervals.push_back({run.state, carry + run.duration_s});
    carry = 0.0;
  }
  if (carry > 0.0 && !timeline.intervals.empty()) timeline.intervals.back().duration_s += carry;
  return timeline;
}

PeakReport detect_periodic_peaks(const CurrentTrace& trace, double baseline_window_s, double threshold_a) {
  if (trace.samples_a.empty()) throw Error(Errc::EmptyTrace, "cannot analyze an empty trace");
  const double dt = trace.sample_period_s;
  if (!std::isfinite(dt) || dt <= 0.0)
    throw Error(Errc::InvalidArgument, "trace sample_period_s must be finite and > 0");
  if (!std::isfinite(baseline_window_s) || baseline_window_s < 10.0 * dt * (1.0 - 1e-9))
    throw Error(Errc::InvalidArgument, "baseline_window must be at least 10 sample periods");
  if (!std::isfinite(threshold_a)) throw Error(Errc::InvalidArgument, "threshold must be finite");

  const auto& x = trace.samples_a;
  const std::size_t n = x.size();
  const auto half = static_cast<std::size_t>(std::llround(baseline_window_s / dt)) / 2;

  std::vector<double> baseline(n);
  std::vector<double> window;
  window.reserve(2 * half + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    window.assign(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(hi));
    baseline[i] = median_of(window);
  }

  PeakReport report;
  double charge_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    if (x[i] <= baseline[i] + threshold_a) {
      ++i;
      continue;
    }
    const std::size_t onset = i;
    double excess = 0.0;
    for (; i < n && x[i] > baseline[i] + threshold_a; ++i) excess += (x[i] - baseline[i]) * dt;
    report.onset_times_s.push_back(static_cast<double>(onset) * dt);
    charge_sum += excess;
  }

  report.peak_count = report.onset_times_s.size();
  if (report.peak_count > 0) report.mean_excess_charge_c = charge_sum / static_cast<double>(report.peak_count);
  if (report.peak_count >= 2) {
    std::vector<double> spacing;
    for (std::size_t k = 1; k < report.onset_times_s.size(); ++k)
      spacing.push_back(report.onset_times_s[k] - report.onset_times_s[k - 1]);
    report.period_s = median_of(spacing);
  }
  return report;
}

}  // namespace stem
