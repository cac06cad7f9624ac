#include "stem/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "stem/error.hpp"

namespace stem {

namespace {

// Relative pivot threshold for rank decisions on the column-normalized matrix.
constexpr double kRankThreshold = 1e-10;

std::string state_column(const std::string& s) { return "t_" + s; }
std::string transition_column(const TransitionKey& k) { return "n_" + k.from + "__" + k.to; }
std::string event_column(const std::string& kind) { return "n_ev_" + kind; }

void check_observation(const Observation& obs, std::size_t row) {
  auto bad = [&](const std::string& what) {
    throw Error(Errc::InvalidArgument, "observation " + std::to_string(row) + ": " + what);
  };
  for (const auto& [name, t] : obs.state_times_s)
    if (!std::isfinite(t) || t < 0.0) bad("time for '" + name + "' must be finite and >= 0");
  for (const auto& [key, c] : obs.transition_counts)
    if (!std::isfinite(c) || c < 0.0) bad("count for '" + key.label() + "' must be finite and >= 0");
  for (const auto& [kind, c] : obs.event_counts)
    if (!std::isfinite(c) || c < 0.0) bad("count for event '" + kind + "' must be finite and >= 0");
  if (!std::isfinite(obs.measured_energy_j)) bad("measured energy must be finite");
}

// Columns that take part in a linear dependency: greedily grow an independent
// set; each column that fails to raise the rank is regressed on that set and
// reported together with the columns it leans on.
std::vector<std::size_t> dependent_columns(const Eigen::MatrixXd& normalized) {
  const auto p = static_cast<std::size_t>(normalized.cols());
  std::vector<std::size_t> basis;
  std::set<std::size_t> involved;
  for (std::size_t j = 0; j < p; ++j) {
    const Eigen::VectorXd col = normalized.col(static_cast<Eigen::Index>(j));
    if (col.norm() == 0.0) {
      involved.insert(j);
      continue;
    }
    Eigen::MatrixXd trial(normalized.rows(), static_cast<Eigen::Index>(basis.size() + 1));
    for (std::size_t b = 0; b < basis.size(); ++b)
      trial.col(static_cast<Eigen::Index>(b)) = normalized.col(static_cast<Eigen::Index>(basis[b]));
    trial.col(static_cast<Eigen::Index>(basis.size())) = col;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
    qr.setThreshold(kRankThreshold);
    if (static_cast<std::size_t>(qr.rank()) == basis.size() + 1) {
      basis.push_back(j);
      continue;
    }
    involved.insert(j);
    Eigen::MatrixXd span(normalized.rows(), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t b = 0; b < basis.size(); ++b)
      span.col(static_cast<Eigen::Index>(b)) = normalized.col(static_cast<Eigen::Index>(basis[b]));
    const Eigen::VectorXd coef = span.householderQr().solve(col);
    for (std::size_t b = 0; b < basis.size(); ++b)
      if (std::abs(coef(static_cast<Eigen::Index>(b))) > 1e-8) involved.insert(basis[b]);
  }
  return {involved.begin(), involved.end()};
}

}  // namespace

Observation observe(const Timeline& timeline) {
  Observation obs;
  const StateInterval* prev = nullptr;
  for (const auto& iv : timeline.intervals) {
    obs.state_times_s[iv.state] += iv.duration_s;
    if (prev != nullptr && prev->state != iv.state) obs.transition_counts[{prev->state, iv.state}] += 1.0;
    prev = &iv;
  }
  for (const auto& ev : timeline.events) obs.event_counts[ev.kind] += 1.0;
  return obs;
}

std::vector<std::string> design_columns(const EnergyModel& skeleton) {
  std::vector<std::string> cols;
  for (const auto& s : skeleton.states) cols.push_back(state_column(s.name));
  for (const auto& t : skeleton.transitions) cols.push_back(transition_column({t.from, t.to}));
  for (const auto& e : skeleton.events) cols.push_back(event_column(e.kind));
  return cols;
}

CalibrationResult fit_ols(const std::vector<Observation>& observations, const EnergyModel& skeleton) {
  require_valid(skeleton);
  const auto columns = design_columns(skeleton);
  const std::size_t p = columns.size();
  const std::size_t m = observations.size();
  if (m < p)
    throw Error(Errc::TooFewObservations,
                std::to_string(m) + " observations for " + std::to_string(p) + " unknowns");

  const double u = skeleton.supply_voltage_v;
  const std::size_t n_states = skeleton.states.size();
  const std::size_t n_trans = skeleton.transitions.size();

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
  Eigen::VectorXd e(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    const Observation& obs = observations[k];
    check_observation(obs, k);
    const auto row = static_cast<Eigen::Index>(k);
    for (const auto& [name, t] : obs.state_times_s) {
      auto it = std::find_if(skeleton.states.begin(), skeleton.states.end(),
                             [&](const PowerState& s) { return s.name == name; });
      if (it == skeleton.states.end()) throw Error(Errc::UnknownName, "observation names unknown state '" + name + "'");
      a(row, it - skeleton.states.begin()) = u * t;
    }
    for (const auto& [key, c] : obs.transition_counts) {
      auto it = std::find_if(skeleton.transitions.begin(), skeleton.transitions.end(),
                             [&](const TransitionSpec& t) { return t.from == key.from && t.to == key.to; });
      // State changes without a spec are instantaneous and carry no charge.
      if (it == skeleton.transitions.end()) continue;
      a(row, static_cast<Eigen::Index>(n_states) + (it - skeleton.transitions.begin())) = u * c;
    }
    for (const auto& [kind, c] : obs.event_counts) {
      auto it = std::find_if(skeleton.events.begin(), skeleton.events.end(),
                             [&](const EventSpec& ev) { return ev.kind == kind; });
      if (it == skeleton.events.end()) {
        if (c == 0.0) continue;
        throw Error(Errc::UnknownName, "observation names unknown event kind '" + kind + "'");
      }
      a(row, static_cast<Eigen::Index>(n_states + n_trans) + (it - skeleton.events.begin())) = u * c;
    }
    e(row) = obs.measured_energy_j;
  }

  // Normalize columns so the rank decision does not depend on units.
  Eigen::VectorXd scale = a.colwise().norm().transpose();
  Eigen::MatrixXd normalized = a;
  for (Eigen::Index j = 0; j < normalized.cols(); ++j)
    if (scale(j) > 0.0) normalized.col(j) /= scale(j);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pivoted(normalized);
  pivoted.setThreshold(kRankThreshold);
  if ((scale.array() == 0.0).any() || static_cast<std::size_t>(pivoted.rank()) < p) {
    std::vector<std::string> offending;
    for (std::size_t j : dependent_columns(normalized)) offending.push_back(columns[j]);
    std::string list;
    for (const auto& c : offending) list += (list.empty() ? "" : ", ") + c;
    throw Error(Errc::RankDeficient, "design matrix is rank deficient in columns: " + list, offending);
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(normalized);
  const Eigen::VectorXd z = qr.solve(e);
  const Eigen::VectorXd x = z.cwiseQuotient(scale);

  const Eigen::VectorXd residual = a * x - e;
  const double rss = residual.squaredNorm();
  const double ess = e.squaredNorm();

  CalibrationResult result;
  result.columns = columns;
  result.residual_rms_j = std::sqrt(rss / static_cast<double>(m));
  result.r_squared = ess > 0.0 ? std::clamp(1.0 - rss / ess, 0.0, 1.0) : 1.0;

  for (std::size_t j = 0; j < n_states; ++j)
    result.state_currents_a[skeleton.states[j].name] = x(static_cast<Eigen::Index>(j));
  for (std::size_t j = 0; j < n_trans; ++j) {
    const auto& t = skeleton.transitions[j];
    result.transition_charges_c[{t.from, t.to}] = x(static_cast<Eigen::Index>(n_states + j));
  }
  for (std::size_t j = 0; j < skeleton.events.size(); ++j)
    result.event_charges_c[skeleton.events[j].kind] = x(static_cast<Eigen::Index>(n_states + n_trans + j));

  result.std_errors.assign(p, 0.0);
  if (m > p) {
    const double s2 = rss / static_cast<double>(m - p);
    const auto pi = static_cast<Eigen::Index>(p);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(pi).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(pi, pi));
    for (std::size_t j = 0; j < p; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      result.std_errors[j] = std::sqrt(s2 * r_inv.row(jj).squaredNorm()) / scale(jj);
    }
  }
  return result;
}

double predict(const CalibrationResult& result, const Observation& obs, double supply_voltage_v) {
  double charge = 0.0;
  for (const auto& [name, t] : obs.state_times_s) {
    auto it = result.state_currents_a.find(name);
    if (it == result.state_currents_a.end()) throw Error(Errc::UnknownName, "no fitted current for state '" + name + "'");
    charge += t * it->second;
  }
  for (const auto& [key, c] : obs.transition_counts) {
    auto it = result.transition_charges_c.find(key);
    if (it == result.transition_charges_c.end()) continue;
    charge += c * it->second;
  }
  for (const auto& [kind, c] : obs.event_counts) {
    auto it = result.event_charges_c.find(kind);
    if (it == result.event_charges_c.end()) {
      if (c == 0.0) continue;
      throw Error(Errc::UnknownName, "no fitted charge for event kind '" + kind + "'");
    }
    charge += c * it->second;
  }
  return supply_voltage_v * charge;
}

double estimation_error(double estimated_j, double measured_j) {
  if (!(measured_j > 0.0))
    throw Error(Errc::NonPositiveMeasured, "measured energy must be > 0");
  return 100.0 * std::abs(estimated_j - measured_j) / measured_j;
}

double mean_of(const std::vector<double>& samples) {
  if (samples.empty()) return 0.0;
  return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
}

ConfidenceInterval confidence_interval(const std::vector<double>& samples, double level) {
  if (samples.size() < 2)
    throw Error(Errc::TooFewSamples, "confidence interval needs at least 2 samples");
  if (!(level > 0.0 && level < 1.0)) throw Error(Errc::InvalidArgument, "level must lie in (0, 1)");

  const double n = static_cast<double>(samples.size());
  const double mean = mean_of(samples);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) return {mean, mean};

  const boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(dist, 0.5 * (1.0 + level));
  const double half = t * sd / std::sqrt(n);
  return {mean - half, mean + half};
}

}  // namespace stem
