#include "stem/workload.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stem/error.hpp"

namespace stem {

namespace {

constexpr double kCountSlack = 1e-9;

void require_time(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0)
    throw Error(Errc::InvalidArgument, std::string(what) + " must be finite and >= 0");
}

struct Piece {
  double begin = 0.0;
  double end = 0.0;
  std::string state;
};

// Overwrites [begin, end) of a sorted, gap-free piece list with state.
void paint(std::vector<Piece>& pieces, double begin, double end, const std::string& state) {
  if (end <= begin) return;
  std::vector<Piece> out;
  out.reserve(pieces.size() + 2);
  bool placed = false;
  for (const auto& p : pieces) {
    if (p.end <= begin || p.begin >= end) {
      if (!placed && p.begin >= end) {
        out.push_back({begin, end, state});
        placed = true;
      }
      out.push_back(p);
      continue;
    }
    if (p.begin < begin) out.push_back({p.begin, begin, p.state});
    if (!placed) {
      out.push_back({begin, end, state});
      placed = true;
    }
    if (p.end > end) out.push_back({end, p.end, p.state});
  }
  if (!placed) out.push_back({begin, end, state});
  pieces = std::move(out);
}

void append(Timeline& timeline, const std::string& state, double duration) {
  if (!timeline.intervals.empty() && timeline.intervals.back().state == state)
    timeline.intervals.back().duration_s += duration;
  else
    timeline.intervals.push_back({state, duration});
}

}  // namespace

Timeline gen_sensor_workload(const SensorWorkloadParams& params) {
  require_time(params.traffic_rate_pps, "traffic_rate_pps");
  require_time(params.duration_s, "duration_s");
  require_time(params.rx_time_per_packet_s, "rx_time_per_packet_s");
  require_time(params.tx_time_per_packet_s, "tx_time_per_packet_s");

  Timeline timeline;
  const double rate = params.traffic_rate_pps;
  const double active = params.rx_time_per_packet_s + params.tx_time_per_packet_s;
  if (rate > 0.0 && active * rate > 1.0 + 1e-12)
    throw Error(Errc::InfeasibleSchedule, "per-packet active time " + std::to_string(active) +
                                              " s exceeds the inter-arrival time " + std::to_string(1.0 / rate) + " s");

  const auto packets = rate > 0.0 ? static_cast<std::size_t>(std::floor(rate * params.duration_s + kCountSlack)) : 0;
  if (packets == 0) {
    timeline.intervals.push_back({sensor_states::sleep, params.duration_s});
    return timeline;
  }

  double cursor = 0.0;
  for (std::size_t k = 0; k < packets; ++k) {
    const double slot_end = static_cast<double>(k + 1) / rate;
    const double rx_start = slot_end - active;
    timeline.intervals.push_back({sensor_states::sleep, std::max(0.0, rx_start - cursor)});
    timeline.intervals.push_back({sensor_states::rx, params.rx_time_per_packet_s});
    timeline.intervals.push_back({sensor_states::tx, params.tx_time_per_packet_s});
    cursor = slot_end;
  }
  timeline.intervals.push_back({sensor_states::sleep, std::max(0.0, params.duration_s - cursor)});
  return timeline;
}

Timeline gen_wifi_psm_workload(const WifiWorkloadParams& params) {
  require_time(params.disconnected_duration_s, "disconnected_duration_s");
  require_time(params.connecting_duration_s, "connecting_duration_s");
  require_time(params.connected_duration_s, "connected_duration_s");
  require_time(params.psm_wake_slice_s, "psm_wake_slice_s");
  if (!std::isfinite(params.beacon_interval_s) || params.beacon_interval_s <= 0.0)
    throw Error(Errc::InvalidArgument, "beacon_interval_s must be finite and > 0");

  const double connected = params.connected_duration_s;
  auto bursts = params.traffic_bursts;
  for (const auto& b : bursts) {
    require_time(b.start_s, "burst start_s");
    require_time(b.duration_s, "burst duration_s");
    if (b.start_s + b.duration_s > connected * (1.0 + 1e-12))
      throw Error(Errc::InvalidArgument, "traffic burst extends beyond the connected period");
  }
  std::sort(bursts.begin(), bursts.end(),
            [](const TrafficBurst& a, const TrafficBurst& b) { return a.start_s < b.start_s; });
  for (std::size_t i = 1; i < bursts.size(); ++i) {
    if (bursts[i].start_s < bursts[i - 1].start_s + bursts[i - 1].duration_s)
      throw Error(Errc::OverlappingBursts, "traffic bursts starting at " + std::to_string(bursts[i - 1].start_s) +
                                               " s and " + std::to_string(bursts[i].start_s) + " s overlap");
  }

  const auto beacons = static_cast<std::size_t>(std::floor(connected / params.beacon_interval_s + kCountSlack));

  std::vector<Piece> pieces{{0.0, connected, params.psm_enabled ? wifi_states::sleep : wifi_states::idle}};
  if (params.psm_enabled) {
    for (std::size_t k = 0; k < beacons; ++k) {
      const double at = static_cast<double>(k) * params.beacon_interval_s;
      paint(pieces, at, std::min(connected, at + params.psm_wake_slice_s), wifi_states::idle);
    }
  }
  for (const auto& b : bursts)
    paint(pieces, b.start_s, std::min(connected, b.start_s + b.duration_s),
          b.direction == BurstDirection::Rx ? wifi_states::rx : wifi_states::tx);

  Timeline timeline;
  timeline.intervals.push_back({wifi_states::disconnected, params.disconnected_duration_s});
  timeline.intervals.push_back({wifi_states::idle, params.connecting_duration_s});
  for (const auto& p : pieces)
    if (p.end > p.begin) append(timeline, p.state, p.end - p.begin);

  const double connected_start = params.disconnected_duration_s + params.connecting_duration_s;
  for (std::size_t k = 0; k < beacons; ++k)
    timeline.events.push_back(
        {wifi_states::beacon, connected_start + static_cast<double>(k) * params.beacon_interval_s});
  return timeline;
}

}  // namespace stem
