#pragma once

// Deterministic synthetic timelines for the two reference scenarios: a
// duty-cycled sensor forwarder and an 802.11 station with power-save mode.

#include <string>
#include <vector>

#include "stem/model.hpp"

namespace stem {

/// State names the sensor generator emits.
namespace sensor_states {
inline constexpr const char* sleep = "sleep";
inline constexpr const char* rx = "rx";
inline constexpr const char* tx = "tx";
}  // namespace sensor_states

/// State and event names the 802.11 generator emits. The connecting phase is
/// not a state: it is the disconnected->idle transition of the model.
namespace wifi_states {
inline constexpr const char* disconnected = "disconnected";
inline constexpr const char* idle = "idle";
inline constexpr const char* sleep = "sleep";
inline constexpr const char* rx = "rx";
inline constexpr const char* tx = "tx";
inline constexpr const char* beacon = "beacon";
}  // namespace wifi_states

struct SensorWorkloadParams {
  double traffic_rate_pps = 0.0;
  double duration_s = 0.0;
  double rx_time_per_packet_s = 0.0;
  double tx_time_per_packet_s = 0.0;
  /// Kept for parameter-file compatibility. Timelines are state logs;
  /// transition cost is always attributed by the model at estimation time.
  bool include_transitions = true;
};

/// Forwarder schedule: packet k (k = 0 .. floor(rate * duration) - 1) owns
/// the slot [k / rate, (k + 1) / rate) and is received then retransmitted at
/// the end of it. Everything else is sleep, so each packet yields the
/// sleep->rx->tx->sleep cycle and 3 state changes. Zero-length sleep
/// intervals are kept when the schedule is exactly saturated.
///
/// Throws InfeasibleSchedule when rx + tx time exceeds 1 / rate, and
/// InvalidArgument for negative or non-finite parameters.
Timeline gen_sensor_workload(const SensorWorkloadParams& params);

enum class BurstDirection { Rx, Tx };

struct TrafficBurst {
  double start_s = 0.0;  // relative to the start of the connected period
  double duration_s = 0.0;
  BurstDirection direction = BurstDirection::Rx;
};

struct WifiWorkloadParams {
  double disconnected_duration_s = 0.0;
  double connecting_duration_s = 0.0;
  double connected_duration_s = 0.0;
  double beacon_interval_s = 0.1;
  bool psm_enabled = false;
  /// Awake time per beacon under PSM.
  double psm_wake_slice_s = 0.005;
  std::vector<TrafficBurst> traffic_bursts;
};

/// Timeline: (disconnected, disconnected_duration), (idle, connecting_duration)
/// for the connecting phase, then the connected period. Beacons fire at
/// connected_start + k * beacon_interval for k < floor(connected / interval).
/// Without PSM the connected period idles between bursts; with PSM it sleeps
/// and wakes to idle for psm_wake_slice_s at each beacon. Bursts become rx/tx
/// intervals and take precedence over wake slices.
///
/// Throws OverlappingBursts, InvalidArgument (bursts outside the connected
/// period, non-positive beacon interval, negative durations).
Timeline gen_wifi_psm_workload(const WifiWorkloadParams& params);

}  // namespace stem
