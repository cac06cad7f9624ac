#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "stem/calibration.hpp"
#include "stem/error.hpp"
#include "stem/estimators.hpp"
#include "stem/workload.hpp"

using namespace stem;

namespace {

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected stem::Error");
  return Errc::Io;
}

double time_in(const Timeline& t, const std::string& state) {
  double s = 0.0;
  for (const auto& iv : t.intervals)
    if (iv.state == state) s += iv.duration_s;
  return s;
}

std::size_t state_changes(const Timeline& t) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < t.intervals.size(); ++i)
    if (t.intervals[i].state != t.intervals[i - 1].state) ++n;
  return n;
}

SensorWorkloadParams sensor(double rate, double duration = 10.0) { return {rate, duration, 0.02, 0.02, true}; }

EnergyModel wifi_model() {
  EnergyModel m;
  m.supply_voltage_v = 5.0;
  m.states = {{"disconnected", 0.12}, {"idle", 0.16}, {"sleep", 0.04}, {"rx", 0.22}, {"tx", 0.3}};
  m.transitions = {{"disconnected", "idle", 0.5, 0.14}, {"sleep", "idle", 0.001, 0.08}, {"idle", "sleep", 0.001, 0.06}};
  m.events = {{"beacon", 0.0002}};
  return m;
}

}  // namespace

TEST_CASE("gen_sensor_workload") {
  SUBCASE("zero rate is all sleep") {
    const auto t = gen_sensor_workload(sensor(0.0));
    REQUIRE(t.intervals.size() == 1);
    CHECK(t.intervals[0].state == "sleep");
    CHECK(t.intervals[0].duration_s == 10.0);
  }

  SUBCASE("packet count, residency and state changes") {
    for (double rate : {0.05, 0.3, 1.0, 2.5, 4.0, 7.0, 10.0, 25.0}) {
      CAPTURE(rate);
      const auto p = sensor(rate);
      const auto t = gen_sensor_workload(p);
      const double packets = std::floor(rate * p.duration_s + 1e-9);
      CHECK(time_in(t, "rx") == doctest::Approx(packets * p.rx_time_per_packet_s).epsilon(1e-12));
      CHECK(time_in(t, "tx") == doctest::Approx(packets * p.tx_time_per_packet_s).epsilon(1e-12));
      CHECK(t.total_duration() == doctest::Approx(p.duration_s).epsilon(1e-12));
      if (packets > 0) CHECK(state_changes(t) == static_cast<std::size_t>(3 * packets));
      for (const auto& iv : t.intervals) CHECK(iv.duration_s >= 0.0);
      CHECK(t.events.empty());
    }
  }

  SUBCASE("doubling the rate doubles the packet residency") {
    test::Rng rng(31);
    for (int i = 0; i < 50; ++i) {
      const auto packets = static_cast<double>(rng.integer(1, 100));
      const double duration = 10.0;
      const double rate = packets / duration;
      const auto a = gen_sensor_workload(sensor(rate, duration));
      const auto b = gen_sensor_workload(sensor(2.0 * rate, duration));
      CHECK(time_in(b, "tx") == doctest::Approx(2.0 * time_in(a, "tx")).epsilon(1e-12));
      CHECK(state_changes(b) == 2 * state_changes(a));
    }
  }

  SUBCASE("each packet is a sleep, rx, tx cycle") {
    const auto t = gen_sensor_workload(sensor(4.0, 1.0));
    const std::vector<std::string> expect{"sleep", "rx", "tx", "sleep", "rx", "tx", "sleep", "rx",
                                          "tx",    "sleep", "rx", "tx", "sleep"};
    REQUIRE(t.intervals.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(t.intervals[i].state == expect[i]);
    const auto o = observe(t);
    CHECK(o.transition_counts.at({"sleep", "rx"}) == 4.0);
    CHECK(o.transition_counts.at({"tx", "sleep"}) == 4.0);
  }

  SUBCASE("saturated schedule keeps zero-length sleeps") {
    const auto t = gen_sensor_workload(sensor(25.0, 1.0));
    CHECK(time_in(t, "sleep") == doctest::Approx(0.0).scale(1.0));
    CHECK(time_in(t, "rx") == doctest::Approx(0.5));
  }

  SUBCASE("errors") {
    CHECK(code_of([] { gen_sensor_workload(sensor(30.0)); }) == Errc::InfeasibleSchedule);
    CHECK(code_of([] { gen_sensor_workload(sensor(-1.0)); }) == Errc::InvalidArgument);
    CHECK(code_of([] { gen_sensor_workload({1.0, std::nan(""), 0.01, 0.01, true}); }) == Errc::InvalidArgument);
  }
}

TEST_CASE("gen_wifi_psm_workload") {
  SUBCASE("beacons in one second at 100 ms") {
    const auto t = gen_wifi_psm_workload({0.0, 0.0, 1.0, 0.1, false, 0.005, {}});
    REQUIRE(t.events.size() == 10);
    for (std::size_t k = 0; k < 10; ++k) {
      CHECK(t.events[k].kind == "beacon");
      CHECK(t.events[k].timestamp_s == doctest::Approx(0.1 * static_cast<double>(k)));
    }
    CHECK(time_in(t, "idle") == doctest::Approx(1.0));
  }

  SUBCASE("phases come first and beacons start at the connection") {
    const auto t = gen_wifi_psm_workload({1.0, 0.5, 2.0, 0.1, true, 0.005, {}});
    CHECK(t.intervals[0].state == "disconnected");
    CHECK(t.intervals[0].duration_s == 1.0);
    CHECK(t.intervals[1].state == "idle");
    CHECK(t.events.front().timestamp_s == doctest::Approx(1.5));
    CHECK(t.events.size() == 20);
    CHECK(t.total_duration() == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(time_in(t, "idle") == doctest::Approx(0.5 + 20 * 0.005).epsilon(1e-9));
  }

  SUBCASE("bursts take precedence over wake slices") {
    const std::vector<TrafficBurst> bursts{{0.2, 0.15, BurstDirection::Rx}, {0.5, 0.02, BurstDirection::Tx}};
    const auto t = gen_wifi_psm_workload({0.0, 0.0, 1.0, 0.1, true, 0.005, bursts});
    CHECK(time_in(t, "rx") == doctest::Approx(0.15));
    CHECK(time_in(t, "tx") == doctest::Approx(0.02));
    // Wake slices at 0.2 and 0.3 fall inside the rx burst; 0.5 inside tx.
    CHECK(time_in(t, "idle") == doctest::Approx(7 * 0.005));
    CHECK(t.total_duration() == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("PSM saves energy for the reference model") {
    for (double connected : {0.5, 1.0, 10.0}) {
      const auto off = gen_wifi_psm_workload({0.0, 0.0, connected, 0.1, false, 0.005, {}});
      const auto on = gen_wifi_psm_workload({0.0, 0.0, connected, 0.1, true, 0.005, {}});
      CHECK(estimate_with_events(wifi_model(), on).total_j < estimate_with_events(wifi_model(), off).total_j);
    }
  }

  SUBCASE("PSM saves energy when sleep is cheaper than idle") {
    test::Rng rng(41);
    for (int i = 0; i < 100; ++i) {
      EnergyModel m;
      m.supply_voltage_v = rng.uniform(1.0, 5.0);
      const double idle = rng.uniform(0.01, 0.3);
      m.states = {{"disconnected", rng.uniform(0.0, 0.3)}, {"idle", idle}, {"sleep", rng.uniform(0.0, 0.9 * idle)},
                  {"rx", rng.uniform(0.0, 0.4)}, {"tx", rng.uniform(0.0, 0.4)}};
      m.events = {{"beacon", rng.uniform(0.0, 1e-3)}};
      WifiWorkloadParams p{0.0, 0.0, rng.uniform(0.2, 5.0), rng.uniform(0.05, 0.2), false, 0.005, {}};
      const auto off = gen_wifi_psm_workload(p);
      p.psm_enabled = true;
      const auto on = gen_wifi_psm_workload(p);
      CHECK(estimate_with_events(m, on).total_j < estimate_with_events(m, off).total_j);
    }
  }

  SUBCASE("errors") {
    const std::vector<TrafficBurst> overlap{{0.2, 0.2, BurstDirection::Rx}, {0.3, 0.1, BurstDirection::Tx}};
    CHECK(code_of([&] { gen_wifi_psm_workload({0.0, 0.0, 1.0, 0.1, true, 0.005, overlap}); }) ==
          Errc::OverlappingBursts);
    const std::vector<TrafficBurst> late{{0.9, 0.2, BurstDirection::Rx}};
    CHECK(code_of([&] { gen_wifi_psm_workload({0.0, 0.0, 1.0, 0.1, true, 0.005, late}); }) == Errc::InvalidArgument);
    CHECK(code_of([] { gen_wifi_psm_workload({0.0, 0.0, 1.0, 0.0, true, 0.005, {}}); }) == Errc::InvalidArgument);
    CHECK(code_of([] { gen_wifi_psm_workload({-1.0, 0.0, 1.0, 0.1, true, 0.005, {}}); }) == Errc::InvalidArgument);
  }
}
