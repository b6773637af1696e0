#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fleetsim/fleet.hpp"

using namespace fleetsim;

TEST_CASE("default step size") {
  // bound is min{0.08/lambda, 1/sqrt(1500*lambda)}, floored to a round grid
  CHECK(default_delta(0.65) == Catch::Approx(0.032).epsilon(1e-12));
  CHECK(default_delta(0.65) * 0.65 == Catch::Approx(0.0208).epsilon(1e-12));
  CHECK(default_delta(10.0) <= 0.08 / 10.0);
  CHECK(default_delta(0.001) <= 1.0 / std::sqrt(1500.0 * 0.001));
  CHECK_THROWS_AS(default_delta(0.0), std::invalid_argument);
  CHECK_THROWS_AS(default_delta(-1.0), std::invalid_argument);
}

TEST_CASE("config validation") {
  SystemConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.arrival_probability() == Catch::Approx(0.0208));

  SECTION("step size must respect the discretisation bound") {
    cfg.delta_min = 0.2;  // above 0.08/0.65
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SECTION("air-time ratio must match endurance and charge time") {
    cfg.alpha = 0.5;  // 60/(60+180) is 0.25
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.charge_time_min = 60.0;
    CHECK_NOTHROW(cfg.validate());
  }
  SECTION("battery thresholds are ordered") {
    cfg.battery_low = 0.9;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.battery_low = 0.3;
    cfg.battery_ready = 1.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SECTION("counts and rates must be positive") {
    cfg.vehicles = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.vehicles = 12;
    cfg.depots = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.depots = 16;
    cfg.lambda = ArrivalRate::per_minute(0.0);
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
}

TEST_CASE("arrival rate and speed unit helpers") {
  CHECK(ArrivalRate::per_hour(39.0).per_min == Catch::Approx(0.65));
  CHECK(ArrivalRate::per_minute(0.65).per_hour() == Catch::Approx(39.0));
  CHECK(Speed::km_per_hour(30.0).km_per_min() == Catch::Approx(0.5));
}

TEST_CASE("battery update") {
  SystemConfig cfg;
  VehicleState v;
  v.battery = 0.5;

  SECTION("linear drain in flight") {
    auto out = update_battery(v, 6.0, VehicleMode::ToCustomer, cfg);
    CHECK(out.state.battery == Catch::Approx(0.5 - 6.0 / 60.0));
    CHECK_FALSE(out.energy_violation);
  }
  SECTION("running dry is flagged and clamped") {
    auto out = update_battery(v, 45.0, VehicleMode::ToDepot, cfg);
    CHECK(out.state.battery == 0.0);
    CHECK(out.energy_violation);
  }
  SECTION("linear charge while parked, clamped at full") {
    auto out = update_battery(v, 18.0, VehicleMode::AtDepotCharging, cfg);
    CHECK(out.state.battery == Catch::Approx(0.5 + 18.0 / 180.0));
    CHECK_FALSE(out.energy_violation);
    out = update_battery(v, 1000.0, VehicleMode::IdleAtDepotFull, cfg);
    CHECK(out.state.battery == 1.0);
  }
  SECTION("negative step rejected") {
    CHECK_THROWS_AS(update_battery(v, -0.1, VehicleMode::ToDepot, cfg), std::invalid_argument);
  }
}

TEST_CASE("mode classification") {
  CHECK(at_depot_mode(VehicleMode::AtDepotCharging));
  CHECK(at_depot_mode(VehicleMode::AtDepotReady));
  CHECK(at_depot_mode(VehicleMode::IdleAtDepotFull));
  CHECK_FALSE(at_depot_mode(VehicleMode::ToDepot));
  CHECK_FALSE(at_depot_mode(VehicleMode::ToCustomer));
}

TEST_CASE("delivery time decomposition") {
  Job j;
  j.t_arrival = 10.0;
  j.t_assigned = 12.5;
  j.t_depot_ready = 14.0;
  j.t_delivered = 15.25;

  SECTION("undelivered jobs cannot be decomposed") {
    CHECK_THROWS_AS(decompose_times(j), std::logic_error);
  }
  SECTION("waiting, return and service parts add up") {
    j.status = JobStatus::Delivered;
    ServiceTimes t = decompose_times(j);
    CHECK(t.waiting_min == Catch::Approx(2.5));
    CHECK(t.return_min == Catch::Approx(1.5));
    CHECK(t.service_min == Catch::Approx(1.25));
    CHECK(t.total_min == Catch::Approx(5.25));
  }
}
