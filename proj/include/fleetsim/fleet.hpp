#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "fleetsim/geometry.hpp"
#include "fleetsim/units.hpp"

namespace fleetsim {

enum class VehicleMode {
  ToDepot,          // airborne towards a depot (loading leg, idle return, or charge run)
  AtDepotCharging,  // parked, below the ready threshold after a forced charge
  AtDepotReady,     // parked and available, still topping up
  ToCustomer,       // airborne towards a customer with goods on board
  IdleAtDepotFull,  // parked with a full battery
};

inline bool at_depot_mode(VehicleMode m) {
  return m == VehicleMode::AtDepotCharging || m == VehicleMode::AtDepotReady ||
         m == VehicleMode::IdleAtDepotFull;
}

enum class JobStatus { Waiting, Assigned, InService, Delivered };

struct Job {
  long n = 0;  // arrival index, strictly increasing with arrival time
  Point position;
  double t_arrival = 0.0;
  double t_assigned = std::numeric_limits<double>::quiet_NaN();
  double t_depot_ready = std::numeric_limits<double>::quiet_NaN();
  double t_delivered = std::numeric_limits<double>::quiet_NaN();
  int vehicle_id = -1;
  int via_depot = -1;
  JobStatus status = JobStatus::Waiting;
};

struct ServiceTimes {
  double waiting_min = 0.0;   // arrival to assignment
  double return_min = 0.0;    // assignment to loaded at the depot
  double service_min = 0.0;   // loaded to delivered
  double total_min = 0.0;
};

inline ServiceTimes decompose_times(const Job& job) {
  if (job.status != JobStatus::Delivered)
    throw std::logic_error("decompose_times: job has not been delivered");
  ServiceTimes t;
  t.waiting_min = job.t_assigned - job.t_arrival;
  t.return_min = job.t_depot_ready - job.t_assigned;
  t.service_min = job.t_delivered - job.t_depot_ready;
  t.total_min = t.waiting_min + t.return_min + t.service_min;
  return t;
}

struct VehicleState {
  int id = 0;
  Point position;
  double battery = 1.0;  // state of charge in [0, 1]
  VehicleMode mode = VehicleMode::IdleAtDepotFull;
  std::optional<Point> target;
  std::optional<long> assigned_job;
  std::optional<int> leg_depot;     // depot index the current depot-bound leg heads to
  std::optional<int> return_depot;  // pre-chosen depot to park at after delivery
  int at_depot = -1;                // depot index when parked, -1 while airborne
  bool charge_on_arrival = false;   // the current depot leg was forced by a low battery
};

inline double default_delta(double lambda_per_min) {
  if (!(lambda_per_min > 0.0)) throw std::invalid_argument("arrival rate must be positive");
  const double bound = std::min(0.08 / lambda_per_min, 1.0 / std::sqrt(1500.0 * lambda_per_min));
  // keep step clocks on a round grid when the bound allows it
  const double floored = std::floor(bound * 1000.0) / 1000.0;
  return floored > 0.0 ? floored : bound;
}

struct SystemConfig {
  ServiceArea area{4.0};
  int vehicles = 12;  // K
  int depots = 16;    // L
  ArrivalRate lambda = ArrivalRate::per_minute(0.65);
  Speed speed = Speed::km_per_hour(30.0);
  double alpha = 0.25;  // ratio of air time to air-plus-charge time
  double delta_min = default_delta(0.65);
  double flight_endurance_min = 60.0;
  double charge_time_min = 180.0;
  double battery_low = 0.30;
  double battery_ready = 0.80;
  double vehicle_cost = 2000.0;   // C_v
  double depot_cost = 20000.0;    // C_d

  double arrival_probability() const { return lambda.per_min * delta_min; }

  void validate() const {
    area.validate();
    if (vehicles < 1) throw std::invalid_argument("config: K must be at least 1");
    if (depots < 1) throw std::invalid_argument("config: L must be at least 1");
    if (!(lambda.per_min > 0.0)) throw std::invalid_argument("config: lambda must be positive");
    if (!(speed.kmh > 0.0)) throw std::invalid_argument("config: nu must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("config: alpha must lie in (0, 1]");
    if (!(delta_min > 0.0)) throw std::invalid_argument("config: delta must be positive");
    const double bound =
        std::min(0.08 / lambda.per_min, 1.0 / std::sqrt(1500.0 * lambda.per_min));
    if (delta_min > bound + 1e-12)
      throw std::invalid_argument("config: delta exceeds min{0.08/lambda, 1/sqrt(1500*lambda)} = " +
                                  std::to_string(bound));
    if (!(flight_endurance_min > 0.0) || !(charge_time_min > 0.0))
      throw std::invalid_argument("config: endurance and charge time must be positive");
    const double implied = flight_endurance_min / (flight_endurance_min + charge_time_min);
    if (std::abs(implied - alpha) > 1e-6)
      throw std::invalid_argument(
          "config: alpha must equal flight_endurance/(flight_endurance+charge_time), got " +
          std::to_string(implied));
    if (!(battery_low > 0.0 && battery_low < battery_ready && battery_ready <= 1.0))
      throw std::invalid_argument("config: need 0 < battery_low < battery_ready <= 1");
    if (vehicle_cost < 0.0 || depot_cost < 0.0)
      throw std::invalid_argument("config: costs must be non-negative");
  }
};

struct BatteryOutcome {
  VehicleState state;
  bool energy_violation = false;  // charge hit zero while airborne
};

// Linear drain in flight, linear charge while parked, clamped to [0, 1].
// Running dry mid-flight is flagged rather than fatal.
inline BatteryOutcome update_battery(VehicleState v, double dt_min, VehicleMode mode,
                                     const SystemConfig& cfg) {
  if (dt_min < 0.0) throw std::invalid_argument("update_battery: negative time step");
  BatteryOutcome out{v, false};
  switch (mode) {
    case VehicleMode::ToDepot:
    case VehicleMode::ToCustomer:
      out.state.battery = v.battery - dt_min / cfg.flight_endurance_min;
      if (out.state.battery < 0.0) {
        out.state.battery = 0.0;
        out.energy_violation = true;
      }
      break;
    case VehicleMode::AtDepotCharging:
    case VehicleMode::AtDepotReady:
    case VehicleMode::IdleAtDepotFull:
      out.state.battery = std::min(1.0, v.battery + dt_min / cfg.charge_time_min);
      break;
  }
  return out;
}

}  // namespace fleetsim
