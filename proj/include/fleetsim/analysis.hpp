#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fleetsim/geometry.hpp"
#include "fleetsim/units.hpp"

namespace fleetsim {

struct LoadReport {
  double rho = 0.0;
  double b_mean_min = 0.0;        // mean service demand per job, R' + S
  double r_bar_prime_min = 0.0;   // mean return leg
  double s_bar_min = 0.0;         // mean outbound leg
  bool satisfied = false;         // necessary condition R' + S <= alpha K / lambda
};

inline double load_factor(ArrivalRate lambda, double b_mean_min, double alpha, int vehicles) {
  if (lambda.per_min <= 0.0 || b_mean_min <= 0.0 || alpha <= 0.0 || vehicles <= 0)
    throw std::invalid_argument("load_factor: all arguments must be positive");
  return lambda.per_min * b_mean_min / (alpha * static_cast<double>(vehicles));
}

// Necessary (not sufficient) for a bounded backlog. With alpha = 1 this is the
// generic D/nu <= K/lambda form for fleets that never stop to charge.
inline bool stability_necessary(double r_bar_prime_min, double s_bar_min, double alpha,
                                int vehicles, ArrivalRate lambda) {
  if (r_bar_prime_min < 0.0 || s_bar_min < 0.0 || alpha <= 0.0 || vehicles <= 0 ||
      lambda.per_min <= 0.0)
    throw std::invalid_argument("stability_necessary: bad arguments");
  return r_bar_prime_min + s_bar_min <= alpha * static_cast<double>(vehicles) / lambda.per_min;
}

inline LoadReport load_report(ArrivalRate lambda, double r_bar_prime_min, double s_bar_min,
                              double alpha, int vehicles) {
  LoadReport rep;
  rep.r_bar_prime_min = r_bar_prime_min;
  rep.s_bar_min = s_bar_min;
  rep.b_mean_min = r_bar_prime_min + s_bar_min;
  rep.rho = load_factor(lambda, rep.b_mean_min, alpha, vehicles);
  rep.satisfied = stability_necessary(r_bar_prime_min, s_bar_min, alpha, vehicles, lambda);
  return rep;
}

// Mean nearest-depot distance of the square-grid placement, exact for perfect
// square depot counts and the continuous extrapolation otherwise.
inline double grid_multimedian_km(double side_km, int depots) {
  if (side_km <= 0.0 || depots <= 0) throw std::invalid_argument("grid_multimedian_km: bad arguments");
  return kUnitSquareCentroidDistance * side_km / std::sqrt(static_cast<double>(depots));
}

// Lower bound on the mean delivery time: the exact tread H*/nu when the
// multi-median value is known, else the strict Zemel bound.
inline double min_delivery_time_min(double area_km2, Speed nu, int depots,
                                    std::optional<double> h_star_km = std::nullopt) {
  if (area_km2 <= 0.0 || nu.kmh <= 0.0 || depots <= 0)
    throw std::invalid_argument("min_delivery_time_min: bad arguments");
  const double h = h_star_km ? *h_star_km : zemel_lower_bound(area_km2, depots);
  return h / nu.km_per_min();
}

// Real-valued lower bound on the depot count needed for a target mean time.
inline double min_depots(double area_km2, Speed nu, double t_target_min) {
  if (area_km2 <= 0.0 || nu.kmh <= 0.0 || t_target_min <= 0.0)
    throw std::invalid_argument("min_depots: bad arguments");
  const double t_h = t_target_min / 60.0;
  return 4.0 * area_km2 / (9.0 * std::numbers::pi * nu.kmh * nu.kmh * t_h * t_h);
}

// Real-valued lower bound on the fleet size; the true requirement is strictly
// greater than this value.
inline double min_vehicles(ArrivalRate lambda, double alpha, double t_target_min) {
  if (lambda.per_min <= 0.0 || alpha <= 0.0 || t_target_min <= 0.0)
    throw std::invalid_argument("min_vehicles: bad arguments");
  return 2.0 * lambda.per_min * t_target_min / alpha;
}

inline double infra_cost(double vehicles, int depots, double vehicle_cost, double depot_cost) {
  if (vehicles < 0.0 || depots < 0 || vehicle_cost < 0.0 || depot_cost < 0.0)
    throw std::invalid_argument("infra_cost: arguments must be non-negative");
  return depot_cost * static_cast<double>(depots) + vehicle_cost * vehicles;
}

enum class VehicleRounding {
  Floor,   // floor of the real-valued bound, as the expenditure formula prints it
  Strict,  // floor + 1, honouring the strict fleet-size inequality
};

inline long round_vehicles(double bound, VehicleRounding mode) {
  const double f = std::floor(bound);
  return static_cast<long>(f) + (mode == VehicleRounding::Strict ? 1 : 0);
}

struct FrontierParams {
  double area_km2 = 16.0;
  ArrivalRate lambda = ArrivalRate::per_minute(0.65);
  Speed nu = Speed::km_per_hour(30.0);
  double alpha = 0.25;
  double vehicle_cost = 2000.0;
  double depot_cost = 20000.0;
  VehicleRounding rounding = VehicleRounding::Floor;

  void validate() const {
    if (area_km2 <= 0.0 || lambda.per_min <= 0.0 || nu.kmh <= 0.0 || alpha <= 0.0 ||
        alpha > 1.0 || vehicle_cost < 0.0 || depot_cost < 0.0)
      throw std::invalid_argument("frontier parameters must be positive (costs non-negative)");
  }
};

struct AuxFrontier {
  std::function<double(double)> g;  // expenditure relaxation over tau in hours
  double tau_star_h = 0.0;          // its stationary point
};

// Continuous relaxation of the expenditure bound and its minimiser. Units are
// hours and km/h internally regardless of how lambda and nu were expressed.
inline AuxFrontier aux_g_and_tau_star(const FrontierParams& p) {
  p.validate();
  const double lam_h = p.lambda.per_hour();
  const double nu_h = p.nu.kmh;
  const double a = p.area_km2, alpha = p.alpha;
  const double cv = p.vehicle_cost, cd = p.depot_cost;
  AuxFrontier out;
  out.g = [=](double tau_h) {
    if (tau_h <= 0.0) throw std::invalid_argument("g(tau): tau must be positive");
    return cd * 4.0 * a / (9.0 * std::numbers::pi * nu_h * nu_h * tau_h * tau_h) +
           cv * 2.0 * lam_h * tau_h / alpha;
  };
  // Stationary point of g: solve dg/dtau = 0 for tau. The speed enters
  // squared, exactly as it does in g itself; anything else is not a time.
  out.tau_star_h =
      std::cbrt(4.0 * alpha * a * cd / (9.0 * std::numbers::pi * lam_h * nu_h * nu_h * cv));
  return out;
}

struct FrontierPoint {
  int depots = 0;           // tread index L
  double t_tread_min = 0.0; // left edge H_L*/nu of the tread
  double i_min_usd = 0.0;
  int l_star = 0;           // depot count attaining the inner minimum
  long k_term = 0;          // vehicle count used in that minimum
};

// Piecewise-constant expenditure lower bound. For each admissible tread L the
// inner minimum ranges over admissible depot counts l in [L, l_max]; the depot
// term grows linearly in l, so the scan stops once it alone dominates.
inline std::vector<FrontierPoint> frontier(
    const FrontierParams& p, std::vector<int> depot_counts, int l_max = 100,
    const std::function<double(int)>& h_km_of_l = {}) {
  p.validate();
  std::sort(depot_counts.begin(), depot_counts.end());
  depot_counts.erase(std::unique(depot_counts.begin(), depot_counts.end()), depot_counts.end());
  while (!depot_counts.empty() && depot_counts.back() > l_max) depot_counts.pop_back();
  if (depot_counts.empty() || depot_counts.front() < 1)
    throw std::invalid_argument("frontier: admissible depot set is empty or invalid");

  const double side = std::sqrt(p.area_km2);
  const auto h_of = [&](int l) {
    return h_km_of_l ? h_km_of_l(l) : grid_multimedian_km(side, l);
  };
  const double nu_min = p.nu.km_per_min();
  const double lam_h = p.lambda.per_hour();

  std::vector<FrontierPoint> staircase;
  for (std::size_t i = 0; i < depot_counts.size(); ++i) {
    const int tread = depot_counts[i];
    FrontierPoint pt;
    pt.depots = tread;
    pt.t_tread_min = h_of(tread) / nu_min;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = i; j < depot_counts.size(); ++j) {
      const int l = depot_counts[j];
      const double h = h_of(l);
      const double depot_term = p.depot_cost * 4.0 * p.area_km2 / (9.0 * std::numbers::pi * h * h);
      if (depot_term >= best) break;  // grows with l from here on
      const long k = round_vehicles(2.0 * lam_h * (h / p.nu.kmh) / p.alpha, p.rounding);
      const double total = depot_term + p.vehicle_cost * static_cast<double>(k);
      if (total < best) {
        best = total;
        pt.i_min_usd = total;
        pt.l_star = l;
        pt.k_term = k;
      }
    }
    staircase.push_back(pt);
  }
  return staircase;
}

inline std::vector<int> perfect_squares_up_to(int l_max) {
  std::vector<int> out;
  for (int k = 1; k * k <= l_max; ++k) out.push_back(k * k);
  return out;
}

}  // namespace fleetsim
