#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fleetsim/analysis.hpp"
#include "fleetsim/engine.hpp"
#include "fleetsim/stats.hpp"

namespace fleetsim {

namespace detail {

inline std::string fixed6(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace detail

// One row per job in arrival order; stamp columns are blank until the
// corresponding transition happened, time components only once delivered.
inline void write_jobs_csv(std::ostream& os, const std::vector<Job>& jobs) {
  os << "n,t_arrival,t_assigned,t_depot_ready,t_delivered,vehicle_id,W,R,S,T\n";
  for (const Job& j : jobs) {
    os << j.n << ',' << detail::fixed6(j.t_arrival) << ',' << detail::fixed6(j.t_assigned) << ','
       << detail::fixed6(j.t_depot_ready) << ',' << detail::fixed6(j.t_delivered) << ',';
    if (j.vehicle_id >= 0) os << j.vehicle_id;
    if (j.status == JobStatus::Delivered) {
      const ServiceTimes st = decompose_times(j);
      os << ',' << detail::fixed6(st.waiting_min) << ',' << detail::fixed6(st.return_min) << ','
         << detail::fixed6(st.service_min) << ',' << detail::fixed6(st.total_min);
    } else {
      os << ",,,,";
    }
    os << '\n';
  }
}

inline void write_pending_csv(std::ostream& os, const std::vector<PendingSample>& pending) {
  os << "t_min,N\n";
  for (const PendingSample& s : pending) os << detail::fixed6(s.t_min) << ',' << s.waiting << '\n';
}

// Smoothed curve indexed by demand number (centre of the moving window).
inline void write_welch_csv(std::ostream& os, const WelchResult& welch) {
  os << "n,T_smoothed\n";
  for (std::size_t i = 0; i < welch.curve.size(); ++i)
    os << (static_cast<long>(i) + welch.window_half) << ',' << detail::fixed6(welch.curve[i])
       << '\n';
}

inline void write_frontier_csv(std::ostream& os, const std::vector<FrontierPoint>& staircase) {
  os << "L,T_tread_min,I_min_usd,l_star,K_term\n";
  for (const FrontierPoint& pt : staircase) {
    char cost[64];
    std::snprintf(cost, sizeof(cost), "%.2f", pt.i_min_usd);
    os << pt.depots << ',' << detail::fixed6(pt.t_tread_min) << ',' << cost << ',' << pt.l_star
       << ',' << pt.k_term << '\n';
  }
}

inline nlohmann::ordered_json summary_json(PolicyId policy, const SystemConfig& cfg,
                                           const ExperimentResult& res) {
  nlohmann::ordered_json j;
  j["policy"] = policy.token();
  j["K"] = cfg.vehicles;
  j["L"] = cfg.depots;
  j["lambda_per_min"] = cfg.lambda.per_min;
  j["n_wu"] = res.n_wu;
  if (res.delivery_time) {
    j["T_mean_min"] = res.delivery_time->mean;
    j["ci90_lo"] = res.delivery_time->lo;
    j["ci90_hi"] = res.delivery_time->hi;
  } else {
    j["T_mean_min"] = nullptr;
    j["ci90_lo"] = nullptr;
    j["ci90_hi"] = nullptr;
  }
  j["stable"] = res.stable;
  j["seeds"] = res.seeds;
  return j;
}

// Delivery times (T column) of delivered rows, in arrival order.
inline std::vector<double> read_delivery_times_csv(std::istream& is) {
  std::vector<double> out;
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("job CSV is empty");
  const auto header = detail::split_csv_line(line);
  if (header.empty() || header.front() != "n" || header.back() != "T")
    throw std::invalid_argument("job CSV header mismatch");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw std::invalid_argument("job CSV row has wrong arity");
    if (!fields.back().empty()) out.push_back(std::stod(fields.back()));
  }
  return out;
}

inline std::string jobs_csv_string(const std::vector<Job>& jobs) {
  std::ostringstream os;
  write_jobs_csv(os, jobs);
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << content;
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

// Flat config document; every key is optional and falls back to the default
// system. alpha and charge_time are two views of one quantity, so either may
// be given and the other is derived; giving both inconsistently is an error
// surfaced by SystemConfig::validate.
inline SystemConfig config_from_json(const nlohmann::json& j) {
  SystemConfig cfg;
  if (j.contains("side")) cfg.area.side_km = j.at("side").get<double>();
  if (j.contains("K")) cfg.vehicles = j.at("K").get<int>();
  if (j.contains("L")) cfg.depots = j.at("L").get<int>();
  if (j.contains("lambda")) cfg.lambda = ArrivalRate::per_minute(j.at("lambda").get<double>());
  if (j.contains("nu")) cfg.speed = Speed::km_per_hour(j.at("nu").get<double>());
  if (j.contains("flight_endurance"))
    cfg.flight_endurance_min = j.at("flight_endurance").get<double>();
  const bool has_alpha = j.contains("alpha");
  const bool has_charge = j.contains("charge_time");
  if (has_charge) cfg.charge_time_min = j.at("charge_time").get<double>();
  if (has_alpha) cfg.alpha = j.at("alpha").get<double>();
  if (has_alpha && !has_charge) {
    if (cfg.alpha <= 0.0 || cfg.alpha > 1.0)
      throw std::invalid_argument("alpha must lie in (0, 1]");
    cfg.charge_time_min = cfg.flight_endurance_min * (1.0 - cfg.alpha) / cfg.alpha;
  } else if (has_charge && !has_alpha) {
    cfg.alpha = cfg.flight_endurance_min / (cfg.flight_endurance_min + cfg.charge_time_min);
  } else if (!has_alpha && !has_charge && j.contains("flight_endurance")) {
    cfg.charge_time_min = cfg.flight_endurance_min * (1.0 - cfg.alpha) / cfg.alpha;
  }
  if (j.contains("delta"))
    cfg.delta_min = j.at("delta").get<double>();
  else
    cfg.delta_min = default_delta(cfg.lambda.per_min);
  if (j.contains("battery_low")) cfg.battery_low = j.at("battery_low").get<double>();
  if (j.contains("battery_ready")) cfg.battery_ready = j.at("battery_ready").get<double>();
  if (j.contains("C_v")) cfg.vehicle_cost = j.at("C_v").get<double>();
  if (j.contains("C_d")) cfg.depot_cost = j.at("C_d").get<double>();
  return cfg;
}

inline nlohmann::ordered_json config_to_json(const SystemConfig& cfg) {
  nlohmann::ordered_json j;
  j["side"] = cfg.area.side_km;
  j["K"] = cfg.vehicles;
  j["L"] = cfg.depots;
  j["lambda"] = cfg.lambda.per_min;
  j["nu"] = cfg.speed.kmh;
  j["alpha"] = cfg.alpha;
  j["delta"] = cfg.delta_min;
  j["flight_endurance"] = cfg.flight_endurance_min;
  j["charge_time"] = cfg.charge_time_min;
  j["battery_low"] = cfg.battery_low;
  j["battery_ready"] = cfg.battery_ready;
  j["C_v"] = cfg.vehicle_cost;
  j["C_d"] = cfg.depot_cost;
  return j;
}

}  // namespace fleetsim
