// Command-line front end: single experiments, sweeps, the expenditure
// frontier, depot placement and warm-up re-analysis. All outputs are plain
// CSV/JSON files whose bytes depend only on the arguments.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fleetsim/fleetsim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct ConfigCli {
  std::optional<double> side, lambda, nu, alpha, delta, flight_endurance, charge_time;
  std::optional<double> battery_low, battery_ready, C_v, C_d;
  std::optional<int> K, L;
  std::string config_path;

  void attach(CLI::App* cmd, bool with_fleet_size = true) {
    cmd->add_option("--config", config_path, "JSON config file with flat keys");
    cmd->add_option("--side", side, "service area side length, km");
    if (with_fleet_size) {
      cmd->add_option("--K", K, "fleet size");
      cmd->add_option("--L", L, "depot count");
    }
    cmd->add_option("--lambda", lambda, "arrival rate, jobs per minute");
    cmd->add_option("--nu", nu, "cruise speed, km/h");
    cmd->add_option("--alpha", alpha, "air-time ratio; implies charge_time unless given");
    cmd->add_option("--delta", delta, "step length, minutes");
    cmd->add_option("--flight_endurance", flight_endurance, "full-battery air time, minutes");
    cmd->add_option("--charge_time", charge_time, "empty-to-full charge time, minutes");
    cmd->add_option("--battery_low", battery_low, "charge-gate threshold");
    cmd->add_option("--battery_ready", battery_ready, "end-of-charge threshold");
    cmd->add_option("--C_v", C_v, "cost per vehicle, US$");
    cmd->add_option("--C_d", C_d, "cost per depot, US$");
  }

  fleetsim::SystemConfig resolve() const {
    json doc = json::object();
    if (!config_path.empty()) doc = json::parse(fleetsim::read_text_file(config_path));
    auto set = [&doc](const char* key, const auto& opt) {
      if (opt) doc[key] = *opt;
    };
    set("side", side);
    set("K", K);
    set("L", L);
    set("lambda", lambda);
    set("nu", nu);
    set("flight_endurance", flight_endurance);
    set("charge_time", charge_time);
    set("battery_low", battery_low);
    set("battery_ready", battery_ready);
    set("C_v", C_v);
    set("C_d", C_d);
    // alpha overrides a file-supplied charge_time unless charge_time is also a flag
    if (alpha) {
      doc["alpha"] = *alpha;
      if (!charge_time) doc.erase("charge_time");
    }
    if (delta) doc["delta"] = *delta;
    fleetsim::SystemConfig cfg = fleetsim::config_from_json(doc);
    cfg.validate();
    return cfg;
  }
};

struct ExperimentCli {
  std::uint64_t seed = 1;
  int reps = 10;
  long customers = 4000;
  long escalation = 10000;
  long welch_window = 500;
  std::optional<long> warmup;
  int threads = 0;
  std::string out_dir = ".";

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "master seed; replication r uses seed+r");
    cmd->add_option("--reps", reps, "number of replications")->check(CLI::PositiveNumber);
    cmd->add_option("--customers", customers, "deliveries per replication")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--escalation", escalation, "arrival count that triggers instability probes")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--welch-window", welch_window, "half window (w) of the 2w+1 smoother")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--warmup", warmup, "override the estimated warm-up demand count");
    cmd->add_option("--threads", threads, "worker threads (0 = all, capped by FLEETSIM_THREADS)");
    cmd->add_option("--out", out_dir, "output directory");
  }

  fleetsim::ExperimentSpec spec() const {
    fleetsim::ExperimentSpec s;
    s.master_seed = seed;
    s.replications = reps;
    s.customers = customers;
    s.escalation_arrivals = escalation;
    s.welch_window_half = welch_window;
    s.warmup_override = warmup;
    s.threads = threads;
    return s;
  }
};

std::string stability_name(fleetsim::Stability s) {
  switch (s) {
    case fleetsim::Stability::Stable: return "stable";
    case fleetsim::Stability::Unstable: return "unstable";
    default: return "undecided";
  }
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty() && dir != ".") fs::create_directories(dir);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dots = item.find("..");
    if (dots != std::string::npos) {
      const int lo = std::stoi(item.substr(0, dots));
      const int hi = std::stoi(item.substr(dots + 2));
      if (lo > hi) throw std::invalid_argument(std::string(what) + ": empty range " + item);
      for (int v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(std::stoi(item));
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + ": no values given");
  return out;
}

std::string format_cell(double v, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

int cmd_simulate(const ConfigCli& cc, const ExperimentCli& ec, const std::string& policy_token) {
  const fleetsim::SystemConfig cfg = cc.resolve();
  const fleetsim::PolicyId policy = fleetsim::PolicyId::parse(policy_token);
  const fleetsim::ExperimentOutput out = fleetsim::run_experiment_full(cfg, policy, ec.spec());
  ensure_dir(ec.out_dir);

  ordered_json summary = fleetsim::summary_json(policy, cfg, out.result);
  summary["config"] = fleetsim::config_to_json(cfg);
  ordered_json verdicts = ordered_json::array();
  for (const auto v : out.result.verdicts) verdicts.push_back(stability_name(v));
  summary["replication_verdicts"] = verdicts;
  fleetsim::write_text_file(join_path(ec.out_dir, "summary.json"), summary.dump(2) + "\n");

  for (std::size_t r = 0; r < out.traces.size(); ++r) {
    const fleetsim::Trace& t = out.traces[r];
    std::ostringstream jobs, pending;
    fleetsim::write_jobs_csv(jobs, t.jobs);
    fleetsim::write_pending_csv(pending, t.pending);
    fleetsim::write_text_file(join_path(ec.out_dir, "jobs_rep" + std::to_string(r) + ".csv"),
                              jobs.str());
    fleetsim::write_text_file(join_path(ec.out_dir, "pending_rep" + std::to_string(r) + ".csv"),
                              pending.str());
  }
  if (out.welch) {
    std::ostringstream welch;
    fleetsim::write_welch_csv(welch, *out.welch);
    fleetsim::write_text_file(join_path(ec.out_dir, "welch.csv"), welch.str());
  }

  std::cout << summary.dump(2) << '\n';
  const bool all_unstable =
      out.result.count(fleetsim::Stability::Unstable) == static_cast<int>(out.result.verdicts.size());
  return all_unstable ? 2 : 0;
}

int cmd_sweep(const ConfigCli& cc, const ExperimentCli& ec, const std::string& policies_text,
              const std::string& k_text, const std::string& l_text) {
  std::vector<fleetsim::PolicyId> policies;
  {
    std::stringstream ss(policies_text);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) policies.push_back(fleetsim::PolicyId::parse(tok));
    if (policies.empty()) throw std::invalid_argument("sweep: no policies given");
  }
  const std::vector<int> k_values = parse_int_list(k_text, "--K");
  const std::vector<int> l_values = parse_int_list(l_text, "--L");
  const fleetsim::SystemConfig base = cc.resolve();
  ensure_dir(ec.out_dir);

  std::ostringstream rows;
  rows << "policy,L,K,stable,n_stable,n_unstable,n_undecided,n_wu,T_mean_min,ci90_lo,ci90_hi\n";
  for (const fleetsim::PolicyId policy : policies) {
    for (const int l : l_values) {
      for (const int k : k_values) {
        fleetsim::SystemConfig cfg = base;
        cfg.vehicles = k;
        cfg.depots = l;
        cfg.validate();
        const fleetsim::ExperimentResult res = fleetsim::run_experiment(cfg, policy, ec.spec());
        rows << policy.token() << ',' << l << ',' << k << ','
             << (res.stable ? "true" : "false") << ',' << res.count(fleetsim::Stability::Stable)
             << ',' << res.count(fleetsim::Stability::Unstable) << ','
             << res.count(fleetsim::Stability::Undecided) << ',' << res.n_wu << ',';
        if (res.delivery_time)
          rows << format_cell(res.delivery_time->mean) << ',' << format_cell(res.delivery_time->lo)
               << ',' << format_cell(res.delivery_time->hi);
        else
          rows << ",,";
        rows << '\n';
        std::cerr << "cell " << policy.token() << " L=" << l << " K=" << k << ": "
                  << (res.stable ? "stable" : "not stable") << '\n';
      }
    }
  }
  fleetsim::write_text_file(join_path(ec.out_dir, "sweep.csv"), rows.str());

  // Feasibility boundary per depot count: the fleet size that saturates the
  // necessary condition, and the floor on the mean delivery time.
  std::ostringstream regions;
  regions << "L,K_rho1,T_min_min\n";
  for (const int l : l_values) {
    const double h = fleetsim::grid_multimedian_km(base.area.side_km, l);
    const double b_min = 2.0 * h / base.speed.km_per_min();
    const double k_rho1 = base.lambda.per_min * b_min / base.alpha;
    regions << l << ',' << format_cell(k_rho1) << ','
            << format_cell(h / base.speed.km_per_min()) << '\n';
  }
  fleetsim::write_text_file(join_path(ec.out_dir, "impossible_regions.csv"), regions.str());
  return 0;
}

int cmd_frontier(const ConfigCli& cc, const std::string& out_dir, const std::string& l_set_text,
                 int l_max, const std::string& rounding_text, bool all_integers,
                 const std::string& sweep_csv) {
  const fleetsim::SystemConfig cfg = cc.resolve();
  fleetsim::FrontierParams params;
  params.area_km2 = cfg.area.area_km2();
  params.lambda = cfg.lambda;
  params.nu = cfg.speed;
  params.alpha = cfg.alpha;
  params.vehicle_cost = cfg.vehicle_cost;
  params.depot_cost = cfg.depot_cost;
  params.rounding = rounding_text == "strict" ? fleetsim::VehicleRounding::Strict
                                              : fleetsim::VehicleRounding::Floor;

  std::vector<int> l_set;
  if (!l_set_text.empty())
    l_set = parse_int_list(l_set_text, "--l-set");
  else if (all_integers)
    for (int l = 1; l <= l_max; ++l) l_set.push_back(l);
  else
    l_set = fleetsim::perfect_squares_up_to(l_max);

  std::function<double(int)> h_of;
  if (all_integers) {
    // exact multi-median for non-square counts via numeric placement
    h_of = [&cfg](int l) {
      const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(l))));
      if (root * root == l) return fleetsim::grid_multimedian_km(cfg.area.side_km, l);
      fleetsim::Rng rng(0x9e3779b97f4a7c15ull);
      return fleetsim::place_depots(cfg.area, l, rng).h_km;
    };
  }

  const auto staircase = fleetsim::frontier(params, l_set, l_max, h_of);
  ensure_dir(out_dir);
  std::ostringstream csv;
  fleetsim::write_frontier_csv(csv, staircase);
  fleetsim::write_text_file(join_path(out_dir, "frontier.csv"), csv.str());

  const fleetsim::AuxFrontier aux = fleetsim::aux_g_and_tau_star(params);
  ordered_json meta;
  meta["tau_star_h"] = aux.tau_star_h;
  meta["tau_star_min"] = aux.tau_star_h * 60.0;
  meta["g_at_tau_star_usd"] = aux.g(aux.tau_star_h);
  meta["vehicle_rounding"] = rounding_text.empty() ? "floor" : rounding_text;
  fleetsim::write_text_file(join_path(out_dir, "aux.json"), meta.dump(2) + "\n");

  if (!sweep_csv.empty()) {
    // overlay: achieved operating points of stable sweep cells
    std::istringstream in(fleetsim::read_text_file(sweep_csv));
    std::string line;
    std::getline(in, line);
    std::ostringstream pts;
    pts << "policy,L,K,T_mean_min,cost_usd\n";
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> f;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) f.push_back(cell);
      if (f.size() < 11 || f[3] != "true" || f[8].empty()) continue;
      const int l = std::stoi(f[1]);
      const int k = std::stoi(f[2]);
      const double cost = fleetsim::infra_cost(k, l, params.vehicle_cost, params.depot_cost);
      pts << f[0] << ',' << l << ',' << k << ',' << f[8] << ',' << format_cell(cost, "%.2f")
          << '\n';
    }
    fleetsim::write_text_file(join_path(out_dir, "operating_points.csv"), pts.str());
  }

  std::cout << csv.str();
  return 0;
}

int cmd_placement(double side, int depots, long samples, std::uint64_t seed,
                  const std::string& out_dir) {
  const fleetsim::ServiceArea area{side};
  area.validate();
  fleetsim::Rng rng(seed);
  const fleetsim::DepotLayout layout = fleetsim::place_depots(area, depots, rng);
  ensure_dir(out_dir);
  ordered_json doc = fleetsim::layout_to_json(layout, area);
  doc["zemel_km"] = fleetsim::zemel_lower_bound(area.area_km2(), depots);
  if (samples > 0) {
    fleetsim::Rng mc_rng(seed + 1);
    const auto est = fleetsim::multimedian_value(layout, area, samples, mc_rng);
    doc["H_mc_km"] = est.value_km;
    doc["H_mc_se_km"] = est.std_error_km;
    doc["H_mc_samples"] = est.samples;
  }
  fleetsim::write_text_file(join_path(out_dir, "depots_L" + std::to_string(depots) + ".json"),
                            doc.dump(2) + "\n");
  std::cout << doc.dump(2) << '\n';
  return 0;
}

int cmd_welch(const std::vector<std::string>& trace_paths, long window_half,
              const std::string& out_dir) {
  if (trace_paths.size() < 2)
    throw std::invalid_argument("welch: need at least two job CSV files");
  std::vector<std::vector<double>> series;
  for (const std::string& path : trace_paths) {
    std::istringstream in(fleetsim::read_text_file(path));
    series.push_back(fleetsim::read_delivery_times_csv(in));
  }
  const fleetsim::WelchResult welch = fleetsim::welch_warmup(series, window_half);
  ensure_dir(out_dir);
  std::ostringstream csv;
  fleetsim::write_welch_csv(csv, welch);
  fleetsim::write_text_file(join_path(out_dir, "welch.csv"), csv.str());
  std::cout << "n_wu=" << welch.n_wu << " converged=" << (welch.converged ? "true" : "false")
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-depot drone delivery: simulation and planning toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "run one replicated experiment cell");
  ConfigCli sim_cfg;
  ExperimentCli sim_exp;
  std::string sim_policy;
  sim_cfg.attach(sim);
  sim_exp.attach(sim);
  sim->add_option("--policy", sim_policy, "one of nj+, nj-, fj+, fj-")->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "grid of experiment cells over policies, K and L");
  ConfigCli sw_cfg;
  ExperimentCli sw_exp;
  std::string sw_policies = "nj+,nj-,fj+,fj-", sw_k = "1..24", sw_l = "1,4,9,16";
  sw_cfg.attach(sw, /*with_fleet_size=*/false);
  sw_exp.attach(sw);
  sw->add_option("--policies", sw_policies, "comma list of policy tokens");
  sw->add_option("--K", sw_k, "fleet sizes, list or a..b range");
  sw->add_option("--L", sw_l, "depot counts, list or a..b range");

  // frontier
  auto* fr = app.add_subcommand("frontier", "minimum expenditure staircase");
  ConfigCli fr_cfg;
  std::string fr_out = ".", fr_lset, fr_round = "floor", fr_sweep;
  int fr_lmax = 100;
  bool fr_all = false;
  fr_cfg.attach(fr);
  fr->add_option("--out", fr_out, "output directory");
  fr->add_option("--l-set", fr_lset, "admissible depot counts (default perfect squares)");
  fr->add_option("--l-max", fr_lmax, "truncation of the inner minimum")->check(CLI::PositiveNumber);
  fr->add_option("--vehicle-rounding", fr_round, "floor (truncate the real bound) or strict (floor+1)")
      ->check(CLI::IsMember({"floor", "strict"}));
  fr->add_flag("--all-integers", fr_all, "admit every depot count, numeric placement for non-squares");
  fr->add_option("--sweep", fr_sweep, "sweep.csv to overlay achieved operating points");

  // placement
  auto* pl = app.add_subcommand("placement", "depot layout and its mean-distance value");
  double pl_side = 4.0;
  int pl_depots = 16;
  long pl_samples = 250000;
  std::uint64_t pl_seed = 1;
  std::string pl_out = ".";
  pl->add_option("--side", pl_side, "service area side length, km");
  pl->add_option("--L", pl_depots, "depot count")->check(CLI::PositiveNumber);
  pl->add_option("--samples", pl_samples, "Monte Carlo check sample count (0 = skip)");
  pl->add_option("--seed", pl_seed, "seed for numeric placement and the check");
  pl->add_option("--out", pl_out, "output directory");

  // welch
  auto* we = app.add_subcommand("welch", "warm-up analysis on stored job CSVs");
  std::vector<std::string> we_traces;
  long we_window = 500;
  std::string we_out = ".";
  we->add_option("--traces", we_traces, "two or more jobs_rep*.csv files")->required();
  we->add_option("--window", we_window, "half window (w) of the 2w+1 smoother")
      ->check(CLI::PositiveNumber);
  we->add_option("--out", we_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_cfg, sim_exp, sim_policy);
    if (sw->parsed()) return cmd_sweep(sw_cfg, sw_exp, sw_policies, sw_k, sw_l);
    if (fr->parsed())
      return cmd_frontier(fr_cfg, fr_out, fr_lset, fr_lmax, fr_round, fr_all, fr_sweep);
    if (pl->parsed()) return cmd_placement(pl_side, pl_depots, pl_samples, pl_seed, pl_out);
    if (we->parsed()) return cmd_welch(we_traces, we_window, we_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
