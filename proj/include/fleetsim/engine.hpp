#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fleetsim/fleet.hpp"
#include "fleetsim/policies.hpp"
#include "fleetsim/stats.hpp"

namespace fleetsim {

// Bernoulli arrival draw for one step; at most one job arrives per step.
inline bool gen_arrival(Rng& rng, double lambda_per_min, double delta_min) {
  return rng.uniform01() < lambda_per_min * delta_min;
}

// The depot layout is a property of the configuration, not of a replication,
// so numeric placement always runs from the same internal seed.
inline DepotLayout make_layout(const SystemConfig& cfg) {
  Rng layout_rng(0x9e3779b97f4a7c15ull);
  return place_depots(cfg.area, cfg.depots, layout_rng);
}

struct Trace {
  PolicyId policy;
  std::uint64_t seed = 0;
  SystemConfig config;
  std::vector<Job> jobs;
  std::vector<PendingSample> pending;
  long delivered = 0;
  long energy_violations = 0;
  double end_clock_min = 0.0;
  long steps = 0;
};

// Delivery times in arrival order, delivered jobs only.
inline std::vector<double> delivery_time_series(const std::vector<Job>& jobs) {
  std::vector<double> out;
  for (const Job& j : jobs)
    if (j.status == JobStatus::Delivered) out.push_back(decompose_times(j).total_min);
  return out;
}

// One replication: vehicles, jobs and the waiting list advanced on a fixed
// delta grid. Each step moves airborne vehicles (with exact sub-step landing
// stamps), then draws at most one arrival, then runs the policy's selection
// instants, then samples the backlog every 100 steps.
class Simulation {
 public:
  Simulation(const SystemConfig& cfg, PolicyId policy, std::uint64_t seed,
             std::optional<DepotLayout> layout = std::nullopt)
      : cfg_(cfg), policy_(policy), seed_(seed), rng_(seed) {
    cfg_.validate();
    layout_ = layout ? std::move(*layout) : make_layout(cfg_);
    if (layout_.count() != cfg_.depots)
      throw std::invalid_argument("layout depot count does not match configuration");
    nu_min_ = cfg_.speed.km_per_min();
    step_km_ = nu_min_ * cfg_.delta_min;
    vehicles_.resize(static_cast<std::size_t>(cfg_.vehicles));
    for (int k = 0; k < cfg_.vehicles; ++k) {
      VehicleState& v = vehicles_[static_cast<std::size_t>(k)];
      v.id = k;
      v.at_depot = k % cfg_.depots;
      v.position = layout_.positions[static_cast<std::size_t>(v.at_depot)];
      v.battery = 1.0;
      v.mode = VehicleMode::IdleAtDepotFull;
    }
  }

  void step() {
    const double t0 = clock_;
    clock_ = t0 + cfg_.delta_min;
    ++steps_;
    completed_.clear();
    arrived_ = false;
    event_flag_.assign(vehicles_.size(), 0);
    bool any_park_event = false;

    // 1) motion, battery, landings
    for (VehicleState& v : vehicles_) {
      switch (v.mode) {
        case VehicleMode::ToDepot:
        case VehicleMode::ToCustomer: {
          const double rem = distance(v.position, *v.target);
          if (rem <= step_km_ + 1e-12) {
            const double t_fly = rem / nu_min_;
            drain(v, t_fly);
            v.position = *v.target;
            v.target.reset();
            if (v.mode == VehicleMode::ToCustomer) {
              land_at_customer(v, t0 + t_fly);
            } else {
              any_park_event |= land_at_depot(v, cfg_.delta_min - t_fly);
            }
          } else {
            const double f = step_km_ / rem;
            v.position.x += (v.target->x - v.position.x) * f;
            v.position.y += (v.target->y - v.position.y) * f;
            drain(v, cfg_.delta_min);
          }
          break;
        }
        case VehicleMode::AtDepotCharging: {
          charge(v, cfg_.delta_min);
          if (v.battery >= cfg_.battery_ready) {
            v.mode = VehicleMode::AtDepotReady;  // keeps topping up while parked
            event_flag_[static_cast<std::size_t>(v.id)] = 1;
            any_park_event = true;
          }
          break;
        }
        case VehicleMode::AtDepotReady:
          charge(v, cfg_.delta_min);
          if (v.battery >= 1.0) v.mode = VehicleMode::IdleAtDepotFull;
          break;
        case VehicleMode::IdleAtDepotFull:
          break;
      }
    }

    // 2) at most one arrival per step
    if (gen_arrival(rng_, cfg_.lambda.per_min, cfg_.delta_min)) {
      Job j;
      j.n = static_cast<long>(jobs_.size());
      j.position = {rng_.uniform(0.0, cfg_.area.side_km), rng_.uniform(0.0, cfg_.area.side_km)};
      j.t_arrival = clock_;
      jobs_.push_back(j);
      waiting_.add(j.n, j.position, layout_);
      arrived_ = true;
    }

    // 3) selection instants
    if (arrived_ || !completed_.empty() || any_park_event) {
      if (policy_.ordering == JobOrdering::NearestJob)
        nj_phase();
      else
        fj_phase();
    }

    // 4) backlog sample
    if (steps_ % 100 == 0)
      pending_.push_back({clock_, static_cast<long>(waiting_.size())});
  }

  double clock() const { return clock_; }
  long steps() const { return steps_; }
  long arrivals() const { return static_cast<long>(jobs_.size()); }
  long delivered() const { return delivered_; }
  long energy_violations() const { return violations_; }
  const std::vector<VehicleState>& vehicles() const { return vehicles_; }
  const std::vector<Job>& jobs() const { return jobs_; }
  const WaitingSet& waiting() const { return waiting_; }
  const std::vector<PendingSample>& pending() const { return pending_; }
  const DepotLayout& layout() const { return layout_; }

  // Every arrival is waiting, on board some unique vehicle, or delivered.
  bool conserved() const {
    long waiting = 0, carried = 0, delivered = 0;
    for (const Job& j : jobs_) {
      switch (j.status) {
        case JobStatus::Waiting: ++waiting; break;
        case JobStatus::Assigned:
        case JobStatus::InService: ++carried; break;
        case JobStatus::Delivered: ++delivered; break;
      }
    }
    long on_board = 0;
    std::vector<char> seen(jobs_.size(), 0);
    for (const VehicleState& v : vehicles_) {
      if (!v.assigned_job) continue;
      ++on_board;
      if (seen[static_cast<std::size_t>(*v.assigned_job)]) return false;
      seen[static_cast<std::size_t>(*v.assigned_job)] = 1;
    }
    return waiting == static_cast<long>(waiting_.size()) && carried == on_board &&
           delivered == delivered_ &&
           waiting + carried + delivered == static_cast<long>(jobs_.size());
  }

  Trace finish() {
    Trace t;
    t.policy = policy_;
    t.seed = seed_;
    t.config = cfg_;
    t.jobs = std::move(jobs_);
    t.pending = std::move(pending_);
    t.delivered = delivered_;
    t.energy_violations = violations_;
    t.end_clock_min = clock_;
    t.steps = steps_;
    return t;
  }

 private:
  void drain(VehicleState& v, double dt) {
    auto out = update_battery(v, dt, v.mode, cfg_);
    v.battery = out.state.battery;
    violations_ += out.energy_violation ? 1 : 0;
  }

  void charge(VehicleState& v, double dt) {
    auto out = update_battery(v, dt, VehicleMode::AtDepotReady, cfg_);
    v.battery = out.state.battery;
  }

  void land_at_customer(VehicleState& v, double t_exact) {
    Job& j = jobs_[static_cast<std::size_t>(*v.assigned_job)];
    j.t_delivered = t_exact;
    j.status = JobStatus::Delivered;
    ++delivered_;
    v.assigned_job.reset();
    v.leg_depot.reset();
    completed_.push_back(v.id);
  }

  // Returns true when the landing makes the vehicle available for selection.
  bool land_at_depot(VehicleState& v, double parked_dt) {
    v.at_depot = *v.leg_depot;
    v.leg_depot.reset();
    charge(v, parked_dt);
    if (v.assigned_job) {
      // loading leg of a "+" selection: load and head out at the step clock
      Job& j = jobs_[static_cast<std::size_t>(*v.assigned_job)];
      j.t_depot_ready = clock_;
      j.status = JobStatus::InService;
      v.mode = VehicleMode::ToCustomer;
      v.target = j.position;
      v.at_depot = -1;
      return false;
    }
    if (v.charge_on_arrival && v.battery < cfg_.battery_ready) {
      v.charge_on_arrival = false;
      v.mode = VehicleMode::AtDepotCharging;
      return false;
    }
    v.charge_on_arrival = false;
    v.mode = v.battery >= 1.0 ? VehicleMode::IdleAtDepotFull : VehicleMode::AtDepotReady;
    event_flag_[static_cast<std::size_t>(v.id)] = 1;
    return true;
  }

  void send_to_depot(VehicleState& v, int depot, bool gated) {
    if (v.at_depot == depot) {
      if (gated)
        v.mode = VehicleMode::AtDepotCharging;
      else
        v.mode = v.battery >= 1.0 ? VehicleMode::IdleAtDepotFull : VehicleMode::AtDepotReady;
      return;
    }
    v.mode = VehicleMode::ToDepot;
    v.target = layout_.positions[static_cast<std::size_t>(depot)];
    v.leg_depot = depot;
    v.at_depot = -1;
    v.charge_on_arrival = gated;
  }

  void route_to_charge(VehicleState& v) {
    if (v.at_depot >= 0) {
      v.mode = VehicleMode::AtDepotCharging;
      return;
    }
    send_to_depot(v, nearest_depot(v.position, layout_), true);
  }

  void idle_route(VehicleState& v) {
    if (v.at_depot >= 0) return;  // parked vehicles stay put
    if (!v.target) send_to_depot(v, nearest_depot(v.position, layout_), false);
  }

  // After delivering, "-" vehicles head straight for a depot; the selection
  // happens once they land there.
  void route_completed_minus(VehicleState& v) {
    if (battery_gate(v, cfg_) == GateVerdict::MustCharge) {
      route_to_charge(v);
      return;
    }
    const int depot = v.return_depot ? *v.return_depot : nearest_depot(v.position, layout_);
    v.return_depot.reset();
    send_to_depot(v, depot, false);
  }

  void apply_assignment(const Assignment& a) {
    Job& j = jobs_[static_cast<std::size_t>(a.job)];
    waiting_.remove(a.job);
    j.status = JobStatus::Assigned;
    j.t_assigned = clock_;
    j.vehicle_id = a.vehicle;
    j.via_depot = a.via_depot;
    VehicleState& v = vehicles_[static_cast<std::size_t>(a.vehicle)];
    v.assigned_job = a.job;
    v.return_depot = a.return_depot;
    v.charge_on_arrival = false;
    if (v.at_depot == a.via_depot && v.at_depot >= 0) {
      j.t_depot_ready = clock_;
      j.status = JobStatus::InService;
      v.mode = VehicleMode::ToCustomer;
      v.target = j.position;
      v.at_depot = -1;
    } else {
      v.mode = VehicleMode::ToDepot;
      v.target = layout_.positions[static_cast<std::size_t>(a.via_depot)];
      v.leg_depot = a.via_depot;
      v.at_depot = -1;
    }
  }

  // Distributed nearest-job selections with randomized priority on collisions.
  void nj_phase() {
    const bool plus = policy_.timing == SelectionTiming::AtCompletion;
    std::vector<char> done(vehicles_.size(), 0);
    std::vector<int> selectors;
    if (plus)
      for (int id : completed_) {
        selectors.push_back(id);
        done[static_cast<std::size_t>(id)] = 1;
      }
    for (const VehicleState& v : vehicles_) {
      if (done[static_cast<std::size_t>(v.id)]) continue;
      if (!at_depot_mode(v.mode) || v.mode == VehicleMode::AtDepotCharging) continue;
      if (arrived_ || event_flag_[static_cast<std::size_t>(v.id)]) selectors.push_back(v.id);
    }
    if (selectors.size() > 1) selectors = resolve_contention(std::move(selectors), rng_);
    for (int id : selectors) {
      VehicleState& v = vehicles_[static_cast<std::size_t>(id)];
      const GateVerdict gate = battery_gate(v, cfg_);
      if (gate == GateVerdict::MustCharge) {
        route_to_charge(v);
        continue;
      }
      if (gate == GateVerdict::StillCharging) continue;
      const SelectResult r =
          plus ? nj_plus_select(v, waiting_, layout_) : nj_minus_select(v, waiting_);
      if (r.choice)
        apply_assignment(*r.choice);
      else
        idle_route(v);
    }
    if (!plus)
      for (int id : completed_) route_completed_minus(vehicles_[static_cast<std::size_t>(id)]);
  }

  // Centralised first-come-first-served assignment; no randomness involved.
  void fj_phase() {
    const bool plus = policy_.timing == SelectionTiming::AtCompletion;
    std::vector<char> is_completed(vehicles_.size(), 0);
    for (int id : completed_) is_completed[static_cast<std::size_t>(id)] = 1;
    std::vector<const VehicleState*> ready;
    for (VehicleState& v : vehicles_) {
      if (at_depot_mode(v.mode)) {
        const GateVerdict gate = battery_gate(v, cfg_);
        if (gate == GateVerdict::MustCharge) {
          v.mode = VehicleMode::AtDepotCharging;  // gate engages at the selection instant
          continue;
        }
        if (v.mode != VehicleMode::AtDepotCharging && gate == GateVerdict::Eligible)
          ready.push_back(&v);
      } else if (plus && is_completed[static_cast<std::size_t>(v.id)] &&
                 battery_gate(v, cfg_) == GateVerdict::Eligible) {
        ready.push_back(&v);
      }
    }
    const AssignResult res = plus ? fj_plus_assign(ready, waiting_, layout_)
                                  : fj_minus_assign(ready, waiting_, layout_);
    for (const Assignment& a : res.assignments) apply_assignment(a);
    for (int id : completed_) {
      VehicleState& v = vehicles_[static_cast<std::size_t>(id)];
      if (v.assigned_job) continue;  // re-dispatched at this instant
      if (!plus) {
        route_completed_minus(v);
        continue;
      }
      if (battery_gate(v, cfg_) == GateVerdict::MustCharge)
        route_to_charge(v);
      else
        idle_route(v);
    }
  }

  SystemConfig cfg_;
  PolicyId policy_;
  std::uint64_t seed_;
  Rng rng_;
  DepotLayout layout_;
  double nu_min_ = 0.0;
  double step_km_ = 0.0;
  double clock_ = 0.0;
  long steps_ = 0;
  long delivered_ = 0;
  long violations_ = 0;
  std::vector<VehicleState> vehicles_;
  std::vector<Job> jobs_;
  WaitingSet waiting_;
  std::vector<PendingSample> pending_;
  std::vector<int> completed_;
  std::vector<char> event_flag_;
  bool arrived_ = false;
};

// Run one replication until n_customers deliveries. A replication that keeps
// accumulating arrivals instead is probed at every escalation multiple and cut
// off once the backlog drift is unambiguous (or at three times the cap).
inline Trace run_replication(const SystemConfig& cfg, PolicyId policy, std::uint64_t seed,
                             long n_customers, long escalation_arrivals = 10000,
                             std::optional<DepotLayout> layout = std::nullopt) {
  if (n_customers < 1) throw std::invalid_argument("run_replication: need at least one customer");
  if (escalation_arrivals < 1) throw std::invalid_argument("run_replication: bad escalation cap");
  Simulation sim(cfg, policy, seed, std::move(layout));
  long next_check = escalation_arrivals;
  const long hard_cap = 3 * escalation_arrivals;
  while (true) {
    sim.step();
    if (sim.delivered() >= n_customers) break;
    if (sim.arrivals() >= hard_cap) break;
    if (sim.arrivals() >= next_check) {
      const auto series = delivery_time_series(sim.jobs());
      if (detect_instability(sim.pending(), series) == Stability::Unstable) break;
      next_check += escalation_arrivals;
    }
  }
  return sim.finish();
}

struct ExperimentSpec {
  int replications = 10;
  long customers = 4000;
  long escalation_arrivals = 10000;
  std::uint64_t master_seed = 1;
  long welch_window_half = 500;
  double confidence = 0.90;
  std::optional<long> warmup_override;
  int threads = 0;  // 0 = hardware concurrency, capped by FLEETSIM_THREADS
};

inline int resolve_threads(int requested) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  int threads = requested > 0 ? requested : static_cast<int>(hw);
  if (const char* env = std::getenv("FLEETSIM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0 && cap < threads) threads = cap;
  }
  return threads;
}

struct ExperimentOutput {
  ExperimentResult result;
  std::vector<Trace> traces;
  std::optional<WelchResult> welch;
};

// Replicated experiment: independent seeds master..master+R-1, a verdict per
// replication, Welch warm-up over the stable ones and a replication/deletion
// interval past the warm-up.
inline ExperimentOutput run_experiment_full(const SystemConfig& cfg, PolicyId policy,
                                            const ExperimentSpec& spec) {
  cfg.validate();
  if (spec.replications < 1) throw std::invalid_argument("experiment needs at least one replication");
  const DepotLayout layout = make_layout(cfg);
  ExperimentOutput out;
  out.traces.resize(static_cast<std::size_t>(spec.replications));

  const int workers =
      std::min(resolve_threads(spec.threads), spec.replications);
  std::atomic<int> cursor{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&]() {
    for (;;) {
      const int r = cursor.fetch_add(1);
      if (r >= spec.replications) return;
      try {
        out.traces[static_cast<std::size_t>(r)] =
            run_replication(cfg, policy, spec.master_seed + static_cast<std::uint64_t>(r),
                            spec.customers, spec.escalation_arrivals, layout);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult& res = out.result;
  for (int r = 0; r < spec.replications; ++r)
    res.seeds.push_back(spec.master_seed + static_cast<std::uint64_t>(r));
  std::vector<std::vector<double>> stable_series;
  for (const Trace& t : out.traces) {
    auto series = delivery_time_series(t.jobs);
    res.verdicts.push_back(detect_instability(t.pending, series));
    if (res.verdicts.back() == Stability::Stable) stable_series.push_back(std::move(series));
  }
  // A lone decided replication among many undecided ones is not evidence of
  // stability, so the plurality additionally needs affirmative verdicts from
  // at least 30% of the replications.
  {
    const long n_stable = res.count(Stability::Stable);
    const long n_unstable = res.count(Stability::Unstable);
    const long quorum = std::max(1L, (3L * spec.replications + 9) / 10);
    res.stable = n_stable > n_unstable && n_stable >= quorum;
  }

  if (spec.warmup_override) {
    res.n_wu = *spec.warmup_override;
    res.welch_converged = false;
  } else if (stable_series.size() >= 2) {
    std::size_t minlen = stable_series.front().size();
    for (const auto& s : stable_series) minlen = std::min(minlen, s.size());
    if (static_cast<long>(minlen) >= 2 * spec.welch_window_half + 2) {
      out.welch = welch_warmup(stable_series, spec.welch_window_half);
      res.n_wu = out.welch->n_wu;
      res.welch_converged = out.welch->converged;
    }
  }

  std::vector<std::vector<double>> usable;
  for (std::size_t i = 0; i < out.traces.size(); ++i) {
    const auto series = delivery_time_series(out.traces[i].jobs);
    if (res.verdicts[i] == Stability::Stable && static_cast<long>(series.size()) > res.n_wu &&
        (res.welch_converged || spec.warmup_override)) {
      double m = 0.0;
      for (std::size_t j = static_cast<std::size_t>(res.n_wu); j < series.size(); ++j) m += series[j];
      res.replication_means.push_back(m / static_cast<double>(series.size() - static_cast<std::size_t>(res.n_wu)));
      usable.push_back(series);
    } else {
      res.replication_means.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  if (usable.size() >= 2)
    res.delivery_time = replication_deletion(usable, res.n_wu, spec.confidence);
  return out;
}

inline ExperimentResult run_experiment(const SystemConfig& cfg, PolicyId policy,
                                       const ExperimentSpec& spec) {
  return run_experiment_full(cfg, policy, spec).result;
}

}  // namespace fleetsim
