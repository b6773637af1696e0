#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fleetsim/fleet.hpp"
#include "fleetsim/geometry.hpp"
#include "fleetsim/rng.hpp"

namespace fleetsim {

enum class JobOrdering { NearestJob, FirstJob };
enum class SelectionTiming { AtCompletion, AtDepot };  // the "+" / "-" variants

struct PolicyId {
  JobOrdering ordering = JobOrdering::FirstJob;
  SelectionTiming timing = SelectionTiming::AtCompletion;

  static PolicyId parse(const std::string& token) {
    PolicyId p;
    if (token == "nj+")
      p = {JobOrdering::NearestJob, SelectionTiming::AtCompletion};
    else if (token == "nj-")
      p = {JobOrdering::NearestJob, SelectionTiming::AtDepot};
    else if (token == "fj+")
      p = {JobOrdering::FirstJob, SelectionTiming::AtCompletion};
    else if (token == "fj-")
      p = {JobOrdering::FirstJob, SelectionTiming::AtDepot};
    else
      throw std::invalid_argument("unknown policy '" + token + "' (expected nj+, nj-, fj+, fj-)");
    return p;
  }

  std::string token() const {
    std::string t = ordering == JobOrdering::NearestJob ? "nj" : "fj";
    t += timing == SelectionTiming::AtCompletion ? '+' : '-';
    return t;
  }

  bool operator==(const PolicyId&) const = default;
};

struct WaitingJob {
  long n = 0;
  Point position;
  std::vector<double> depot_dist;  // distance to each depot, fixed at arrival
};

// Unserved jobs in arrival order. Entries carry their depot distances so the
// selection rules below stay O(1) per pair instead of re-deriving them.
class WaitingSet {
 public:
  void add(long n, Point position, const DepotLayout& layout) {
    if (!jobs_.empty() && jobs_.back().n >= n)
      throw std::invalid_argument("waiting set requires strictly increasing job indices");
    WaitingJob j{n, position, {}};
    j.depot_dist.reserve(layout.positions.size());
    for (const Point& d : layout.positions) j.depot_dist.push_back(distance(d, position));
    jobs_.push_back(std::move(j));
  }

  void remove(long n) {
    for (std::size_t i = 0; i < jobs_.size(); ++i) {
      if (jobs_[i].n == n) {
        jobs_.erase(jobs_.begin() + static_cast<std::ptrdiff_t>(i));
        return;
      }
    }
    throw std::invalid_argument("waiting set does not contain job " + std::to_string(n));
  }

  bool empty() const { return jobs_.empty(); }
  std::size_t size() const { return jobs_.size(); }
  const WaitingJob& oldest() const { return jobs_.front(); }
  const std::vector<WaitingJob>& jobs() const { return jobs_; }

 private:
  std::vector<WaitingJob> jobs_;
};

struct Assignment {
  long job = -1;
  int vehicle = -1;
  int via_depot = -1;                 // depot the vehicle loads at
  std::optional<int> return_depot;    // depot to park at after delivery, when pre-chosen
};

struct SelectResult {
  std::optional<Assignment> choice;
  long comparisons = 0;
};

// Nearest-job rule, decision taken wherever the vehicle currently is: minimise
// dist(v, depot) + dist(depot, job) over all depot/job pairs. Ties go to the
// smaller job index, then the smaller depot index.
inline SelectResult nj_plus_select(const VehicleState& v, const WaitingSet& waiting,
                                   const DepotLayout& layout) {
  SelectResult r;
  if (waiting.empty()) return r;
  const int depots = layout.count();
  std::vector<double> to_depot(static_cast<std::size_t>(depots));
  for (int l = 0; l < depots; ++l) to_depot[static_cast<std::size_t>(l)] = distance(v.position, layout.positions[static_cast<std::size_t>(l)]);
  double best = std::numeric_limits<double>::infinity();
  for (const WaitingJob& j : waiting.jobs()) {
    for (int l = 0; l < depots; ++l) {
      const double cost = to_depot[static_cast<std::size_t>(l)] + j.depot_dist[static_cast<std::size_t>(l)];
      ++r.comparisons;
      if (cost < best) {
        best = cost;
        r.choice = Assignment{j.n, v.id, l, std::nullopt};
      }
    }
  }
  return r;
}

// Nearest-job rule, decision taken at the depot the vehicle is parked at:
// minimise dist(depot, job). Ties go to the smaller job index.
inline SelectResult nj_minus_select(const VehicleState& v, const WaitingSet& waiting) {
  if (!at_depot_mode(v.mode) || v.at_depot < 0)
    throw std::logic_error("nj_minus_select: vehicle is not parked at a depot");
  SelectResult r;
  double best = std::numeric_limits<double>::infinity();
  for (const WaitingJob& j : waiting.jobs()) {
    const double cost = j.depot_dist[static_cast<std::size_t>(v.at_depot)];
    ++r.comparisons;
    if (cost < best) {
      best = cost;
      r.choice = Assignment{j.n, v.id, v.at_depot, std::nullopt};
    }
  }
  return r;
}

struct AssignResult {
  std::vector<Assignment> assignments;
  long comparisons = 0;
  std::vector<long> per_job_comparisons;
};

// First-come-first-served central rule, decisions at completion instants: the
// oldest job is matched to the ready vehicle and via-depot minimising
// dist(v, depot) + dist(depot, job); repeats while jobs and vehicles remain.
// Ties go to the smaller depot index, then the smaller vehicle id.
inline AssignResult fj_plus_assign(const std::vector<const VehicleState*>& ready,
                                   const WaitingSet& waiting, const DepotLayout& layout) {
  AssignResult r;
  const int depots = layout.count();
  std::vector<bool> used(ready.size(), false);
  std::size_t unused = ready.size();
  for (const WaitingJob& job : waiting.jobs()) {
    if (unused == 0) break;
    double best = std::numeric_limits<double>::infinity();
    int best_l = -1;
    std::size_t best_k = 0;
    long comps = 0;
    for (int l = 0; l < depots; ++l) {
      const double leg2 = job.depot_dist[static_cast<std::size_t>(l)];
      for (std::size_t k = 0; k < ready.size(); ++k) {
        if (used[k]) continue;
        const double cost = distance(ready[k]->position, layout.positions[static_cast<std::size_t>(l)]) + leg2;
        ++comps;
        if (cost < best) {
          best = cost;
          best_l = l;
          best_k = k;
        }
      }
    }
    r.comparisons += comps;
    r.per_job_comparisons.push_back(comps);
    used[best_k] = true;
    --unused;
    r.assignments.push_back(Assignment{job.n, ready[best_k]->id, best_l, std::nullopt});
  }
  return r;
}

// First-come-first-served central rule, decisions at depots: the oldest job is
// matched to the nearest parked vehicle, which will park at the depot nearest
// the customer afterwards. Ties go to the smaller vehicle id and the smaller
// depot index respectively.
inline AssignResult fj_minus_assign(const std::vector<const VehicleState*>& parked,
                                    const WaitingSet& waiting, const DepotLayout& layout) {
  AssignResult r;
  for (const VehicleState* v : parked)
    if (!at_depot_mode(v->mode) || v->at_depot < 0)
      throw std::logic_error("fj_minus_assign: candidate vehicle is not parked at a depot");
  const int depots = layout.count();
  std::vector<bool> used(parked.size(), false);
  std::size_t unused = parked.size();
  for (const WaitingJob& job : waiting.jobs()) {
    if (unused == 0) break;
    long comps = 0;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < parked.size(); ++k) {
      if (used[k]) continue;
      const double cost = job.depot_dist[static_cast<std::size_t>(parked[k]->at_depot)];
      ++comps;
      if (cost < best) {
        best = cost;
        best_k = k;
      }
    }
    double best_ret = std::numeric_limits<double>::infinity();
    int ret = -1;
    for (int l = 0; l < depots; ++l) {
      const double d = job.depot_dist[static_cast<std::size_t>(l)];
      ++comps;
      if (d < best_ret) {
        best_ret = d;
        ret = l;
      }
    }
    r.comparisons += comps;
    r.per_job_comparisons.push_back(comps);
    used[best_k] = true;
    --unused;
    r.assignments.push_back(Assignment{job.n, parked[best_k]->id, parked[best_k]->at_depot, ret});
  }
  return r;
}

// Random priority order for vehicles whose distributed selections collide in
// the same step. Centralised rules never call this.
inline std::vector<int> resolve_contention(std::vector<int> vehicle_ids, Rng& rng) {
  rng.shuffle(vehicle_ids);
  return vehicle_ids;
}

enum class GateVerdict {
  Eligible,
  MustCharge,     // below the low-battery threshold: head to a depot and charge
  StillCharging,  // parked for a forced charge, ready threshold not reached yet
};

inline GateVerdict battery_gate(const VehicleState& v, const SystemConfig& cfg) {
  if (v.battery < cfg.battery_low) return GateVerdict::MustCharge;
  if (v.mode == VehicleMode::AtDepotCharging && v.battery < cfg.battery_ready)
    return GateVerdict::StillCharging;
  return GateVerdict::Eligible;
}

}  // namespace fleetsim
