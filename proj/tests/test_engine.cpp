#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fleetsim/engine.hpp"
#include "fleetsim/io.hpp"

using namespace fleetsim;

namespace {

SystemConfig small_config(int vehicles, int depots) {
  SystemConfig cfg;
  cfg.vehicles = vehicles;
  cfg.depots = depots;
  return cfg;
}

}  // namespace

TEST_CASE("arrival draw") {
  SECTION("zero rate never fires") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) CHECK_FALSE(gen_arrival(rng, 0.0, 0.032));
  }
  SECTION("empirical inter-arrival time matches the rate") {
    Rng rng(2026);
    const double lambda = 0.65, delta = 0.032;
    long arrivals = 0;
    const long steps = 1000000;
    for (long i = 0; i < steps; ++i) arrivals += gen_arrival(rng, lambda, delta) ? 1 : 0;
    const double mean_interarrival = (static_cast<double>(steps) * delta) / static_cast<double>(arrivals);
    CHECK(mean_interarrival == Catch::Approx(1.0 / lambda).epsilon(0.01));
  }
}

TEST_CASE("layout construction is a pure function of the config") {
  SystemConfig cfg = small_config(4, 5);  // non-square count runs the numeric path
  DepotLayout a = make_layout(cfg);
  DepotLayout b = make_layout(cfg);
  REQUIRE(a.count() == 5);
  for (int i = 0; i < a.count(); ++i) {
    CHECK(a.positions[static_cast<std::size_t>(i)].x == b.positions[static_cast<std::size_t>(i)].x);
    CHECK(a.positions[static_cast<std::size_t>(i)].y == b.positions[static_cast<std::size_t>(i)].y);
  }
}

TEST_CASE("initial fleet state") {
  SystemConfig cfg = small_config(6, 4);
  Simulation sim(cfg, PolicyId::parse("fj+"), 1);
  const auto& fleet = sim.vehicles();
  REQUIRE(fleet.size() == 6);
  for (int k = 0; k < 6; ++k) {
    const VehicleState& v = fleet[static_cast<std::size_t>(k)];
    CHECK(v.id == k);
    CHECK(v.at_depot == k % 4);  // round-robin over depots
    CHECK(v.battery == 1.0);
    CHECK(v.mode == VehicleMode::IdleAtDepotFull);
  }
}

TEST_CASE("replications are deterministic") {
  SystemConfig cfg = small_config(12, 16);
  for (const char* token : {"nj+", "nj-", "fj+", "fj-"}) {
    PolicyId policy = PolicyId::parse(token);
    Trace a = run_replication(cfg, policy, 7, 300);
    Trace b = run_replication(cfg, policy, 7, 300);
    CHECK(jobs_csv_string(a.jobs) == jobs_csv_string(b.jobs));
    CHECK(a.steps == b.steps);
    CHECK(a.delivered == b.delivered);
    REQUIRE(a.pending.size() == b.pending.size());
    for (std::size_t i = 0; i < a.pending.size(); ++i)
      CHECK(a.pending[i].waiting == b.pending[i].waiting);

    Trace c = run_replication(cfg, policy, 8, 300);
    CHECK(jobs_csv_string(a.jobs) != jobs_csv_string(c.jobs));  // a different seed diverges
  }
}

TEST_CASE("job accounting stays conserved") {
  SystemConfig cfg = small_config(12, 16);
  for (const char* token : {"nj+", "fj-"}) {
    Trace t = run_replication(cfg, PolicyId::parse(token), 3, 400);
    REQUIRE(t.delivered >= 400);
    CHECK(t.energy_violations == 0);

    // the sampled backlog must equal the stamp-derived backlog at every sample
    for (const PendingSample& s : t.pending) {
      long waiting = 0;
      for (const Job& j : t.jobs) {
        if (j.t_arrival > s.t_min) break;  // arrival order
        const bool assigned = !std::isnan(j.t_assigned) && j.t_assigned <= s.t_min;
        if (!assigned) ++waiting;
      }
      CHECK(waiting == s.waiting);
    }

    long delivered = 0;
    for (const Job& j : t.jobs) {
      if (j.status != JobStatus::Delivered) continue;
      ++delivered;
      CHECK(j.vehicle_id >= 0);
      CHECK(j.via_depot >= 0);
      CHECK(j.t_arrival <= j.t_assigned);
      CHECK(j.t_assigned <= j.t_depot_ready);
      CHECK(j.t_depot_ready < j.t_delivered);
    }
    CHECK(delivered == t.delivered);
  }
}

TEST_CASE("service legs run at flight speed exactly") {
  SystemConfig cfg = small_config(16, 16);
  const DepotLayout layout = make_layout(cfg);
  Trace t = run_replication(cfg, PolicyId::parse("fj+"), 11, 500, 10000, layout);
  const double nu = cfg.speed.km_per_min();
  long checked = 0;
  for (const Job& j : t.jobs) {
    if (j.status != JobStatus::Delivered) continue;
    const ServiceTimes parts = decompose_times(j);
    const double leg = distance(layout.positions[static_cast<std::size_t>(j.via_depot)], j.position);
    CHECK(parts.service_min * nu == Catch::Approx(leg).margin(1e-9));
    checked += (parts.return_min == 0.0) ? 1 : 0;
  }
  CHECK(checked > 0);  // some assignments catch a vehicle already parked
}

TEST_CASE("arrival stream inside the replication") {
  SystemConfig cfg = small_config(24, 16);
  Trace t = run_replication(cfg, PolicyId::parse("fj+"), 2, 4000);
  REQUIRE(t.steps >= 100000);
  const double rate = static_cast<double>(t.jobs.size()) / t.end_clock_min;
  CHECK(rate == Catch::Approx(cfg.lambda.per_min).epsilon(0.04));
}

TEST_CASE("an undersized fleet is flagged unstable") {
  SystemConfig cfg = small_config(1, 1);
  ExperimentSpec spec;
  spec.replications = 3;
  spec.customers = 400;
  ExperimentResult res = run_experiment(cfg, PolicyId::parse("fj+"), spec);
  CHECK_FALSE(res.stable);
  CHECK(res.count(Stability::Unstable) == 3);
  CHECK_FALSE(res.delivery_time.has_value());
}

TEST_CASE("a comfortable fleet is flagged stable") {
  SystemConfig cfg = small_config(24, 16);
  ExperimentSpec spec;
  spec.replications = 3;
  spec.customers = 1500;
  ExperimentOutput out = run_experiment_full(cfg, PolicyId::parse("fj+"), spec);
  CHECK(out.result.stable);
  REQUIRE(out.result.delivery_time.has_value());
  CHECK(out.result.delivery_time->mean > 0.5);
  CHECK(out.result.delivery_time->mean < 2.0);
  CHECK(out.result.delivery_time->lo <= out.result.delivery_time->mean);
  CHECK(out.result.delivery_time->hi >= out.result.delivery_time->mean);
  REQUIRE(out.traces.size() == 3);
  CHECK(out.result.seeds == std::vector<std::uint64_t>{1, 2, 3});

  // per-replication means sit in the same range as the pooled estimate
  for (double m : out.result.replication_means) {
    if (std::isnan(m)) continue;
    CHECK(m > 0.5);
    CHECK(m < 2.0);
  }
}

TEST_CASE("experiment spec is validated") {
  SystemConfig cfg = small_config(4, 4);
  ExperimentSpec spec;
  spec.replications = 0;
  CHECK_THROWS_AS(run_experiment(cfg, PolicyId::parse("fj+"), spec), std::invalid_argument);
  SystemConfig bad = cfg;
  bad.delta_min = 1.0;
  CHECK_THROWS_AS(Simulation(bad, PolicyId::parse("fj+"), 1), std::invalid_argument);
  DepotLayout wrong;
  wrong.positions = {{1.0, 1.0}};
  CHECK_THROWS_AS(Simulation(cfg, PolicyId::parse("fj+"), 1, wrong), std::invalid_argument);
}

TEST_CASE("worker threads do not change results") {
  SystemConfig cfg = small_config(12, 16);
  ExperimentSpec spec;
  spec.replications = 4;
  spec.customers = 300;
  spec.threads = 1;
  ExperimentOutput serial = run_experiment_full(cfg, PolicyId::parse("fj+"), spec);
  spec.threads = 4;
  ExperimentOutput parallel = run_experiment_full(cfg, PolicyId::parse("fj+"), spec);
  REQUIRE(serial.traces.size() == parallel.traces.size());
  for (std::size_t r = 0; r < serial.traces.size(); ++r)
    CHECK(jobs_csv_string(serial.traces[r].jobs) == jobs_csv_string(parallel.traces[r].jobs));
  CHECK(serial.result.verdicts == parallel.result.verdicts);
}
