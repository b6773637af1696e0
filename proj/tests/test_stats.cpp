#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fleetsim/rng.hpp"
#include "fleetsim/stats.hpp"

using namespace fleetsim;

namespace {

// Box-Muller on top of the project generator keeps these draws reproducible.
double gaussian(Rng& rng, double mu, double sigma) {
  double u1 = rng.uniform01();
  while (u1 <= 0.0) u1 = rng.uniform01();
  const double u2 = rng.uniform01();
  return mu + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

std::vector<PendingSample> pending_from(const std::vector<double>& levels, double dt) {
  std::vector<PendingSample> out;
  out.reserve(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i)
    out.push_back({dt * static_cast<double>(i + 1), std::lround(std::max(0.0, levels[i]))});
  return out;
}

}  // namespace

TEST_CASE("student t quantiles") {
  CHECK(student_t_quantile(0.95, 3.0) == Catch::Approx(2.3533634).epsilon(1e-6));
  CHECK(student_t_quantile(0.95, 15.0) == Catch::Approx(1.7530504).epsilon(1e-6));
  CHECK(student_t_quantile(0.975, 9.0) == Catch::Approx(2.2621572).epsilon(1e-6));
  CHECK(student_t_quantile(0.5, 7.0) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("moving average") {
  const std::vector<double> s{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0};
  auto curve = detail::moving_average(s, 1);
  REQUIRE(curve.size() == 5);
  for (std::size_t i = 0; i < curve.size(); ++i)
    CHECK(curve[i] == Catch::Approx(static_cast<double>(i) + 2.0));
  CHECK(detail::moving_average({1.0, 2.0}, 1).size() == 0);  // shorter than one window
}

TEST_CASE("flat-from scan") {
  // flat at 10 except for a bump ending at index 6
  std::vector<double> curve(40, 10.0);
  for (std::size_t i = 0; i < 7; ++i) curve[i] = 14.0;
  CHECK(detail::flat_from(curve, 0.05) == 7);
  CHECK(detail::flat_from(std::vector<double>(40, 10.0), 0.05) == 0);
  std::vector<double> rising;
  for (int i = 0; i < 40; ++i) rising.push_back(static_cast<double>(i));
  CHECK(detail::flat_from(rising, 0.001) == 40);  // never settles
}

TEST_CASE("warm-up estimation") {
  SECTION("input validation") {
    std::vector<std::vector<double>> one{{1.0, 2.0, 3.0}};
    CHECK_THROWS_AS(welch_warmup(one, 1), std::invalid_argument);
    std::vector<std::vector<double>> two{{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}};
    CHECK_THROWS_AS(welch_warmup(two, 5), std::invalid_argument);  // series shorter than window
    CHECK_THROWS_AS(welch_warmup(two, 0), std::invalid_argument);
  }

  SECTION("a stationary process needs no warm-up beyond the window") {
    Rng rng(17);
    std::vector<std::vector<double>> reps;
    for (int r = 0; r < 5; ++r) {
      std::vector<double> s;
      for (int i = 0; i < 3000; ++i) s.push_back(gaussian(rng, 4.0, 0.3));
      reps.push_back(std::move(s));
    }
    WelchResult w = welch_warmup(reps, 200);
    CHECK(w.converged);
    CHECK(w.n_wu == 200);  // flat from the first window centre
    CHECK(w.window_half == 200);
    CHECK(w.curve.size() == 3000 - 401 + 1);
  }

  SECTION("an exponential transient is cut near its settling point") {
    Rng rng(23);
    std::vector<std::vector<double>> reps;
    for (int r = 0; r < 10; ++r) {
      std::vector<double> s;
      for (int i = 0; i < 6000; ++i) {
        const double drift = 3.0 * std::exp(-static_cast<double>(i) / 400.0);
        s.push_back(gaussian(rng, 2.0 + drift, 0.25));
      }
      reps.push_back(std::move(s));
    }
    WelchResult w = welch_warmup(reps, 100);
    CHECK(w.converged);
    // the 5% band around 2.0 is left once the drift falls under ~0.1,
    // i.e. around index 400*ln(30) ~ 1360, give or take smoothing
    CHECK(w.n_wu > 600);
    CHECK(w.n_wu < 2400);
  }

  SECTION("a never-settling series reports non-convergence") {
    std::vector<std::vector<double>> reps;
    for (int r = 0; r < 3; ++r) {
      std::vector<double> s;
      for (int i = 0; i < 2000; ++i) s.push_back(static_cast<double>(i));
      reps.push_back(std::move(s));
    }
    WelchResult w = welch_warmup(reps, 50);
    CHECK_FALSE(w.converged);
    CHECK(w.n_wu == 2000);
  }
}

TEST_CASE("replication deletion") {
  SECTION("input validation") {
    CHECK_THROWS_AS(replication_deletion({{1.0, 2.0}}, 0), std::invalid_argument);
    CHECK_THROWS_AS(replication_deletion({{1.0}, {1.0}}, 1), std::invalid_argument);
    CHECK_THROWS_AS(replication_deletion({{1.0, 2.0}, {1.0, 2.0}}, 0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(replication_deletion({{1.0, 2.0}, {1.0, 2.0}}, -1), std::invalid_argument);
  }

  SECTION("degenerate spread gives a point interval") {
    std::vector<std::vector<double>> reps{{2.0, 3.0, 3.0}, {1.0, 3.0, 3.0}};
    MeanCI ci = replication_deletion(reps, 1);
    CHECK(ci.mean == Catch::Approx(3.0));
    CHECK(ci.lo == Catch::Approx(3.0));
    CHECK(ci.hi == Catch::Approx(3.0));
  }

  SECTION("interval width follows the t quantile and replication count") {
    // constant series make the replication means exact, so the ratio is closed-form
    auto reps_with_means = [](const std::vector<double>& means) {
      std::vector<std::vector<double>> reps;
      for (double m : means) reps.push_back({m, m, m, m});
      return reps;
    };
    const std::vector<double> four{2.9, 3.1, 2.8, 3.2};
    std::vector<double> sixteen;
    for (int i = 0; i < 4; ++i)
      for (double m : four) sixteen.push_back(m);
    MeanCI small = replication_deletion(reps_with_means(four), 0);
    MeanCI large = replication_deletion(reps_with_means(sixteen), 0);
    CHECK(small.mean == Catch::Approx(3.0));
    CHECK(large.mean == Catch::Approx(3.0));
    // repeating the four means quadruples the sum of squares: sd4/sd16 = sqrt(5/4)
    const double expected = (student_t_quantile(0.95, 3.0) / student_t_quantile(0.95, 15.0)) *
                            2.0 * std::sqrt(1.25);
    CHECK((small.hi - small.lo) / (large.hi - large.lo) == Catch::Approx(expected).epsilon(1e-9));
  }

  SECTION("ninety percent intervals cover the true mean") {
    Rng rng(31);
    int covered = 0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<std::vector<double>> reps;
      for (int r = 0; r < 8; ++r) {
        std::vector<double> s;
        for (int i = 0; i < 150; ++i) s.push_back(gaussian(rng, 3.0, 0.5));
        reps.push_back(std::move(s));
      }
      MeanCI ci = replication_deletion(reps, 30);
      covered += (ci.lo <= 3.0 && 3.0 <= ci.hi) ? 1 : 0;
    }
    CHECK(covered >= 85);
  }
}

TEST_CASE("instability verdicts") {
  InstabilityThresholds th;

  SECTION("too little data stays undecided") {
    std::vector<PendingSample> p = pending_from(std::vector<double>(10, 5.0), 3.2);
    CHECK(detect_instability(p, {}, th) == Stability::Undecided);
  }

  SECTION("linear backlog growth is unstable") {
    Rng rng(47);
    std::vector<double> levels;
    for (int i = 0; i < 400; ++i)
      levels.push_back(0.5 * static_cast<double>(i) + 4.0 * rng.uniform01());
    std::vector<double> deliveries(300, 5.0);
    CHECK(detect_instability(pending_from(levels, 3.2), deliveries, th) == Stability::Unstable);
  }

  SECTION("flat noisy backlog with settled delivery times is stable") {
    Rng rng(53);
    std::vector<double> levels;
    for (int i = 0; i < 400; ++i) levels.push_back(6.0 + 3.0 * rng.uniform01());
    std::vector<double> deliveries;
    for (int i = 0; i < 1000; ++i) deliveries.push_back(gaussian(rng, 1.2, 0.1));
    CHECK(detect_instability(pending_from(levels, 3.2), deliveries, th) == Stability::Stable);
  }

  SECTION("flat backlog without delivery evidence stays undecided") {
    Rng rng(59);
    std::vector<double> levels;
    for (int i = 0; i < 400; ++i) levels.push_back(6.0 + 3.0 * rng.uniform01());
    CHECK(detect_instability(pending_from(levels, 3.2), {}, th) == Stability::Undecided);
  }

  SECTION("growth without significance stays undecided") {
    // too noisy for the slope interval to exclude zero over the final half
    Rng rng(61);
    std::vector<double> levels;
    for (int i = 0; i < 60; ++i)
      levels.push_back(20.0 + 0.05 * static_cast<double>(i) + 30.0 * rng.uniform01());
    std::vector<double> deliveries(80, 5.0);
    CHECK(detect_instability(pending_from(levels, 3.2), deliveries, th) == Stability::Undecided);
  }
}

TEST_CASE("experiment verdict counting") {
  ExperimentResult r;
  r.verdicts = {Stability::Stable, Stability::Unstable, Stability::Stable, Stability::Undecided};
  CHECK(r.count(Stability::Stable) == 2);
  CHECK(r.count(Stability::Unstable) == 1);
  CHECK(r.count(Stability::Undecided) == 1);
}
