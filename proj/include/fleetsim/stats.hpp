#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace fleetsim {

inline double student_t_quantile(double p, double df) {
  return boost::math::quantile(boost::math::students_t(df), p);
}

struct PendingSample {
  double t_min = 0.0;
  long waiting = 0;
};

struct WelchResult {
  std::vector<double> curve;  // cross-replication average smoothed by a centred window
  long window_half = 0;
  long n_wu = 0;  // demand index of the first window centre inside the flat band
  bool converged = false;
};

namespace detail {

inline std::vector<double> moving_average(const std::vector<double>& s, long half) {
  const long n = static_cast<long>(s.size());
  const long w = 2 * half + 1;
  std::vector<double> out;
  if (n < w) return out;
  out.reserve(static_cast<std::size_t>(n - w + 1));
  double acc = std::accumulate(s.begin(), s.begin() + w, 0.0);
  out.push_back(acc / static_cast<double>(w));
  for (long i = w; i < n; ++i) {
    acc += s[static_cast<std::size_t>(i)] - s[static_cast<std::size_t>(i - w)];
    out.push_back(acc / static_cast<double>(w));
  }
  return out;
}

// First curve index from which every later value stays within the relative
// band around the final-quartile mean; the curve length if there is none.
inline long flat_from(const std::vector<double>& curve, double band) {
  const long c = static_cast<long>(curve.size());
  long q = (3 * c) / 4;
  if (q >= c) q = c - 1;
  double ref = 0.0;
  for (long j = q; j < c; ++j) ref += curve[static_cast<std::size_t>(j)];
  ref /= static_cast<double>(c - q);
  const double tol = band * std::abs(ref);
  long first = 0;
  for (long j = c - 1; j >= 0; --j) {
    if (std::abs(curve[static_cast<std::size_t>(j)] - ref) > tol) {
      first = j + 1;
      break;
    }
  }
  return first;
}

}  // namespace detail

// Warm-up estimation over replicated delivery-time series aligned by demand
// index: average across replications, smooth with a centred window of
// 2*window_half+1, and report the demand index after which the smoothed curve
// stays within the band around its final-quartile mean.
inline WelchResult welch_warmup(const std::vector<std::vector<double>>& per_rep,
                                long window_half = 500, double band = 0.05) {
  if (per_rep.size() < 2) throw std::invalid_argument("welch_warmup needs at least two replications");
  if (window_half < 1) throw std::invalid_argument("welch_warmup: window_half must be positive");
  std::size_t minlen = per_rep.front().size();
  for (const auto& s : per_rep) minlen = std::min(minlen, s.size());
  if (static_cast<long>(minlen) < 2 * window_half + 2)
    throw std::invalid_argument("welch_warmup: series shorter than one smoothing window plus one");
  std::vector<double> avg(minlen, 0.0);
  for (const auto& s : per_rep)
    for (std::size_t i = 0; i < minlen; ++i) avg[i] += s[i];
  for (double& v : avg) v /= static_cast<double>(per_rep.size());

  WelchResult r;
  r.window_half = window_half;
  r.curve = detail::moving_average(avg, window_half);
  const long c = static_cast<long>(r.curve.size());
  const long first = detail::flat_from(r.curve, band);
  if (first >= c) {
    r.n_wu = static_cast<long>(minlen);
    r.converged = false;
  } else {
    r.n_wu = first + window_half;
    r.converged = true;
  }
  return r;
}

struct MeanCI {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Replication/deletion estimate: discard the first n_wu demands of every
// replication, then form a Student-t interval over the replication means.
inline MeanCI replication_deletion(const std::vector<std::vector<double>>& per_rep, long n_wu,
                                   double confidence = 0.90) {
  if (per_rep.size() < 2)
    throw std::invalid_argument("replication_deletion needs at least two replications");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("replication_deletion: confidence must lie in (0, 1)");
  if (n_wu < 0) throw std::invalid_argument("replication_deletion: negative warm-up");
  std::vector<double> means;
  means.reserve(per_rep.size());
  for (const auto& s : per_rep) {
    if (static_cast<long>(s.size()) <= n_wu)
      throw std::invalid_argument("replication_deletion: a replication has no post-warm-up demands");
    double m = 0.0;
    for (std::size_t i = static_cast<std::size_t>(n_wu); i < s.size(); ++i) m += s[i];
    means.push_back(m / static_cast<double>(s.size() - static_cast<std::size_t>(n_wu)));
  }
  const double n = static_cast<double>(means.size());
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / n;
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double q = student_t_quantile(0.5 * (1.0 + confidence), n - 1.0);
  const double hw = q * sd / std::sqrt(n);
  return {grand, grand - hw, grand + hw};
}

enum class Stability { Stable, Unstable, Undecided };

struct InstabilityThresholds {
  double slope_confidence = 0.95;  // two-sided interval for the backlog drift
  double level_factor = 2.0;       // final-quarter mean must exceed factor * earlier + offset
  double level_offset = 5.0;
  double welch_band = 0.10;        // single-trace flatness band for the stable verdict
  long min_pending_points = 20;
  long min_deliveries = 100;
};

// Verdict on a single replication. Unstable needs a significantly positive
// drift in the backlog AND a level that actually grew; stable needs a drift
// interval containing zero or less AND a flat delivery-time curve. Anything
// else stays undecided and the caller runs the replication longer.
inline Stability detect_instability(const std::vector<PendingSample>& pending,
                                    const std::vector<double>& delivery_times,
                                    const InstabilityThresholds& th = {}) {
  const long n = static_cast<long>(pending.size());
  if (n < th.min_pending_points) return Stability::Undecided;

  const long m0 = n / 2;
  const long m = n - m0;
  double tbar = 0.0, ybar = 0.0;
  for (long i = m0; i < n; ++i) {
    tbar += pending[static_cast<std::size_t>(i)].t_min;
    ybar += static_cast<double>(pending[static_cast<std::size_t>(i)].waiting);
  }
  tbar /= static_cast<double>(m);
  ybar /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (long i = m0; i < n; ++i) {
    const double dx = pending[static_cast<std::size_t>(i)].t_min - tbar;
    sxy += dx * (static_cast<double>(pending[static_cast<std::size_t>(i)].waiting) - ybar);
    sxx += dx * dx;
  }
  if (sxx <= 0.0) return Stability::Undecided;
  const double slope = sxy / sxx;
  double sse = 0.0;
  for (long i = m0; i < n; ++i) {
    const double fit = ybar + slope * (pending[static_cast<std::size_t>(i)].t_min - tbar);
    const double e = static_cast<double>(pending[static_cast<std::size_t>(i)].waiting) - fit;
    sse += e * e;
  }
  const double se = std::sqrt(sse / static_cast<double>(m - 2) / sxx);
  const double q = student_t_quantile(0.5 * (1.0 + th.slope_confidence), static_cast<double>(m - 2));
  const bool drift_up = slope - q * se > 0.0;

  auto quarter_mean = [&](long lo, long hi) {
    double s = 0.0;
    for (long i = lo; i < hi; ++i) s += static_cast<double>(pending[static_cast<std::size_t>(i)].waiting);
    return s / static_cast<double>(hi - lo);
  };
  const double second = quarter_mean(n / 4, n / 2);
  const double final_q = quarter_mean((3 * n) / 4, n);
  const bool grew = final_q > th.level_factor * second + th.level_offset;

  if (drift_up && grew) return Stability::Unstable;

  bool flat = false;
  const long d = static_cast<long>(delivery_times.size());
  if (d >= th.min_deliveries) {
    const long half = std::max(1L, std::min(500L, (d - 2) / 4));
    const auto curve = detail::moving_average(delivery_times, half);
    if (!curve.empty()) flat = detail::flat_from(curve, th.welch_band) < static_cast<long>(curve.size());
  }
  if (!drift_up && flat) return Stability::Stable;
  return Stability::Undecided;
}

struct ExperimentResult {
  std::vector<std::uint64_t> seeds;
  std::vector<Stability> verdicts;         // one per replication
  std::vector<double> replication_means;   // post-warm-up mean per replication (NaN if unusable)
  long n_wu = 0;
  bool welch_converged = false;
  std::optional<MeanCI> delivery_time;     // absent when no stable estimate exists
  bool stable = false;  // stable verdicts outnumber unstable ones and reach a 30% quorum

  long count(Stability s) const {
    long c = 0;
    for (Stability v : verdicts) c += (v == s) ? 1 : 0;
    return c;
  }
};

}  // namespace fleetsim
