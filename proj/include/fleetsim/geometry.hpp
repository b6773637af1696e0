#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fleetsim/rng.hpp"

namespace fleetsim {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Square operating region with the origin at its lower-left corner.
struct ServiceArea {
  double side_km = 4.0;

  double area_km2() const { return side_km * side_km; }
  bool contains(Point p) const {
    return p.x >= 0.0 && p.x <= side_km && p.y >= 0.0 && p.y <= side_km;
  }
  void validate() const {
    if (!(side_km > 0.0)) throw std::invalid_argument("service area side must be positive");
  }
};

// Mean distance from a uniform point of the unit square to its centre,
// (sqrt(2) + ln(1 + sqrt(2))) / 6. A k x k grid of cell centres over a square
// of side s yields a mean nearest-site distance of this constant times s/k.
inline constexpr double kUnitSquareCentroidDistance = 0.3825978582321064;

enum class PlacementMethod { AnalyticGrid, Numeric };

struct DepotLayout {
  std::vector<Point> positions;
  double h_km = 0.0;  // mean distance from a uniform point to its nearest depot
  PlacementMethod method = PlacementMethod::AnalyticGrid;

  int count() const { return static_cast<int>(positions.size()); }
};

inline int nearest_depot(Point p, const DepotLayout& layout, long* comparisons = nullptr) {
  if (layout.positions.empty()) throw std::invalid_argument("layout has no depots");
  int best = 0;
  double best_d = distance(p, layout.positions[0]);
  for (int l = 1; l < layout.count(); ++l) {
    const double d = distance(p, layout.positions[l]);
    if (d < best_d) {
      best_d = d;
      best = l;
    }
  }
  if (comparisons) *comparisons += layout.count();
  return best;
}

// Lower bound on the mean nearest-depot distance achievable with `depots`
// sites in a region of the given area: (2/3) * sqrt(area / (pi * depots)).
inline double zemel_lower_bound(double area_km2, int depots) {
  if (!(area_km2 > 0.0)) throw std::invalid_argument("area must be positive");
  if (depots < 1) throw std::invalid_argument("depot count must be at least 1");
  return (2.0 / 3.0) * std::sqrt(area_km2 / (std::numbers::pi * depots));
}

struct MultimedianEstimate {
  double value_km = 0.0;
  double std_error_km = 0.0;
  long samples = 0;
};

// Stratified Monte Carlo estimate of the mean nearest-depot distance: one
// jittered sample per cell of an m x m grid with m = floor(sqrt(samples)).
// The reported standard error uses the plain i.i.d. formula, which is
// conservative under stratification.
inline MultimedianEstimate multimedian_value(const DepotLayout& layout, const ServiceArea& area,
                                             long samples, Rng& rng) {
  area.validate();
  if (layout.positions.empty()) throw std::invalid_argument("layout has no depots");
  if (samples < 10000) throw std::invalid_argument("multimedian estimate needs at least 1e4 samples");
  const long m = static_cast<long>(std::floor(std::sqrt(static_cast<double>(samples))));
  const double cell = area.side_km / static_cast<double>(m);
  double mean = 0.0, m2 = 0.0;
  long n = 0;
  for (long i = 0; i < m; ++i) {
    for (long j = 0; j < m; ++j) {
      const Point p{(static_cast<double>(i) + rng.uniform01()) * cell,
                    (static_cast<double>(j) + rng.uniform01()) * cell};
      double best = distance(p, layout.positions[0]);
      for (std::size_t l = 1; l < layout.positions.size(); ++l)
        best = std::min(best, distance(p, layout.positions[l]));
      ++n;
      const double d1 = best - mean;
      mean += d1 / static_cast<double>(n);
      m2 += d1 * (best - mean);
    }
  }
  const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

namespace detail {

// Geometric median of a point cloud by Weiszfeld iteration.
inline Point weiszfeld(const std::vector<Point>& pts, Point start) {
  Point y = start;
  for (int it = 0; it < 100; ++it) {
    double sx = 0.0, sy = 0.0, sw = 0.0;
    for (const Point& p : pts) {
      const double d = distance(p, y);
      if (d < 1e-9) continue;  // sample coincides with the current estimate
      const double w = 1.0 / d;
      sx += p.x * w;
      sy += p.y * w;
      sw += w;
    }
    if (sw == 0.0) return y;
    const Point next{sx / sw, sy / sw};
    const double moved = distance(next, y);
    y = next;
    if (moved < 1e-9) break;
  }
  return y;
}

}  // namespace detail

struct PlacementOptions {
  int restarts = 16;
  long samples = 20000;      // optimisation sample-set size (non-square counts)
  long report_samples = 250000;  // stratified sample count for the stored h_km
};

// Depot siting that minimises the mean nearest-depot distance. Perfect-square
// counts use the optimal k x k grid of cell centres and the closed-form value;
// other counts run Lloyd iterations (assign samples to the nearest depot, move
// each depot to its cell's geometric median) from random restarts.
inline DepotLayout place_depots(const ServiceArea& area, int depots, Rng& rng,
                                const PlacementOptions& opt = {}) {
  area.validate();
  if (depots < 1) throw std::invalid_argument("depot count must be at least 1");
  const double side = area.side_km;

  const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(depots))));
  if (k * k == depots) {
    DepotLayout layout;
    layout.method = PlacementMethod::AnalyticGrid;
    const double cell = side / static_cast<double>(k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        layout.positions.push_back({(i + 0.5) * cell, (j + 0.5) * cell});
    layout.h_km = kUnitSquareCentroidDistance * side / static_cast<double>(k);
    return layout;
  }

  std::vector<Point> pts(static_cast<std::size_t>(opt.samples));
  for (Point& p : pts) p = {rng.uniform(0.0, side), rng.uniform(0.0, side)};

  const double tol = 1e-4 * side;
  std::vector<Point> best_sites;
  double best_h = std::numeric_limits<double>::infinity();
  std::vector<int> owner(pts.size());
  for (int restart = 0; restart < opt.restarts; ++restart) {
    std::vector<Point> sites(static_cast<std::size_t>(depots));
    for (Point& s : sites) s = pts[static_cast<std::size_t>(rng.below(pts.size()))];
    double prev_h = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
      double h = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        int b = 0;
        double bd = distance(pts[i], sites[0]);
        for (int l = 1; l < depots; ++l) {
          const double d = distance(pts[i], sites[static_cast<std::size_t>(l)]);
          if (d < bd) {
            bd = d;
            b = l;
          }
        }
        owner[i] = b;
        h += bd;
      }
      h /= static_cast<double>(pts.size());
      if (prev_h - h < tol && iter > 0) {
        prev_h = h;
        break;
      }
      prev_h = h;
      std::vector<std::vector<Point>> cells(static_cast<std::size_t>(depots));
      for (std::size_t i = 0; i < pts.size(); ++i)
        cells[static_cast<std::size_t>(owner[i])].push_back(pts[i]);
      for (int l = 0; l < depots; ++l) {
        auto& cl = cells[static_cast<std::size_t>(l)];
        if (cl.empty()) {
          sites[static_cast<std::size_t>(l)] = pts[static_cast<std::size_t>(rng.below(pts.size()))];
          continue;
        }
        Point centroid{0.0, 0.0};
        for (const Point& p : cl) {
          centroid.x += p.x;
          centroid.y += p.y;
        }
        centroid.x /= static_cast<double>(cl.size());
        centroid.y /= static_cast<double>(cl.size());
        sites[static_cast<std::size_t>(l)] = detail::weiszfeld(cl, centroid);
      }
    }
    if (prev_h < best_h) {
      best_h = prev_h;
      best_sites = sites;
    }
  }

  DepotLayout layout;
  layout.method = PlacementMethod::Numeric;
  layout.positions = best_sites;
  layout.h_km = multimedian_value(layout, area, std::max(opt.report_samples, 10000L), rng).value_km;
  return layout;
}

inline std::string placement_method_name(PlacementMethod m) {
  return m == PlacementMethod::AnalyticGrid ? "analytic-grid" : "numeric";
}

inline nlohmann::ordered_json layout_to_json(const DepotLayout& layout, const ServiceArea& area) {
  nlohmann::ordered_json j;
  j["side_km"] = area.side_km;
  auto arr = nlohmann::ordered_json::array();
  for (const Point& p : layout.positions) arr.push_back({p.x, p.y});
  j["depots"] = std::move(arr);
  j["H_L_km"] = layout.h_km;
  j["method"] = placement_method_name(layout.method);
  return j;
}

inline DepotLayout layout_from_json(const nlohmann::json& j, ServiceArea* area_out = nullptr) {
  DepotLayout layout;
  if (area_out) area_out->side_km = j.at("side_km").get<double>();
  for (const auto& d : j.at("depots")) layout.positions.push_back({d.at(0).get<double>(), d.at(1).get<double>()});
  layout.h_km = j.at("H_L_km").get<double>();
  layout.method = j.at("method").get<std::string>() == "analytic-grid" ? PlacementMethod::AnalyticGrid
                                                                       : PlacementMethod::Numeric;
  if (layout.positions.empty()) throw std::invalid_argument("layout JSON lists no depots");
  return layout;
}

}  // namespace fleetsim
