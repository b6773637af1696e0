#pragma once

namespace fleetsim {

// Demand intensity. Stored per minute; both factories are exact scalings of
// one another, so formulas downstream cannot be fed a mismatched time base.
struct ArrivalRate {
  double per_min = 0.0;

  static ArrivalRate per_minute(double v) { return {v}; }
  static ArrivalRate per_hour(double v) { return {v / 60.0}; }
  double per_hour() const { return per_min * 60.0; }
};

struct Speed {
  double kmh = 0.0;

  static Speed km_per_hour(double v) { return {v}; }
  double km_per_min() const { return kmh / 60.0; }
};

}  // namespace fleetsim
