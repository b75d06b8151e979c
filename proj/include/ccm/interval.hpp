#pragma once

#include <string>

namespace ccm {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return lo <= v && v <= hi; }
  bool excludes(double v) const { return lo > v || hi < v; }
};

// Result of the denominator gate (produced by the inference layer): the
// denominator estimand must be statistically distinguishable from zero
// before a ratio estimate is meaningful.
struct GateResult {
  bool passed = false;
  double alpha = 0.05;
  Interval denominator_ci{};
  std::string message;
};

}  // namespace ccm
