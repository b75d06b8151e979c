#pragma once

// Shared helpers for the test suites: inline dataset construction and a
// random-corpus generator with mixed binary/continuous mediators and outcomes.

#include <string>
#include <vector>

#include "ccm/dataset.hpp"
#include "ccm/rng.hpp"

namespace test_support {

inline ccm::ObservationRow row(int t1, int t2, double m, double y) {
  return ccm::ObservationRow{t1, t2, m, y};
}

// Builds a dataset from per-arm (m, y) pairs: control, arm1, arm2.
inline ccm::Dataset make_dataset(const std::vector<std::pair<double, double>>& control,
                                 const std::vector<std::pair<double, double>>& arm1,
                                 const std::vector<std::pair<double, double>>& arm2) {
  ccm::Dataset d;
  for (const auto& [m, y] : control) d.rows.push_back(row(0, 0, m, y));
  for (const auto& [m, y] : arm1) d.rows.push_back(row(1, 0, m, y));
  for (const auto& [m, y] : arm2) d.rows.push_back(row(0, 1, m, y));
  return d;
}

inline ccm::Dataset fixture_f1() {
  return make_dataset({{0, 0}, {0, 0}, {1, 1}}, {{1, 1}, {0, 0}, {1, 1}},
                      {{1, 1}, {1, 1}, {1, 0}});
}

inline ccm::Dataset fixture_f2() {
  return make_dataset({{0, 0}, {1, 1}, {2, 2}}, {{0, 0}, {1, 1}, {2, 2}},
                      {{0, 0}, {1, 2}, {2, 4}});
}

// Random valid dataset: n in [9, 900], at least 3 rows per arm, mediator and
// outcome each independently binary or continuous. Guarantees non-constant
// mediator within every arm so that interacted fits are identified.
inline ccm::Dataset random_dataset(ccm::CounterRng& rng) {
  const bool m_binary = rng.next_double() < 0.5;
  const bool y_binary = rng.next_double() < 0.5;
  ccm::Dataset d;
  for (int arm = 0; arm < 3; ++arm) {
    const int n_arm = 3 + static_cast<int>(rng.below(298));
    const int t1 = arm == 1 ? 1 : 0;
    const int t2 = arm == 2 ? 1 : 0;
    const double m_shift = rng.uniform(-1.0, 1.0) + arm;
    const double m_prob = rng.uniform(0.2, 0.8);
    const double slope = rng.uniform(-2.0, 2.0);
    const double y_shift = rng.uniform(-1.0, 1.0);
    int first = d.n();
    for (int i = 0; i < n_arm; ++i) {
      double m = m_binary ? (rng.next_double() < m_prob ? 1.0 : 0.0)
                          : m_shift + rng.normal(0.0, 1.0);
      double y_latent = y_shift + slope * m + rng.normal(0.0, 1.0);
      double y = y_binary ? (y_latent > y_shift ? 1.0 : 0.0) : y_latent;
      d.rows.push_back(row(t1, t2, m, y));
    }
    // Force within-arm mediator variation (binary draws can collapse).
    bool constant = true;
    for (int i = first + 1; i < d.n(); ++i)
      if (d.rows[i].m != d.rows[first].m) {
        constant = false;
        break;
      }
    if (constant) d.rows[first].m = m_binary ? 1.0 - d.rows[first].m : d.rows[first].m + 1.0;
  }
  return d;
}

}  // namespace test_support
