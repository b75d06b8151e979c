#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ccm/dataset.hpp"

namespace ccm {

// Normal distribution spec; the second field is a VARIANCE. Zero variance
// means a point mass drawn without consuming randomness, so degenerate
// configurations keep the draw stream aligned with their general forms.
struct NormalSpec {
  double mean = 0.0;
  double var = 0.0;
};

struct InteractionSpecs {
  NormalSpec gamma1;
  NormalSpec gamma2;
};

// Data-generating process for a three-arm experiment with a single mediator
// and a deliberately omitted confounder X:
//   M = pi + alpha1 T1 + alpha2 T2 + psi X
//   Y = lambda + delta1 T1 + delta2 T2 + beta M [+ gamma1 T1 M + gamma2 T2 M]
//       + phi X
// All coefficients are drawn per unit; X ~ Uniform(x_lo, x_hi) feeds both
// equations but is withheld from the emitted Dataset.
struct SimulationConfig {
  int n_per_arm = 100;
  NormalSpec pi{0.0, 1.0};
  NormalSpec lambda{0.0, 1.0};
  NormalSpec alpha1{4.0, 2.0};
  NormalSpec alpha2{10.0, 2.0};
  NormalSpec beta{3.0, 2.0};
  NormalSpec delta1{5.0, 2.0};
  NormalSpec delta2{5.0, 2.0};
  NormalSpec psi{4.0, 2.0};
  NormalSpec phi{4.0, 2.0};
  double x_lo = 0.0;
  double x_hi = 5.0;
  std::optional<InteractionSpecs> interactions;
  std::uint64_t seed = 0;
};

// 100 units per arm, no interaction terms.
SimulationConfig preset_no_interaction();

// 1000 units per arm with treatment-by-mediator interactions; the gamma
// means are chosen so the arm-2 mediated effect and interaction both exceed
// arm 1's, which makes the ratio estimators conservative.
SimulationConfig preset_interacted();

// One synthetic dataset. The replicate seed should come from derive_seed so
// replicates are independent streams. When x_out is non-null the per-row
// confounder values are appended to it (test hook for the bias mechanism).
Dataset generate_no_interaction(const SimulationConfig& cfg,
                                std::uint64_t replicate_seed,
                                std::vector<double>* x_out = nullptr);
Dataset generate_with_interaction(const SimulationConfig& cfg,
                                  std::uint64_t replicate_seed,
                                  std::vector<double>* x_out = nullptr);

// Population values of the mediated effects, total effects, and both ratio
// estimands under cfg. Without interactions these are exact products of the
// parameter means; with interactions the total-effect pathways have no closed
// form here, so values come from a large brute-force simulation and the
// method field says so.
struct TrueEstimands {
  double acme1 = 0.0;  // treated-condition forms when treated_forms is set
  double acme2 = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  double estimand1 = 0.0;
  double estimand2 = 0.0;
  bool treated_forms = false;
  std::string method;  // "analytic" or "simulation"
};

TrueEstimands true_estimands(const SimulationConfig& cfg);

struct McEstimandRecord {
  std::string label;
  double mean_estimate = 0.0;
  double true_value = 0.0;
  double coverage_95 = 0.0;
  double mean_ci_width = 0.0;
};

struct McReplicateRow {
  int replicate = 0;
  std::string label;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool covered = false;
};

struct McSummary {
  int r_reps = 0;  // completed replicates
  int failures = 0;
  std::vector<McEstimandRecord> records;
  // Convenience mirrors of the naive mediated-effect records.
  double mean_bias_acme1 = 0.0;
  double mean_bias_acme2 = 0.0;
  double coverage_acme1 = 0.0;
  double coverage_acme2 = 0.0;
  TrueEstimands truths;
  // Share of replicates where the conservatism check held (interacted
  // configurations only; NaN otherwise).
  double diagnostic_holds_rate = 0.0;
  std::vector<McReplicateRow> replicate_table;

  const McEstimandRecord& record(const std::string& label) const;
};

// Monte Carlo study: per replicate, generate a dataset, fit, compute the
// naive mediated-effect estimates and both CCM estimands (simple and
// adjusted), and bootstrap percentile intervals; aggregates bias and coverage
// against true_estimands. Adjusted records reuse the simple estimate's
// percentile interval; their covariances come from the analytic scheme
// without interactions and from the replicate's own resamples with them.
// Replicates that fail (degenerate or unreliable refits) are excluded and
// counted; more than 5% failures aborts the study.
McSummary monte_carlo(const SimulationConfig& cfg, int r_reps, int b_boot,
                      std::uint64_t seed);

// One CSV row per replicate per record: replicate,label,estimate,ci_lo,
// ci_hi,covered.
void write_replicate_table(std::ostream& os, const McSummary& summary);

}  // namespace ccm
