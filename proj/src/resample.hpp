#pragma once

// Internal bootstrap engine shared by the covariance estimator, the interval
// and test machinery, and the Monte Carlo driver. One pass draws b resamples,
// refits the models on each, and evaluates any mix of named statistics, a
// custom callback, and the coefficient vector. Replicate r always uses the
// RNG stream (seed, resample-purpose, r) and writes into slot r, so results
// are bit-identical for any thread count.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ccm/dataset.hpp"
#include "ccm/inference.hpp"
#include "fit_internal.hpp"

namespace ccm::detail {

// Refits available on one resample; absent when the design block was
// rank-deficient on that resample.
struct ResampleFits {
  std::optional<MediatorFit> med;
  std::optional<TotalFit> tot;
  std::optional<OutcomeFit> out_plain;
  std::optional<OutcomeFit> out_inter;
};

bool statistic_uses_alpha(Statistic s);
bool statistic_uses_tau(Statistic s);
bool statistic_uses_beta(Statistic s);
bool statistic_uses_omega(Statistic s);

// Statistic value on one refit; nullopt when any required fit is missing or
// the value is nonfinite (zero denominator).
std::optional<double> evaluate_statistic(Statistic s, const ResampleFits& f);

struct EngineSpec {
  std::vector<Statistic> stats;
  // Optional extra evaluation with full access to the loaded scratch (used by
  // the interaction test, which needs per-row residuals). Exceptions and
  // nonfinite values count as drops.
  std::function<std::optional<double>(FitScratch&)> custom;
  int b = 0;
  std::uint64_t seed = 0;
  bool stratified = false;
  bool collect_coefs = false;     // gather {alpha1,alpha2,tau1,tau2[,omega1,omega2]}
  bool coefs_with_omega = false;  // coefficient rows require the interacted fit
};

struct EngineResult {
  // stat_values[k]: defined replicate values of spec.stats[k], in replicate
  // order (callers sort if they need quantiles).
  std::vector<std::vector<double>> stat_values;
  std::vector<int> stat_dropped;
  std::vector<double> custom_values;
  int custom_dropped = 0;
  Eigen::MatrixXd coef_rows;  // usable resamples x 6 (omega columns 0 unless requested)
  int coef_dropped = 0;
};

EngineResult run_resampling(const Dataset& d, const EngineSpec& spec);

// Empirical covariance matrix of collected coefficient rows. Throws
// ResamplingError when fewer than 90% of the requested resamples yielded a
// usable row; sets the >1% drop-rate warning.
CoefficientCovariances empirical_covariances(const Eigen::MatrixXd& coef_rows,
                                             int b_reps, int dropped,
                                             bool has_omega);

// CCM_THREADS when set to a positive integer, otherwise the hardware count.
int resampling_threads();

}  // namespace ccm::detail
