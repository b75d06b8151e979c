#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccm/adjust.hpp"
#include "ccm/dataset.hpp"
#include "ccm/estimators.hpp"
#include "ccm/interval.hpp"
#include "ccm/least_squares.hpp"

namespace ccm {

// Statistics the resampling engine can evaluate on a refitted resample.
enum class Statistic : int {
  tau1,
  tau2,
  tau_diff,  // tau2 - tau1
  beta,
  acme1,
  acme2,
  acme1_treated,
  acme2_treated,
  pm1,
  pm2,
  pm1_treated,
  pm2_treated,
  estimand1,
  estimand2,
  estimand1_treated,
  estimand2_treated,
};

const char* to_string(Statistic s);

// Replicate values of one statistic across bootstrap resamples, sorted
// ascending. Resamples where the statistic was undefined (rank-deficient
// refit, zero denominator, nonfinite value) are dropped and counted.
struct BootstrapDistribution {
  Statistic statistic = Statistic::estimand1;
  std::string stat_label;
  std::vector<double> values;  // sorted ascending
  int b_requested = 0;
  int b_valid = 0;
  std::uint64_t seed = 0;
  bool stratified = false;

  int dropped() const { return b_requested - b_valid; }
};

struct BootstrapOptions {
  int b_reps = 2000;
  std::uint64_t seed = 0;
  bool stratified = false;  // default resamples whole rows, ignoring arm labels
};

// Nonparametric bootstrap of one statistic: every resample refits all models
// and re-evaluates the statistic. Throws ResamplingError when fewer than 90%
// of the requested resamples yield a defined value.
BootstrapDistribution bootstrap_distribution(const Dataset& d, Statistic s,
                                             const BootstrapOptions& opt);

// Joint bootstrap: all statistics are evaluated on the same resample stream,
// so the runs share refits. The 90% validity floor is enforced per statistic.
std::vector<BootstrapDistribution> bootstrap_distributions(
    const Dataset& d, const std::vector<Statistic>& stats,
    const BootstrapOptions& opt);

// Equal-tailed percentile interval: empirical alpha/2 and 1 - alpha/2
// quantiles with linear interpolation between order statistics at rank
// 1 + (b_valid - 1)q. Requires at least 100 valid replicate values.
Interval percentile_ci(const BootstrapDistribution& dist, double alpha);

// Checks that the denominator of a ratio estimand is resolved away from zero:
// bootstraps the arm-1 mediated effect (or its proportion-of-total form) and
// passes iff the percentile interval excludes zero. Ratio estimates are only
// meaningful behind a passed gate; the gate reports rather than throws.
GateResult denominator_gate(const Dataset& d, EstimandId id, double alpha,
                            const BootstrapOptions& opt);

// First-order (delta-method) interval for a ratio estimand: symmetric
// normal-quantile interval around the simple estimate with the standard error
// induced by the coefficient covariance matrix. Refuses to produce an
// interval unless the supplied gate passed, since the linearization is
// meaningless when the denominator straddles zero.
Interval delta_ci(const FitBundle& f, const CoefficientCovariances& c,
                  EstimandId id, double alpha, const GateResult& gate);

// Gradient of the simplified ratio estimand in the coefficient order
// {alpha1, alpha2, tau1, tau2, omega1, omega2}; exposed for testing.
Eigen::Matrix<double, 6, 1> delta_gradient(const FitBundle& f, EstimandId id);

enum class TestMethod { wald_bootstrap, wald_chisq };

const char* to_string(TestMethod m);

struct TestResult {
  double statistic = 0.0;  // joint Wald statistic for both interaction terms
  double p_value = 1.0;
  bool reject = false;
  TestMethod method = TestMethod::wald_bootstrap;
  int b_valid = 0;  // bootstrap calibration only
  int dropped = 0;
};

// Joint test that both treatment-by-mediator interaction coefficients are
// zero, via a Wald statistic with heteroskedasticity-robust coefficient
// covariance. The default reference distribution bootstraps the statistic
// recentred at the fitted coefficients; a chi-squared (2 df) reference is
// available as a cheaper alternative.
TestResult interaction_test(const Dataset& d, double alpha,
                            const BootstrapOptions& opt,
                            TestMethod method = TestMethod::wald_bootstrap);

struct DiagnosticResult {
  bool holds = false;
  double lhs = 0.0;    // arm-2 slope of y on m times arm-2 mediator variance
  double rhs = 0.0;    // arm-1 slope of y on m times arm-1 mediator variance
  std::string caveat;  // fixed interpretation note
};

// Partial empirical check of the condition under which the ratio estimators
// remain conservative (attenuated toward 1) despite treatment-by-mediator
// interaction: holds when omega2_hat * var_m(arm 2) > omega1_hat * var_m(arm 1),
// strictly. Report-only: never blocks estimation.
DiagnosticResult conservatism_diagnostic(const Dataset& d);

}  // namespace ccm
