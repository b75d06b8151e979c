#include "ccm/adjust.hpp"

#include <cmath>
#include <stdexcept>

#include "ccm/errors.hpp"
#include "ccm/rng.hpp"
#include "fit_internal.hpp"
#include "resample.hpp"

namespace ccm {

const char* to_string(CovScheme scheme) {
  return scheme == CovScheme::analytic_homoskedastic ? "analytic_homoskedastic"
                                                     : "bootstrap";
}

namespace {

// (X'X)^-1 for the saturated three-arm design (columns 1, t1, t2), from which
// every alpha/tau covariance follows by scaling with the residual moments.
Eigen::Matrix3d design_inverse(const std::array<ArmSummary, 3>& arms, int n) {
  const double n1 = static_cast<double>(arms[1].n_arm);
  const double n2 = static_cast<double>(arms[2].n_arm);
  Eigen::Matrix3d xtx;
  xtx << n, n1, n2, n1, n1, 0.0, n2, 0.0, n2;
  return xtx.inverse();
}

CoefficientCovariances analytic_covariances(const Dataset& d) {
  CoefficientCovariances c;
  c.scheme = CovScheme::analytic_homoskedastic;

  const MediatorFit med = fit_mediator_model(d);
  const TotalFit tot = fit_total_model(d);
  const auto arms = arm_partition(d);
  const int n = d.n();

  // Residual cross-moment of the two saturated fits; their residuals are the
  // within-arm deviations from the arm means.
  double sum_eta_rho = 0.0;
  for (const auto& row : d.rows) {
    const auto& a = arms[static_cast<int>(row.arm())];
    sum_eta_rho += (row.m - a.mean_m) * (row.y - a.mean_y);
  }
  const double sigma_eta_rho = n > 3 ? sum_eta_rho / (n - 3) : 0.0;

  const Eigen::Matrix3d b = design_inverse(arms, n);
  for (int j = 1; j <= 2; ++j) {
    for (int k = 1; k <= 2; ++k) {
      c.entries(j - 1, k - 1) = med.resid_var_eta * b(j, k);
      c.entries(j + 1, k + 1) = tot.resid_var_rho * b(j, k);
      c.entries(j - 1, k + 1) = sigma_eta_rho * b(j, k);
      c.entries(j + 1, k - 1) = sigma_eta_rho * b(j, k);
    }
  }

  // Omega rows need the interacted fit. Conditional on the design, each
  // omega_hat is an independent within-arm slope with variance
  // resid_var / S_mm(arm), and is uncorrelated with the mean contrasts.
  detail::FitScratch scratch;
  detail::load_rows(d, nullptr, scratch);
  if (auto inter = detail::try_outcome(scratch, true)) {
    const double s_mm1 = arms[1].var_m * (arms[1].n_arm - 1);
    const double s_mm2 = arms[2].var_m * (arms[2].n_arm - 1);
    if (s_mm1 > 0.0 && s_mm2 > 0.0) {
      c.entries(4, 4) = inter->resid_var_iota / s_mm1;
      c.entries(5, 5) = inter->resid_var_iota / s_mm2;
      c.has_omega = true;
    }
  }
  return c;
}

CoefficientCovariances bootstrap_covariances(const Dataset& d, int b_reps,
                                             std::uint64_t seed, bool stratified) {
  if (b_reps < 200) {
    throw std::invalid_argument(
        "bootstrap covariance scheme requires b_reps >= 200");
  }
  detail::FitScratch scratch;
  detail::load_rows(d, nullptr, scratch);
  const bool with_omega = detail::try_outcome(scratch, true).has_value();

  detail::EngineSpec spec;
  spec.b = b_reps;
  spec.seed = seed;
  spec.stratified = stratified;
  spec.collect_coefs = true;
  spec.coefs_with_omega = with_omega;
  detail::EngineResult res = detail::run_resampling(d, spec);
  return detail::empirical_covariances(res.coef_rows, b_reps, res.coef_dropped,
                                       with_omega);
}

void require_nonzero(double v, const char* what) {
  if (v == 0.0) {
    throw DegenerateEstimandError(std::string(what) +
                                  " is zero; the ratio is undefined (run the "
                                  "denominator gate before estimating)");
  }
}

}  // namespace

CoefficientCovariances coefficient_covariances(const Dataset& d, CovScheme scheme,
                                               int b_reps, std::uint64_t seed,
                                               bool stratified) {
  return scheme == CovScheme::analytic_homoskedastic
             ? analytic_covariances(d)
             : bootstrap_covariances(d, b_reps, seed, stratified);
}

double adjust_estimand1_no_interaction(const FitBundle& f,
                                       const CoefficientCovariances& c) {
  const double a1 = f.mediator.alpha1_hat;
  const double a2 = f.mediator.alpha2_hat;
  require_nonzero(a1, "alpha1_hat");
  const double v_a1 = c.var(Coef::alpha1);
  const double c_a12 = c.cov(Coef::alpha1, Coef::alpha2);
  return a2 / a1 + c_a12 / (a1 * a1) - v_a1 * a2 / (a1 * a1 * a1);
}

double adjust_estimand1_balanced(const FitBundle& f, int n) {
  if (f.arms[0].n_arm != f.arms[1].n_arm || f.arms[1].n_arm != f.arms[2].n_arm) {
    throw ModeError(
        "arm sizes are unequal; the balanced shortcut does not apply (use "
        "adjust_estimand1_no_interaction with an explicit covariance matrix)");
  }
  const double a1 = f.mediator.alpha1_hat;
  const double a2 = f.mediator.alpha2_hat;
  require_nonzero(a1, "alpha1_hat");
  const double s2 = f.mediator.resid_var_eta;
  const double nn = static_cast<double>(n);
  return a2 / a1 + 3.0 * s2 / (a1 * a1 * nn) -
         6.0 * s2 * a2 / (a1 * a1 * a1 * nn);
}

double adjust_estimand2_no_interaction(const FitBundle& f,
                                       const CoefficientCovariances& c) {
  const double a1 = f.mediator.alpha1_hat;
  const double a2 = f.mediator.alpha2_hat;
  const double t1 = f.total.tau1_hat;
  const double t2 = f.total.tau2_hat;
  require_nonzero(a1, "alpha1_hat");
  require_nonzero(t2, "tau2_hat");
  const auto cov = [&](Coef x, Coef y) { return c.cov(x, y); };
  using C = Coef;
  return a2 * t1 / (a1 * t2)
         - c.var(C::alpha1) * a2 * t1 / (a1 * a1 * a1 * t2)
         - c.var(C::tau2) * a2 * t1 / (a1 * t2 * t2 * t2)
         + cov(C::alpha2, C::alpha1) * t1 / (a1 * a1 * t2)
         + cov(C::alpha2, C::tau2) * t1 / (a1 * t2 * t2)
         - cov(C::alpha2, C::tau1) / (a1 * t2)
         - cov(C::alpha1, C::tau2) * a2 * t1 / (a1 * a1 * t2 * t2)
         + cov(C::alpha1, C::tau1) * a2 / (a1 * a1 * t2)
         + cov(C::tau2, C::tau1) * a2 / (a1 * t2 * t2);
}

double adjust_with_interaction(const FitBundle& f, const CoefficientCovariances& c,
                               EstimandId id) {
  if (!f.outcome.interactions_included) {
    throw ModeError(
        "fit bundle was built without interaction terms; use the "
        "no-interaction adjustments");
  }
  if (id.interaction_mode != InteractionMode::treated) {
    throw ModeError(
        "estimand id requests the no-interaction form; use the corresponding "
        "no-interaction adjustment");
  }
  const double a1 = f.mediator.alpha1_hat;
  const double a2 = f.mediator.alpha2_hat;
  const double w1 = f.outcome.omega1_hat;
  const double w2 = f.outcome.omega2_hat;
  require_nonzero(a1, "alpha1_hat");
  require_nonzero(w1, "omega1_hat");
  const auto cov = [&](Coef x, Coef y) { return c.cov(x, y); };
  using C = Coef;

  if (id.which == Which::ratio_of_acmes) {
    return a2 * w2 / (a1 * w1)
           - c.var(C::alpha1) * a2 * w2 / (a1 * a1 * a1 * w1)
           - c.var(C::omega1) * a2 * w2 / (a1 * w1 * w1 * w1)
           + cov(C::alpha2, C::alpha1) * w2 / (a1 * a1 * w1)
           + cov(C::alpha2, C::omega1) * w2 / (a1 * w1 * w1)
           - cov(C::alpha2, C::omega2) / (a1 * w1)
           - cov(C::alpha1, C::omega1) * a2 * w2 / (a1 * a1 * w1 * w1)
           + cov(C::alpha1, C::omega2) * a2 / (a1 * a1 * w1)
           + cov(C::omega1, C::omega2) * a2 / (a1 * w1 * w1);
  }

  const double t1 = f.total.tau1_hat;
  const double t2 = f.total.tau2_hat;
  require_nonzero(t2, "tau2_hat");
  return a2 * w2 * t1 / (a1 * w1 * t2)
         - c.var(C::alpha1) * a2 * w2 * t1 / (a1 * a1 * a1 * w1 * t2)
         - c.var(C::omega1) * a2 * w2 * t1 / (a1 * w1 * w1 * w1 * t2)
         - c.var(C::tau2) * a2 * w2 * t1 / (a1 * w1 * t2 * t2 * t2)
         + cov(C::alpha2, C::alpha1) * w2 * t1 / (a1 * a1 * w1 * t2)
         - cov(C::alpha2, C::omega2) * t1 / (a1 * w1 * t2)
         + cov(C::alpha2, C::omega1) * w2 * t1 / (a1 * w1 * w1 * t2)
         + cov(C::alpha2, C::tau2) * w2 * t1 / (a1 * w1 * t2 * t2)
         - cov(C::alpha2, C::tau1) * w2 / (a1 * w1 * t2)
         + cov(C::alpha1, C::omega2) * a2 * t1 / (a1 * a1 * w1 * t2)
         - cov(C::alpha1, C::omega1) * a2 * w2 * t1 / (a1 * a1 * w1 * w1 * t2)
         - cov(C::alpha1, C::tau2) * a2 * w2 * t1 / (a1 * a1 * w1 * t2 * t2)
         + cov(C::alpha1, C::tau1) * a2 * w2 / (a1 * a1 * w1 * t2)
         + cov(C::omega2, C::omega1) * a2 * t1 / (a1 * w1 * w1 * t2)
         + cov(C::omega2, C::tau2) * a2 * t1 / (a1 * w1 * t2 * t2)
         - cov(C::omega2, C::tau1) * a2 / (a1 * w1 * t2)
         - cov(C::omega1, C::tau2) * a2 * w2 * t1 / (a1 * w1 * w1 * t2 * t2)
         + cov(C::omega1, C::tau1) * a2 * w2 / (a1 * w1 * w1 * t2)
         + cov(C::tau2, C::tau1) * a2 * w2 / (a1 * w1 * t2 * t2);
}

}  // namespace ccm
