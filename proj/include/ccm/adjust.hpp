#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "ccm/dataset.hpp"
#include "ccm/estimators.hpp"
#include "ccm/least_squares.hpp"

namespace ccm {

// Coordinates of the coefficient covariance matrix.
enum class Coef : int { alpha1 = 0, alpha2 = 1, tau1 = 2, tau2 = 3, omega1 = 4, omega2 = 5 };

enum class CovScheme { analytic_homoskedastic, bootstrap };

const char* to_string(CovScheme scheme);

// Symmetric covariance matrix of the fitted coefficients entering the ratio
// estimators: {alpha1, alpha2, tau1, tau2, omega1, omega2}.
struct CoefficientCovariances {
  Eigen::Matrix<double, 6, 6> entries = Eigen::Matrix<double, 6, 6>::Zero();
  CovScheme scheme = CovScheme::analytic_homoskedastic;
  int b_reps = 0;   // bootstrap scheme only
  int b_valid = 0;  // usable resamples (bootstrap scheme)
  int dropped = 0;  // singular resamples excluded
  bool has_omega = false;  // omega rows populated (interacted fit estimable)
  std::string warning;     // set when the drop rate exceeds 1%

  double cov(Coef a, Coef b) const {
    return entries(static_cast<int>(a), static_cast<int>(b));
  }
  double var(Coef a) const { return cov(a, a); }
};

// Estimates the covariance matrix either from closed-form homoskedastic OLS
// formulas (residual variances and arm sizes) or by refitting on bootstrap
// resamples. The bootstrap scheme evaluates all coefficients jointly on one
// resample stream, since the cross terms are the point of the exercise.
CoefficientCovariances coefficient_covariances(const Dataset& d, CovScheme scheme,
                                               int b_reps = 0, std::uint64_t seed = 0,
                                               bool stratified = false);

// Second-order Taylor (finite-sample) adjustments of the ratio estimators.
// Each returns the adjusted point value; with a zero covariance matrix the
// adjusted value equals the simple one.
double adjust_estimand1_no_interaction(const FitBundle& f,
                                       const CoefficientCovariances& c);

// Shortcut valid only under exactly equal arm sizes, where the covariance of
// the mediator contrasts has the closed form 3*var_eta/N (and 6*var_eta/N on
// the diagonal). n is the total sample size.
double adjust_estimand1_balanced(const FitBundle& f, int n);

double adjust_estimand2_no_interaction(const FitBundle& f,
                                       const CoefficientCovariances& c);

// Interacted (treated-condition) forms of both estimands, with
// omega_j = beta + gamma_j in place of the common slope.
double adjust_with_interaction(const FitBundle& f, const CoefficientCovariances& c,
                               EstimandId id);

}  // namespace ccm
