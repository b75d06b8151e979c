#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "ccm/dataset.hpp"

namespace ccm {

// Output of one least-squares solve.
struct LeastSquares {
  Eigen::VectorXd coef;
  double resid_ss = 0.0;
  int n = 0;
  int p = 0;

  // Unbiased residual variance, divisor n - p.
  double resid_var() const { return n > p ? resid_ss / (n - p) : 0.0; }
};

// Solves min ||response - design·b|| by column-pivoted QR. Throws
// SingularModelError naming the dependent columns when the design is
// rank-deficient.
LeastSquares solve_least_squares(const Eigen::MatrixXd& design,
                                 const Eigen::VectorXd& response,
                                 const std::vector<std::string>& column_labels);

// m ~ 1 + t1 + t2. Saturated, so alpha_j is exactly the arm-j-minus-control
// mediator mean difference.
struct MediatorFit {
  double pi_hat = 0.0;
  double alpha1_hat = 0.0;
  double alpha2_hat = 0.0;
  double resid_var_eta = 0.0;  // divisor n - 3
  int n = 0;

  double alpha(int j) const { return j == 1 ? alpha1_hat : alpha2_hat; }
};

// y ~ 1 + t1 + t2 + m [+ t1·m + t2·m]. With interactions the fit is saturated
// per arm: omega_j = beta + gamma_j equals the within-arm slope of y on m.
struct OutcomeFit {
  double lambda_hat = 0.0;
  double delta1_hat = 0.0;
  double delta2_hat = 0.0;
  double beta_hat = 0.0;
  double gamma1_hat = 0.0;  // zero when interactions disabled
  double gamma2_hat = 0.0;
  double omega1_hat = 0.0;  // beta + gamma_j (= beta when interactions disabled)
  double omega2_hat = 0.0;
  bool interactions_included = false;
  double resid_var_iota = 0.0;  // divisor n - 4 or n - 6
  int n = 0;

  double omega(int j) const { return j == 1 ? omega1_hat : omega2_hat; }
  double gamma(int j) const { return j == 1 ? gamma1_hat : gamma2_hat; }
  double delta(int j) const { return j == 1 ? delta1_hat : delta2_hat; }
};

// y ~ 1 + t1 + t2. tau_j is exactly the arm-j-minus-control outcome mean
// difference (the total effect of arm j).
struct TotalFit {
  double chi_hat = 0.0;
  double tau1_hat = 0.0;
  double tau2_hat = 0.0;
  double resid_var_rho = 0.0;  // divisor n - 3
  int n = 0;

  double tau(int j) const { return j == 1 ? tau1_hat : tau2_hat; }
};

// The three regressions fit on one dataset snapshot, plus arm summaries.
struct FitBundle {
  MediatorFit mediator;
  OutcomeFit outcome;
  TotalFit total;
  std::array<ArmSummary, 3> arms;
  int n = 0;
};

MediatorFit fit_mediator_model(const Dataset& d);
OutcomeFit fit_outcome_model(const Dataset& d, bool include_interactions);
TotalFit fit_total_model(const Dataset& d);
FitBundle fit_bundle(const Dataset& d, bool include_interactions);

// Within-arm bivariate regression slopes of y on m for treatment arms 1 and 2,
// with the corresponding mediator sample variances. By the saturation identity
// these slopes equal the interacted-model omega_j.
struct ArmSlopes {
  double omega1_hat = 0.0;
  double omega2_hat = 0.0;
  double var_m_arm1 = 0.0;
  double var_m_arm2 = 0.0;
};

ArmSlopes arm_slopes(const Dataset& d);

}  // namespace ccm
