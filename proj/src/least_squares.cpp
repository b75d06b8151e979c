#include "ccm/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ccm/errors.hpp"
#include "fit_internal.hpp"

namespace ccm {

namespace detail {

void load_rows(const Dataset& d, const std::vector<int>* idx, FitScratch& s) {
  const int n = idx ? static_cast<int>(idx->size()) : d.n();
  s.resize(n);
  for (int r = 0; r < n; ++r) {
    const ObservationRow& row = d.rows[idx ? (*idx)[r] : r];
    s.design(r, 0) = 1.0;
    s.design(r, 1) = row.t1;
    s.design(r, 2) = row.t2;
    s.design(r, 3) = row.m;
    s.design(r, 4) = row.t1 * row.m;
    s.design(r, 5) = row.t2 * row.m;
    s.med(r) = row.m;
    s.out(r) = row.y;
  }
}

namespace {

// Solves one block of the scratch design; empty result on rank deficiency.
std::optional<Eigen::VectorXd> solve_block(
    FitScratch& s, int p, Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr,
    const Eigen::VectorXd& response, double* resid_ss) {
  const auto block = s.design.leftCols(p);
  qr.compute(block);
  if (qr.rank() < p) return std::nullopt;
  Eigen::VectorXd coef = qr.solve(response);
  if (resid_ss) {
    s.fitted.noalias() = block * coef;
    *resid_ss = (response - s.fitted).squaredNorm();
  }
  return coef;
}

}  // namespace

std::optional<MediatorFit> try_mediator(FitScratch& s) {
  double rss = 0.0;
  const auto coef = solve_block(s, 3, s.qr3, s.med, &rss);
  if (!coef) return std::nullopt;
  MediatorFit f;
  f.pi_hat = (*coef)(0);
  f.alpha1_hat = (*coef)(1);
  f.alpha2_hat = (*coef)(2);
  f.n = static_cast<int>(s.med.size());
  f.resid_var_eta = f.n > 3 ? rss / (f.n - 3) : 0.0;
  return f;
}

std::optional<TotalFit> try_total(FitScratch& s) {
  double rss = 0.0;
  const auto coef = solve_block(s, 3, s.qr3, s.out, &rss);
  if (!coef) return std::nullopt;
  TotalFit f;
  f.chi_hat = (*coef)(0);
  f.tau1_hat = (*coef)(1);
  f.tau2_hat = (*coef)(2);
  f.n = static_cast<int>(s.out.size());
  f.resid_var_rho = f.n > 3 ? rss / (f.n - 3) : 0.0;
  return f;
}

std::optional<OutcomeFit> try_outcome(FitScratch& s, bool interactions) {
  const int p = interactions ? 6 : 4;
  double rss = 0.0;
  const auto coef =
      solve_block(s, p, interactions ? s.qr6 : s.qr4, s.out, &rss);
  if (!coef) return std::nullopt;
  OutcomeFit f;
  f.lambda_hat = (*coef)(0);
  f.delta1_hat = (*coef)(1);
  f.delta2_hat = (*coef)(2);
  f.beta_hat = (*coef)(3);
  f.interactions_included = interactions;
  if (interactions) {
    f.gamma1_hat = (*coef)(4);
    f.gamma2_hat = (*coef)(5);
  }
  f.omega1_hat = f.beta_hat + f.gamma1_hat;
  f.omega2_hat = f.beta_hat + f.gamma2_hat;
  f.n = static_cast<int>(s.out.size());
  f.resid_var_iota = f.n > p ? rss / (f.n - p) : 0.0;
  return f;
}

}  // namespace detail

LeastSquares solve_least_squares(const Eigen::MatrixXd& design,
                                 const Eigen::VectorXd& response,
                                 const std::vector<std::string>& column_labels) {
  if (design.rows() != response.size())
    throw std::invalid_argument("design and response row counts differ");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  const int p = static_cast<int>(design.cols());
  const int rank = static_cast<int>(qr.rank());
  if (rank < p) {
    // Pivoting pushes the dependent columns to the back of the permutation.
    const auto& perm = qr.colsPermutation().indices();
    std::string names;
    for (int k = rank; k < p; ++k) {
      const int col = perm(k);
      if (!names.empty()) names += ", ";
      names += (col < static_cast<int>(column_labels.size()))
                   ? column_labels[col]
                   : ("column " + std::to_string(col));
    }
    throw SingularModelError("design is rank-deficient (rank " +
                             std::to_string(rank) + " of " + std::to_string(p) +
                             "); dependent columns: " + names);
  }
  LeastSquares out;
  out.coef = qr.solve(response);
  out.resid_ss = (response - design * out.coef).squaredNorm();
  out.n = static_cast<int>(design.rows());
  out.p = p;
  return out;
}

namespace {

std::vector<std::string> design_labels(const Dataset& d, int p) {
  const auto& c = d.column_names;
  std::vector<std::string> labels{"intercept", c.t1, c.t2, c.m, c.t1 + ":" + c.m,
                                  c.t2 + ":" + c.m};
  labels.resize(p);
  return labels;
}

// Throws when the interacted outcome model is not identified, naming the
// first arm whose mediator is constant.
void require_within_arm_variation(const Dataset& d) {
  std::array<double, 3> lo, hi;
  std::array<int, 3> count{0, 0, 0};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto& row : d.rows) {
    const int a = static_cast<int>(row.arm());
    lo[a] = std::min(lo[a], row.m);
    hi[a] = std::max(hi[a], row.m);
    ++count[a];
  }
  for (int a = 0; a < 3; ++a)
    if (count[a] < 2 || lo[a] == hi[a])
      throw SingularModelError(
          std::string("interactions requested but the mediator is constant within "
                      "arm ") +
          to_string(static_cast<Arm>(a)) + "; within-arm slopes are not identified");
}

}  // namespace

MediatorFit fit_mediator_model(const Dataset& d) {
  detail::FitScratch s;
  detail::load_rows(d, nullptr, s);
  auto fit = detail::try_mediator(s);
  if (!fit) {
    // Re-solve through the naming path for a useful message.
    solve_least_squares(s.design.leftCols(3), s.med, design_labels(d, 3));
    throw SingularModelError("mediator model is rank-deficient");
  }
  return *fit;
}

TotalFit fit_total_model(const Dataset& d) {
  detail::FitScratch s;
  detail::load_rows(d, nullptr, s);
  auto fit = detail::try_total(s);
  if (!fit) {
    solve_least_squares(s.design.leftCols(3), s.out, design_labels(d, 3));
    throw SingularModelError("total-effect model is rank-deficient");
  }
  return *fit;
}

OutcomeFit fit_outcome_model(const Dataset& d, bool include_interactions) {
  if (include_interactions) require_within_arm_variation(d);
  detail::FitScratch s;
  detail::load_rows(d, nullptr, s);
  auto fit = detail::try_outcome(s, include_interactions);
  if (!fit) {
    const int p = include_interactions ? 6 : 4;
    solve_least_squares(s.design.leftCols(p), s.out, design_labels(d, p));
    throw SingularModelError("outcome model is rank-deficient");
  }
  return *fit;
}

FitBundle fit_bundle(const Dataset& d, bool include_interactions) {
  FitBundle b;
  b.mediator = fit_mediator_model(d);
  b.outcome = fit_outcome_model(d, include_interactions);
  b.total = fit_total_model(d);
  b.arms = arm_partition(d);
  b.n = d.n();
  return b;
}

ArmSlopes arm_slopes(const Dataset& d) {
  const auto arms = arm_partition(d);
  const auto idx = arm_indices(d);
  ArmSlopes out;
  for (int j = 1; j <= 2; ++j) {
    const ArmSummary& s = arms[j];
    if (s.n_arm < 2 || s.var_m == 0.0)
      throw SingularModelError(
          std::string("mediator is constant within arm ") + to_string(s.arm) +
          "; the within-arm slope of y on m is not identified");
    double sxy = 0.0, sxx = 0.0;
    for (int i : idx[j]) {
      const double dm = d.rows[i].m - s.mean_m;
      sxy += dm * (d.rows[i].y - s.mean_y);
      sxx += dm * dm;
    }
    const double slope = sxy / sxx;
    if (j == 1) {
      out.omega1_hat = slope;
      out.var_m_arm1 = s.var_m;
    } else {
      out.omega2_hat = slope;
      out.var_m_arm2 = s.var_m;
    }
  }
  return out;
}

}  // namespace ccm
