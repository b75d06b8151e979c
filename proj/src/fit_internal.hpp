#pragma once

// Workspace-based fitting used by both the public fit functions and the
// resampling hot loop. A FitScratch is sized once and reused across thousands
// of refits so the bootstrap does no per-replicate allocation.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ccm/dataset.hpp"
#include "ccm/least_squares.hpp"

namespace ccm::detail {

struct FitScratch {
  Eigen::MatrixXd design;  // n x 6 max; left blocks reused for smaller models
  Eigen::VectorXd med;     // mediator response
  Eigen::VectorXd out;     // outcome response
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr3, qr4, qr6;
  Eigen::VectorXd fitted;

  void resize(int n) {
    if (design.rows() != n) {
      design.resize(n, 6);
      med.resize(n);
      out.resize(n);
      fitted.resize(n);
    }
  }
};

// Loads the rows selected by idx (all rows when idx is null) into the scratch
// design/response buffers. The design columns are 1, t1, t2, m, t1*m, t2*m.
void load_rows(const Dataset& d, const std::vector<int>* idx, FitScratch& s);

// Each fit returns std::nullopt when the relevant design block is
// rank-deficient (e.g. an arm vanished from a resample, or a within-arm
// constant mediator in the interacted model).
std::optional<MediatorFit> try_mediator(FitScratch& s);
std::optional<TotalFit> try_total(FitScratch& s);
std::optional<OutcomeFit> try_outcome(FitScratch& s, bool interactions);

}  // namespace ccm::detail
