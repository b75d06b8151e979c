#include "ccm/estimators.hpp"

#include <cmath>

#include "ccm/errors.hpp"

namespace ccm {

const char* to_string(Which which) {
  return which == Which::ratio_of_acmes ? "ratio_of_acmes" : "ratio_of_proportions";
}

const char* to_string(InteractionMode mode) {
  return mode == InteractionMode::none ? "none" : "treated";
}

namespace {

void require_mode(const FitBundle& f, InteractionMode mode) {
  if (mode == InteractionMode::treated && !f.outcome.interactions_included)
    throw ModeError(
        "treated-condition quantities require an outcome fit with interactions");
}

}  // namespace

double ate(const FitBundle& f, int j) { return f.total.tau(j); }

double acme_naive(const FitBundle& f, int j, InteractionMode mode) {
  require_mode(f, mode);
  const double slope =
      mode == InteractionMode::treated ? f.outcome.omega(j) : f.outcome.beta_hat;
  return f.mediator.alpha(j) * slope;
}

double proportion_mediated(const FitBundle& f, int j, InteractionMode mode) {
  const double tau = f.total.tau(j);
  if (tau == 0.0)
    throw DegenerateEstimandError("proportion mediated undefined: tau" +
                                  std::to_string(j) + " is exactly zero");
  return acme_naive(f, j, mode) / tau;
}

CcmEstimate ccm_point(const FitBundle& f, EstimandId id) {
  require_mode(f, id.interaction_mode);
  const bool treated = id.interaction_mode == InteractionMode::treated;
  const double a1 = f.mediator.alpha1_hat;
  const double a2 = f.mediator.alpha2_hat;
  const double w1 = treated ? f.outcome.omega1_hat : f.outcome.beta_hat;
  const double w2 = treated ? f.outcome.omega2_hat : f.outcome.beta_hat;

  const auto degenerate = [](const std::string& what) {
    throw DegenerateEstimandError(
        what +
        " is exactly zero, so the ratio denominator is degenerate; run the "
        "denominator gate to assess whether estimation is meaningful");
  };
  if (a1 == 0.0) degenerate("alpha1_hat");
  if (treated && w1 == 0.0) degenerate("omega1_hat");

  CcmEstimate e;
  e.id = id;
  if (id.which == Which::ratio_of_acmes) {
    // Simplified value: the common outcome slope cancels without interactions.
    e.simple_value = treated ? (a2 * w2) / (a1 * w1) : a2 / a1;
    e.numerator = a2 * w2;
    e.denominator = a1 * w1;
  } else {
    const double t1 = f.total.tau1_hat;
    const double t2 = f.total.tau2_hat;
    if (t2 == 0.0) degenerate("tau2_hat");
    if (t1 == 0.0) degenerate("tau1_hat");
    e.simple_value = treated ? (a2 * w2 * t1) / (a1 * w1 * t2) : (a2 * t1) / (a1 * t2);
    e.numerator = a2 * w2 / t2;
    e.denominator = a1 * w1 / t1;
  }
  return e;
}

const char* to_string(AnatomyLabel label) {
  switch (label) {
    case AnatomyLabel::disproportionate_scaling_up: return "disproportionate_scaling_up";
    case AnatomyLabel::unrelatedness_of_mediator: return "unrelatedness_of_mediator";
    case AnatomyLabel::proportionate_scaling_up: return "proportionate_scaling_up";
    case AnatomyLabel::distinct_causal_anatomies: return "distinct_causal_anatomies";
    case AnatomyLabel::indistinguishable_causal_anatomies:
      return "indistinguishable_causal_anatomies";
    case AnatomyLabel::not_applicable: return "not_applicable";
  }
  return "?";
}

AnatomyLabel classify_anatomy(AteComparison ate_cmp, bool e1_reject, bool e2_reject) {
  if (ate_cmp == AteComparison::greater) {
    if (e1_reject && e2_reject) return AnatomyLabel::disproportionate_scaling_up;
    if (!e1_reject && !e2_reject) return AnatomyLabel::unrelatedness_of_mediator;
    if (e1_reject && !e2_reject) return AnatomyLabel::proportionate_scaling_up;
    return AnatomyLabel::not_applicable;
  }
  if (e1_reject && e2_reject) return AnatomyLabel::distinct_causal_anatomies;
  if (!e1_reject && !e2_reject) return AnatomyLabel::indistinguishable_causal_anatomies;
  return AnatomyLabel::not_applicable;
}

}  // namespace ccm
