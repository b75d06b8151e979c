#pragma once

#include <optional>
#include <string>

#include "ccm/interval.hpp"
#include "ccm/least_squares.hpp"

namespace ccm {

// The two comparative ratio estimands: the ratio of mediated effects
// (arm 2 over arm 1) and the ratio of proportions mediated.
enum class Which { ratio_of_acmes, ratio_of_proportions };

// treated = use the treated-condition mediated effects alpha_j * omega_j from
// an interacted outcome fit in place of alpha_j * beta.
enum class InteractionMode { none, treated };

struct EstimandId {
  Which which = Which::ratio_of_acmes;
  InteractionMode interaction_mode = InteractionMode::none;
};

const char* to_string(Which which);
const char* to_string(InteractionMode mode);

struct CcmEstimate {
  EstimandId id;
  double simple_value = 0.0;
  std::optional<double> adjusted_value;  // filled by the adjustment layer
  // The ratio's numerator and denominator in unsimplified form (the per-arm
  // mediated effect, or proportion mediated), kept for gating and CI reuse.
  double numerator = 0.0;
  double denominator = 0.0;
  std::optional<GateResult> gate;
  std::optional<Interval> ci;
};

// Average total effect of arm j versus control (tau_j).
double ate(const FitBundle& f, int j);

// Product-of-coefficients mediated effect for arm j: alpha_j * beta, or
// alpha_j * omega_j in treated mode. Sensitive to mediator-outcome
// confounding — reporting layers must flag it as such.
double acme_naive(const FitBundle& f, int j,
                  InteractionMode mode = InteractionMode::none);

// acme_naive(j) / tau_j.
double proportion_mediated(const FitBundle& f, int j,
                           InteractionMode mode = InteractionMode::none);

// The simple (unadjusted) comparative ratio point estimate. Values are
// computed from the algebraically simplified forms; numerator/denominator are
// stored unsimplified. Throws DegenerateEstimandError when a denominator
// component is exactly zero, and ModeError on a mode/fit mismatch.
CcmEstimate ccm_point(const FitBundle& f, EstimandId id);

enum class AteComparison { greater, equal };

enum class AnatomyLabel {
  disproportionate_scaling_up,
  unrelatedness_of_mediator,
  proportionate_scaling_up,
  distinct_causal_anatomies,
  indistinguishable_causal_anatomies,
  not_applicable,
};

const char* to_string(AnatomyLabel label);

// Maps the three test outcomes (is ATE2 > ATE1, does the first ratio differ
// from 1, does the second ratio differ from 1) to the causal-anatomy label.
AnatomyLabel classify_anatomy(AteComparison ate_cmp, bool e1_reject, bool e2_reject);

}  // namespace ccm
