#pragma once

#include <stdexcept>
#include <string>

namespace ccm {

// Malformed input text: unparsable cells, bad indicators, broken row invariants.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input shape problems: missing columns, bad config fields.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rank-deficient or otherwise unestimable regression model.
struct SingularModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A ratio estimand whose denominator component is exactly zero.
struct DegenerateEstimandError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation invoked in a mode its inputs do not support
// (e.g. treated-form quantities from a fit without interactions).
struct ModeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Denominator gate required but not passed.
struct GateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bootstrap produced too few usable replicates to be trustworthy.
struct ResamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ccm
