#include "ccm/inference.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ccm/errors.hpp"
#include "fit_internal.hpp"
#include "resample.hpp"

namespace ccm {

const char* to_string(Statistic s) {
  switch (s) {
    case Statistic::tau1: return "tau1";
    case Statistic::tau2: return "tau2";
    case Statistic::tau_diff: return "tau_diff";
    case Statistic::beta: return "beta";
    case Statistic::acme1: return "acme1";
    case Statistic::acme2: return "acme2";
    case Statistic::acme1_treated: return "acme1_treated";
    case Statistic::acme2_treated: return "acme2_treated";
    case Statistic::pm1: return "pm1";
    case Statistic::pm2: return "pm2";
    case Statistic::pm1_treated: return "pm1_treated";
    case Statistic::pm2_treated: return "pm2_treated";
    case Statistic::estimand1: return "estimand1";
    case Statistic::estimand2: return "estimand2";
    case Statistic::estimand1_treated: return "estimand1_treated";
    case Statistic::estimand2_treated: return "estimand2_treated";
  }
  return "unknown";
}

const char* to_string(TestMethod m) {
  return m == TestMethod::wald_bootstrap ? "wald_bootstrap" : "wald_chisq";
}

std::vector<BootstrapDistribution> bootstrap_distributions(
    const Dataset& d, const std::vector<Statistic>& stats,
    const BootstrapOptions& opt) {
  if (opt.b_reps < 200) {
    throw std::invalid_argument("bootstrap requires b_reps >= 200");
  }
  detail::EngineSpec spec;
  spec.stats = stats;
  spec.b = opt.b_reps;
  spec.seed = opt.seed;
  spec.stratified = opt.stratified;
  detail::EngineResult res = detail::run_resampling(d, spec);

  std::vector<BootstrapDistribution> out;
  out.reserve(stats.size());
  for (std::size_t k = 0; k < stats.size(); ++k) {
    BootstrapDistribution bd;
    bd.statistic = stats[k];
    bd.stat_label = to_string(stats[k]);
    bd.values = std::move(res.stat_values[k]);
    std::sort(bd.values.begin(), bd.values.end());
    bd.b_requested = opt.b_reps;
    bd.b_valid = static_cast<int>(bd.values.size());
    bd.seed = opt.seed;
    bd.stratified = opt.stratified;
    if (bd.b_valid < static_cast<int>(0.9 * opt.b_reps)) {
      throw ResamplingError(
          std::string("statistic ") + bd.stat_label + " was undefined on " +
          std::to_string(res.stat_dropped[k]) + " of " +
          std::to_string(opt.b_reps) +
          " resamples; the resampling distribution is unreliable");
    }
    out.push_back(std::move(bd));
  }
  return out;
}

BootstrapDistribution bootstrap_distribution(const Dataset& d, Statistic s,
                                             const BootstrapOptions& opt) {
  return std::move(bootstrap_distributions(d, {s}, opt).front());
}

namespace {

// Linear interpolation between order statistics at rank 1 + (b - 1) q.
double sorted_quantile(const std::vector<double>& v, double q) {
  const auto b = static_cast<int>(v.size());
  const double rank = 1.0 + (b - 1) * q;
  const int lo = std::min(static_cast<int>(rank), b);
  const double frac = rank - lo;
  double out = v[static_cast<std::size_t>(lo - 1)];
  if (frac > 0.0 && lo < b) {
    out += frac * (v[static_cast<std::size_t>(lo)] - out);
  }
  return out;
}

}  // namespace

Interval percentile_ci(const BootstrapDistribution& dist, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1]");
  }
  if (dist.values.size() < 100) {
    throw ResamplingError(
        "percentile interval requires at least 100 valid replicate values");
  }
  return {sorted_quantile(dist.values, alpha / 2.0),
          sorted_quantile(dist.values, 1.0 - alpha / 2.0)};
}

GateResult denominator_gate(const Dataset& d, EstimandId id, double alpha,
                            const BootstrapOptions& opt) {
  const bool treated = id.interaction_mode == InteractionMode::treated;
  const Statistic s =
      id.which == Which::ratio_of_acmes
          ? (treated ? Statistic::acme1_treated : Statistic::acme1)
          : (treated ? Statistic::pm1_treated : Statistic::pm1);
  GateResult g;
  g.alpha = alpha;
  try {
    const BootstrapDistribution bd = bootstrap_distribution(d, s, opt);
    g.denominator_ci = percentile_ci(bd, alpha);
  } catch (const ResamplingError& e) {
    g.passed = false;
    g.message = std::string("denominator resampling failed: ") + e.what();
    return g;
  }
  g.passed = g.denominator_ci.excludes(0.0);
  const std::string label = to_string(s);
  g.message = g.passed
                  ? "denominator statistic " + label +
                        " is resolved away from zero at the requested level"
                  : "denominator statistic " + label +
                        " has an interval containing zero; ratio estimates "
                        "would be unreliable";
  return g;
}

Eigen::Matrix<double, 6, 1> delta_gradient(const FitBundle& f, EstimandId id) {
  const double a1 = f.mediator.alpha1_hat;
  const double a2 = f.mediator.alpha2_hat;
  const double t1 = f.total.tau1_hat;
  const double t2 = f.total.tau2_hat;
  const double w1 = f.outcome.omega1_hat;
  const double w2 = f.outcome.omega2_hat;
  const bool treated = id.interaction_mode == InteractionMode::treated;
  Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
  if (id.which == Which::ratio_of_acmes) {
    if (!treated) {
      g(0) = -a2 / (a1 * a1);
      g(1) = 1.0 / a1;
    } else {
      g(0) = -a2 * w2 / (a1 * a1 * w1);
      g(1) = w2 / (a1 * w1);
      g(4) = -a2 * w2 / (a1 * w1 * w1);
      g(5) = a2 / (a1 * w1);
    }
  } else {
    if (!treated) {
      g(0) = -a2 * t1 / (a1 * a1 * t2);
      g(1) = t1 / (a1 * t2);
      g(2) = a2 / (a1 * t2);
      g(3) = -a2 * t1 / (a1 * t2 * t2);
    } else {
      g(0) = -a2 * w2 * t1 / (a1 * a1 * w1 * t2);
      g(1) = w2 * t1 / (a1 * w1 * t2);
      g(2) = a2 * w2 / (a1 * w1 * t2);
      g(3) = -a2 * w2 * t1 / (a1 * w1 * t2 * t2);
      g(4) = -a2 * w2 * t1 / (a1 * w1 * w1 * t2);
      g(5) = a2 * t1 / (a1 * w1 * t2);
    }
  }
  return g;
}

Interval delta_ci(const FitBundle& f, const CoefficientCovariances& c,
                  EstimandId id, double alpha, const GateResult& gate) {
  if (!gate.passed) {
    throw GateError(
        "denominator gate has not passed; a linearized interval around a "
        "ratio whose denominator may cross zero is meaningless");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1]");
  }
  const CcmEstimate point = ccm_point(f, id);
  const Eigen::Matrix<double, 6, 1> g = delta_gradient(f, id);
  const double variance = g.dot(c.entries * g);
  const double se = std::sqrt(std::max(variance, 0.0));
  const boost::math::normal_distribution<> z01(0.0, 1.0);
  const double z = alpha == 1.0 ? 0.0
                                : boost::math::quantile(z01, 1.0 - alpha / 2.0);
  return {point.simple_value - z * se, point.simple_value + z * se};
}

namespace {

struct WaldParts {
  Eigen::Vector2d gamma;
  Eigen::Matrix2d cov_gamma;  // HC1 sandwich block for the interaction terms
  bool perfect_fit = false;
};

// Robust Wald ingredients from a loaded scratch; nullopt when the interacted
// fit is not estimable on these rows.
std::optional<WaldParts> wald_parts(detail::FitScratch& s) {
  const auto fit = detail::try_outcome(s, true);
  if (!fit) return std::nullopt;
  const auto n = s.design.rows();
  Eigen::Matrix<double, 6, 1> coef;
  coef << fit->lambda_hat, fit->delta1_hat, fit->delta2_hat, fit->beta_hat,
      fit->gamma1_hat, fit->gamma2_hat;

  WaldParts parts;
  parts.gamma << fit->gamma1_hat, fit->gamma2_hat;

  Eigen::VectorXd resid = s.out - s.design * coef;
  const double resid_ss = resid.squaredNorm();
  if (resid_ss <= 1e-12 * std::max(1.0, s.out.squaredNorm())) {
    parts.perfect_fit = true;
    parts.cov_gamma.setZero();
    return parts;
  }

  const Eigen::Matrix<double, 6, 6> xtx = s.design.transpose() * s.design;
  const Eigen::Matrix<double, 6, 6> bread =
      xtx.ldlt().solve(Eigen::Matrix<double, 6, 6>::Identity());
  const Eigen::MatrixXd scaled = resid.asDiagonal() * s.design;
  const Eigen::Matrix<double, 6, 6> meat = scaled.transpose() * scaled;
  const double hc1 = static_cast<double>(n) / static_cast<double>(n - 6);
  const Eigen::Matrix<double, 6, 6> robust = bread * meat * bread * hc1;
  parts.cov_gamma = robust.block<2, 2>(4, 4);
  return parts;
}

std::optional<double> wald_statistic(const Eigen::Vector2d& delta,
                                     const Eigen::Matrix2d& cov) {
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  if (!(det > 0.0) || !std::isfinite(det)) return std::nullopt;
  Eigen::Matrix2d inv;
  inv << cov(1, 1), -cov(0, 1), -cov(1, 0), cov(0, 0);
  const double w = delta.dot((inv / det) * delta);
  if (!std::isfinite(w) || w < 0.0) return std::nullopt;
  return w;
}

}  // namespace

TestResult interaction_test(const Dataset& d, double alpha,
                            const BootstrapOptions& opt, TestMethod method) {
  detail::FitScratch scratch;
  detail::load_rows(d, nullptr, scratch);
  const auto full = wald_parts(scratch);
  if (!full) {
    throw SingularModelError(
        "interacted outcome model is not estimable on this data (a treatment "
        "arm has a constant mediator); the interaction test is unavailable");
  }

  TestResult t;
  t.method = method;
  if (full->perfect_fit) {
    // The outcome is an exact linear function of the design; there is no
    // residual variation to test against.
    t.statistic = 0.0;
    t.p_value = 1.0;
    t.reject = false;
    return t;
  }
  const auto w_full = wald_statistic(full->gamma, full->cov_gamma);
  if (!w_full) {
    throw SingularModelError(
        "robust covariance of the interaction terms is singular; the "
        "interaction test is unavailable");
  }
  t.statistic = *w_full;

  if (method == TestMethod::wald_chisq) {
    const boost::math::chi_squared_distribution<> chi2(2.0);
    t.p_value = boost::math::cdf(boost::math::complement(chi2, t.statistic));
    t.reject = t.p_value < alpha;
    return t;
  }

  if (opt.b_reps < 200) {
    throw std::invalid_argument("bootstrap calibration requires b_reps >= 200");
  }
  const Eigen::Vector2d gamma_center = full->gamma;
  detail::EngineSpec spec;
  spec.b = opt.b_reps;
  spec.seed = opt.seed;
  spec.stratified = opt.stratified;
  spec.custom = [gamma_center](detail::FitScratch& s) -> std::optional<double> {
    const auto parts = wald_parts(s);
    if (!parts || parts->perfect_fit) return std::nullopt;
    return wald_statistic(parts->gamma - gamma_center, parts->cov_gamma);
  };
  detail::EngineResult res = detail::run_resampling(d, spec);
  const int b_valid = static_cast<int>(res.custom_values.size());
  if (b_valid < static_cast<int>(0.9 * opt.b_reps)) {
    throw ResamplingError(
        "interaction-test calibration failed on " +
        std::to_string(res.custom_dropped) + " of " +
        std::to_string(opt.b_reps) + " resamples");
  }
  int at_least = 0;
  for (double w : res.custom_values) {
    if (w >= t.statistic) ++at_least;
  }
  t.p_value = (1.0 + at_least) / (b_valid + 1.0);
  t.b_valid = b_valid;
  t.dropped = res.custom_dropped;
  t.reject = t.p_value < alpha;
  return t;
}

DiagnosticResult conservatism_diagnostic(const Dataset& d) {
  const ArmSlopes s = arm_slopes(d);
  DiagnosticResult r;
  r.lhs = s.omega2_hat * s.var_m_arm2;
  r.rhs = s.omega1_hat * s.var_m_arm1;
  r.holds = r.lhs > r.rhs;
  r.caveat =
      "partial large-sample check: the residual covariance terms in the "
      "conservatism condition are not identifiable, so this inequality "
      "supports the condition but cannot verify it";
  return r;
}

}  // namespace ccm
