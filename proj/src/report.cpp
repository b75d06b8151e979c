#include "ccm/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <boost/math/distributions/normal.hpp>

#include "ccm/adjust.hpp"
#include "ccm/errors.hpp"
#include "ccm/rng.hpp"
#include "resample.hpp"

namespace ccm {

namespace {

// fixed per-stage seed offsets so one master seed reproduces the whole run
constexpr std::uint64_t stage_interaction_test = 0xA1;
constexpr std::uint64_t stage_gate1 = 0xA2;
constexpr std::uint64_t stage_gate2 = 0xA3;
constexpr std::uint64_t stage_intervals = 0xA4;

std::string fmt(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string interval_text(const Interval& iv) {
  return "[" + fmt(iv.lo) + ", " + fmt(iv.hi) + "]";
}

}  // namespace

std::string to_string(InteractionChoice c) {
  switch (c) {
    case InteractionChoice::off: return "off";
    case InteractionChoice::on: return "on";
    case InteractionChoice::auto_detect: return "auto";
  }
  return "?";
}

std::string to_string(CiMethod m) {
  return m == CiMethod::percentile ? "percentile" : "delta";
}

namespace {

void check_options(const EstimateOptions& opt) {
  if (!(opt.alpha > 0.0 && opt.alpha <= 1.0))
    throw std::invalid_argument("alpha must be in (0, 1]");
  if (opt.b_reps < 200)
    throw std::invalid_argument("bootstrap requires b_reps >= 200");
}

// settle which outcome-model form the run uses; records the decision and, in
// auto mode, the test behind it
void decide_form(const Dataset& d, const EstimateOptions& opt, bool& used,
                 std::string& decision, std::optional<TestResult>& test,
                 std::vector<std::string>& warnings) {
  switch (opt.interaction) {
    case InteractionChoice::off:
      used = false;
      decision = "no-interaction outcome model (disabled by option)";
      return;
    case InteractionChoice::on:
      fit_outcome_model(d, true);  // throws SingularModelError when unestimable
      used = true;
      decision = "interacted outcome model (forced by option)";
      return;
    case InteractionChoice::auto_detect:
      break;
  }
  BootstrapOptions topt{opt.b_reps, derive_seed(opt.seed, stage_interaction_test),
                        opt.stratified};
  try {
    test = interaction_test(d, opt.alpha, topt, opt.test_method);
  } catch (const SingularModelError& e) {
    used = false;
    decision = "no-interaction outcome model (interacted model not estimable)";
    warnings.push_back(std::string("interaction test unavailable: ") + e.what());
    return;
  } catch (const ResamplingError& e) {
    warnings.push_back(std::string("interaction test bootstrap calibration failed (") +
                       e.what() + "); chi-squared reference used instead");
    test = interaction_test(d, opt.alpha, topt, TestMethod::wald_chisq);
  }
  used = test->reject;
  decision = used ? "interacted outcome model (interaction test rejected additivity at alpha " +
                        fmt(opt.alpha) + ")"
                  : "no-interaction outcome model (interaction test failed to reject at alpha " +
                        fmt(opt.alpha) + ")";
}

GateResult gate_for(const Dataset& d, EstimandId id, const EstimateOptions& opt,
                    std::uint64_t stage) {
  BootstrapOptions gopt{opt.b_reps, derive_seed(opt.seed, stage), opt.stratified};
  return denominator_gate(d, id, opt.alpha, gopt);
}

// everything interval-shaped the report needs, plus the coefficient
// covariances feeding the finite-sample adjustment
struct CiSet {
  std::optional<Interval> tau_diff, e1, e2;
  std::string tau_diff_reason, e1_reason, e2_reason;
  std::optional<CoefficientCovariances> cov;
  std::string cov_reason;
};

CiSet compute_percentile(const Dataset& d, const EstimateOptions& opt, bool inter) {
  CiSet out;
  const Statistic s1 = inter ? Statistic::estimand1_treated : Statistic::estimand1;
  const Statistic s2 = inter ? Statistic::estimand2_treated : Statistic::estimand2;
  detail::EngineSpec spec;
  spec.stats = {Statistic::tau_diff, s1, s2};
  spec.b = opt.b_reps;
  spec.seed = derive_seed(opt.seed, stage_intervals);
  spec.stratified = opt.stratified;
  spec.collect_coefs = true;  // adjustment covariances from the same resamples
  spec.coefs_with_omega = inter;
  auto res = detail::run_resampling(d, spec);

  auto take = [&](int k, std::optional<Interval>& ci, std::string& reason) {
    std::vector<double> values = std::move(res.stat_values[static_cast<size_t>(k)]);
    const int used = static_cast<int>(values.size());
    if (static_cast<double>(used) < 0.9 * spec.b) {
      reason = std::string("statistic ") + to_string(spec.stats[static_cast<size_t>(k)]) +
               " was undefined on " + std::to_string(spec.b - used) + " of " +
               std::to_string(spec.b) + " resamples; the resampling distribution is unreliable";
      return;
    }
    std::sort(values.begin(), values.end());
    BootstrapDistribution bd;
    bd.statistic = spec.stats[static_cast<size_t>(k)];
    bd.stat_label = to_string(bd.statistic);
    bd.values = std::move(values);
    bd.b_requested = spec.b;
    bd.b_valid = used;
    bd.seed = spec.seed;
    bd.stratified = spec.stratified;
    try {
      ci = percentile_ci(bd, opt.alpha);
    } catch (const ResamplingError& e) {
      reason = e.what();
    }
  };
  take(0, out.tau_diff, out.tau_diff_reason);
  take(1, out.e1, out.e1_reason);
  take(2, out.e2, out.e2_reason);

  if (inter) {
    try {
      out.cov = detail::empirical_covariances(res.coef_rows, spec.b, res.coef_dropped, true);
    } catch (const ResamplingError& e) {
      out.cov_reason = e.what();
    }
  } else {
    try {
      out.cov = coefficient_covariances(d, CovScheme::analytic_homoskedastic);
    } catch (const SingularModelError& e) {
      out.cov_reason = e.what();
    }
  }
  return out;
}

CiSet compute_delta(const Dataset& d, const EstimateOptions& opt, bool inter,
                    const FitBundle& f, const GateResult& g1, const GateResult& g2) {
  CiSet out;
  try {
    out.cov = inter ? coefficient_covariances(d, CovScheme::bootstrap, opt.b_reps,
                                              derive_seed(opt.seed, stage_intervals),
                                              opt.stratified)
                    : coefficient_covariances(d, CovScheme::analytic_homoskedastic);
  } catch (const std::exception& e) {
    out.cov_reason = e.what();
    out.tau_diff_reason = out.e1_reason = out.e2_reason =
        std::string("coefficient covariances unavailable: ") + e.what();
    return out;
  }
  const double var_diff = out.cov->var(Coef::tau1) + out.cov->var(Coef::tau2) -
                          2.0 * out.cov->cov(Coef::tau1, Coef::tau2);
  const double point = f.total.tau2_hat - f.total.tau1_hat;
  const double z = opt.alpha >= 1.0
                       ? 0.0
                       : boost::math::quantile(boost::math::normal_distribution<>(),
                                               1.0 - opt.alpha / 2.0);
  const double hw = z * std::sqrt(std::max(0.0, var_diff));
  out.tau_diff = Interval{point - hw, point + hw};

  const InteractionMode mode = inter ? InteractionMode::treated : InteractionMode::none;
  auto one = [&](Which which, const GateResult& g, std::optional<Interval>& ci,
                 std::string& reason) {
    try {
      ci = delta_ci(f, *out.cov, EstimandId{which, mode}, opt.alpha, g);
    } catch (const std::exception& e) {
      reason = e.what();
    }
  };
  one(Which::ratio_of_acmes, g1, out.e1, out.e1_reason);
  one(Which::ratio_of_proportions, g2, out.e2, out.e2_reason);
  return out;
}

ReportedEstimate make_estimate(const FitBundle& f, EstimandId id, const CiSet& cis,
                               bool first, const EstimateOptions& opt, bool inter,
                               std::vector<std::string>& warnings) {
  ReportedEstimate e;
  e.id = id;
  e.ci_alpha = opt.alpha;
  e.ci_method = to_string(opt.ci_method);
  try {
    const CcmEstimate point = ccm_point(f, id);
    e.simple_value = point.simple_value;
    e.numerator = point.numerator;
    e.denominator = point.denominator;
    e.available = true;
  } catch (const DegenerateEstimandError& ex) {
    e.reason = ex.what();
    e.ci_reason = "point estimate unavailable";
    return e;
  }
  if (cis.cov) {
    try {
      e.adjusted_value = inter ? adjust_with_interaction(f, *cis.cov, id)
                         : (id.which == Which::ratio_of_acmes
                                ? adjust_estimand1_no_interaction(f, *cis.cov)
                                : adjust_estimand2_no_interaction(f, *cis.cov));
    } catch (const std::exception& ex) {
      warnings.push_back(std::string("finite-sample adjustment unavailable for ") +
                         to_string(id.which) + ": " + ex.what());
    }
  } else {
    warnings.push_back(std::string("finite-sample adjustment unavailable for ") +
                       to_string(id.which) + ": " + cis.cov_reason);
  }
  e.ci = first ? cis.e1 : cis.e2;
  e.ci_reason = first ? cis.e1_reason : cis.e2_reason;
  return e;
}

AnatomyCall classify_call(const CiSet& cis) {
  AnatomyCall a;
  std::vector<std::string> missing;
  if (!cis.tau_diff) missing.push_back("tau2 - tau1 (" + cis.tau_diff_reason + ")");
  if (!cis.e1) missing.push_back("ratio_of_acmes (" + cis.e1_reason + ")");
  if (!cis.e2) missing.push_back("ratio_of_proportions (" + cis.e2_reason + ")");
  if (!missing.empty()) {
    std::string joined;
    for (const auto& m : missing) joined += (joined.empty() ? "" : "; ") + m;
    a.reason = "classification needs intervals for the total-effect contrast and both ratios: " + joined;
    return a;
  }
  a.available = true;
  const Interval& td = *cis.tau_diff;
  std::string basis = "tau2 - tau1 ci " + interval_text(td);
  if (td.hi < 0.0) {
    a.label = AnatomyLabel::not_applicable;
    a.basis = basis + " lies below zero: arm 1's total effect exceeds arm 2's, which the "
                      "classification table does not cover (swap the arm labels to classify)";
    return a;
  }
  const AteComparison cmp = td.lo > 0.0 ? AteComparison::greater : AteComparison::equal;
  const bool e1_reject = cis.e1->excludes(1.0);
  const bool e2_reject = cis.e2->excludes(1.0);
  a.label = classify_anatomy(cmp, e1_reject, e2_reject);
  a.basis = basis +
            (cmp == AteComparison::greater ? " -> ate2 > ate1" : " -> ate2 = ate1 not rejected") +
            "; ratio_of_acmes ci " + interval_text(*cis.e1) + " excludes 1: " +
            (e1_reject ? "yes" : "no") + "; ratio_of_proportions ci " + interval_text(*cis.e2) +
            " excludes 1: " + (e2_reject ? "yes" : "no");
  return a;
}

}  // namespace

RunReport run_estimate(const Dataset& d, const EstimateOptions& opt) {
  check_options(opt);
  RunReport r;
  r.options = opt;
  r.validation = validate(d);
  r.n = d.n();
  for (const auto& f : r.validation.flags) r.warnings.push_back("validation: " + f);

  decide_form(d, opt, r.interactions_used, r.interaction_decision, r.interaction_test,
              r.warnings);
  const InteractionMode mode =
      r.interactions_used ? InteractionMode::treated : InteractionMode::none;
  const EstimandId id1{Which::ratio_of_acmes, mode};
  const EstimandId id2{Which::ratio_of_proportions, mode};

  r.gate_estimand1 = gate_for(d, id1, opt, stage_gate1);
  r.gate_estimand2 = gate_for(d, id2, opt, stage_gate2);
  if (!r.gate_estimand1.passed || !r.gate_estimand2.passed) {
    std::string what = "denominator gate failed";
    if (!r.gate_estimand1.passed) what += "; ratio_of_acmes: " + r.gate_estimand1.message;
    if (!r.gate_estimand2.passed)
      what += "; ratio_of_proportions: " + r.gate_estimand2.message;
    if (!opt.force)
      throw GateError(what + " (rerun with --force to inspect the estimates anyway)");
    r.warnings.push_back("GATE OVERRIDDEN: " + what +
                         "; the ratio estimates below are unreliable");
  }

  r.fits = fit_bundle(d, r.interactions_used);

  const CiSet cis = opt.ci_method == CiMethod::percentile
                        ? compute_percentile(d, opt, r.interactions_used)
                        : compute_delta(d, opt, r.interactions_used, r.fits,
                                        r.gate_estimand1, r.gate_estimand2);

  r.estimand1 = make_estimate(r.fits, id1, cis, true, opt, r.interactions_used, r.warnings);
  r.estimand2 = make_estimate(r.fits, id2, cis, false, opt, r.interactions_used, r.warnings);

  const std::string suffix = r.interactions_used ? "_treated" : "";
  r.effects.push_back({"ate1", ate(r.fits, 1), false});
  r.effects.push_back({"ate2", ate(r.fits, 2), false});
  for (int j : {1, 2})
    r.effects.push_back({"acme" + std::to_string(j) + suffix, acme_naive(r.fits, j, mode), true});
  for (int j : {1, 2}) {
    double pm = std::numeric_limits<double>::quiet_NaN();
    try {
      pm = proportion_mediated(r.fits, j, mode);
    } catch (const DegenerateEstimandError&) {
    }
    r.effects.push_back({"pm" + std::to_string(j) + suffix, pm, true});
  }

  r.anatomy = classify_call(cis);

  if (r.interactions_used) {
    try {
      r.diagnostic = conservatism_diagnostic(d);
      r.diagnostic_available = true;
    } catch (const SingularModelError& e) {
      r.diagnostic_reason = e.what();
    }
  } else {
    r.diagnostic_reason = "not applicable: the no-interaction outcome model was used";
  }
  return r;
}

DiagnoseReport run_diagnose(const Dataset& d, const EstimateOptions& opt) {
  check_options(opt);
  DiagnoseReport r;
  r.options = opt;
  r.validation = validate(d);
  r.n = d.n();
  for (const auto& f : r.validation.flags) r.warnings.push_back("validation: " + f);

  decide_form(d, opt, r.interactions_used, r.interaction_decision, r.interaction_test,
              r.warnings);
  const InteractionMode mode =
      r.interactions_used ? InteractionMode::treated : InteractionMode::none;
  r.gate_estimand1 = gate_for(d, EstimandId{Which::ratio_of_acmes, mode}, opt, stage_gate1);
  r.gate_estimand2 =
      gate_for(d, EstimandId{Which::ratio_of_proportions, mode}, opt, stage_gate2);

  try {
    r.diagnostic = conservatism_diagnostic(d);
    r.diagnostic_available = true;
  } catch (const SingularModelError& e) {
    r.diagnostic_reason = e.what();
  }
  return r;
}

namespace {

using nlohmann::ordered_json;

ordered_json jnum(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

ordered_json jstr_or_null(const std::string& s) {
  if (s.empty()) return nullptr;
  return s;
}

ordered_json input_json(const EstimateOptions& o) {
  return ordered_json{{"file", o.input_file},
                      {"columns",
                       ordered_json{{"t1", o.columns.t1},
                                    {"t2", o.columns.t2},
                                    {"m", o.columns.m},
                                    {"y", o.columns.y}}},
                      {"delimiter", std::string(1, o.delimiter)}};
}

ordered_json options_json(const EstimateOptions& o) {
  return ordered_json{{"alpha", o.alpha},
                      {"boot", o.b_reps},
                      {"seed", o.seed},
                      {"interaction", to_string(o.interaction)},
                      {"stratified", o.stratified},
                      {"ci", to_string(o.ci_method)},
                      {"force", o.force},
                      {"test_method", to_string(o.test_method)}};
}

ordered_json validation_json(int n, const ValidationReport& v) {
  return ordered_json{{"n", n},
                      {"arm_sizes", ordered_json(v.arm_sizes)},
                      {"flags", ordered_json(v.flags)}};
}

ordered_json test_json(const std::optional<TestResult>& t) {
  if (!t) return nullptr;
  return ordered_json{{"statistic", jnum(t->statistic)}, {"p_value", jnum(t->p_value)},
                      {"reject", t->reject},            {"method", to_string(t->method)},
                      {"b_valid", t->b_valid},          {"dropped", t->dropped}};
}

ordered_json interaction_json(InteractionChoice requested, bool used,
                              const std::string& decision,
                              const std::optional<TestResult>& test) {
  return ordered_json{{"requested", to_string(requested)},
                      {"used", used},
                      {"decision", decision},
                      {"test", test_json(test)}};
}

ordered_json gate_json(const GateResult& g) {
  return ordered_json{
      {"passed", g.passed},
      {"alpha", g.alpha},
      {"denominator_ci",
       ordered_json{{"lo", jnum(g.denominator_ci.lo)}, {"hi", jnum(g.denominator_ci.hi)}}},
      {"message", g.message}};
}

ordered_json fits_json(const FitBundle& f) {
  const bool inter = f.outcome.interactions_included;
  ordered_json arms = ordered_json::array();
  for (const auto& a : f.arms)
    arms.push_back(ordered_json{{"arm", to_string(a.arm)},
                                {"n", a.n_arm},
                                {"mean_m", jnum(a.mean_m)},
                                {"mean_y", jnum(a.mean_y)},
                                {"var_m", jnum(a.var_m)},
                                {"var_y", jnum(a.var_y)}});
  return ordered_json{
      {"n", f.n},
      {"mediator",
       ordered_json{{"pi", jnum(f.mediator.pi_hat)},
                    {"alpha1", jnum(f.mediator.alpha1_hat)},
                    {"alpha2", jnum(f.mediator.alpha2_hat)},
                    {"resid_var", jnum(f.mediator.resid_var_eta)}}},
      {"outcome",
       ordered_json{{"interactions_included", inter},
                    {"lambda", jnum(f.outcome.lambda_hat)},
                    {"delta1", jnum(f.outcome.delta1_hat)},
                    {"delta2", jnum(f.outcome.delta2_hat)},
                    {"beta", jnum(f.outcome.beta_hat)},
                    {"gamma1", inter ? jnum(f.outcome.gamma1_hat) : ordered_json(nullptr)},
                    {"gamma2", inter ? jnum(f.outcome.gamma2_hat) : ordered_json(nullptr)},
                    {"omega1", inter ? jnum(f.outcome.omega1_hat) : ordered_json(nullptr)},
                    {"omega2", inter ? jnum(f.outcome.omega2_hat) : ordered_json(nullptr)},
                    {"resid_var", jnum(f.outcome.resid_var_iota)}}},
      {"total",
       ordered_json{{"chi", jnum(f.total.chi_hat)},
                    {"tau1", jnum(f.total.tau1_hat)},
                    {"tau2", jnum(f.total.tau2_hat)},
                    {"resid_var", jnum(f.total.resid_var_rho)}}},
      {"arms", arms}};
}

ordered_json estimate_json(const ReportedEstimate& e) {
  ordered_json ci = nullptr;
  if (e.ci)
    ci = ordered_json{{"lo", jnum(e.ci->lo)},
                      {"hi", jnum(e.ci->hi)},
                      {"alpha", e.ci_alpha},
                      {"method", e.ci_method}};
  return ordered_json{{"estimand", to_string(e.id.which)},
                      {"form", to_string(e.id.interaction_mode)},
                      {"available", e.available},
                      {"reason", jstr_or_null(e.reason)},
                      {"simple", e.available ? jnum(e.simple_value) : ordered_json(nullptr)},
                      {"adjusted", e.adjusted_value ? jnum(*e.adjusted_value) : ordered_json(nullptr)},
                      {"numerator", e.available ? jnum(e.numerator) : ordered_json(nullptr)},
                      {"denominator", e.available ? jnum(e.denominator) : ordered_json(nullptr)},
                      {"ci", ci},
                      {"ci_reason", jstr_or_null(e.ci_reason)}};
}

ordered_json diagnostic_json(bool available, const std::string& reason,
                             const std::optional<DiagnosticResult>& diag) {
  return ordered_json{{"available", available},
                      {"reason", jstr_or_null(reason)},
                      {"holds", diag ? ordered_json(diag->holds) : ordered_json(nullptr)},
                      {"lhs", diag ? jnum(diag->lhs) : ordered_json(nullptr)},
                      {"rhs", diag ? jnum(diag->rhs) : ordered_json(nullptr)},
                      {"caveat", diag ? ordered_json(diag->caveat) : ordered_json(nullptr)}};
}

ordered_json anatomy_json(const AnatomyCall& a) {
  return ordered_json{{"available", a.available},
                      {"reason", jstr_or_null(a.reason)},
                      {"label", a.available ? ordered_json(to_string(a.label)) : ordered_json(nullptr)},
                      {"basis", jstr_or_null(a.basis)}};
}

}  // namespace

nlohmann::ordered_json to_json(const RunReport& r) {
  ordered_json effects = ordered_json::array();
  for (const auto& e : r.effects)
    effects.push_back(ordered_json{{"label", e.label},
                                   {"value", jnum(e.value)},
                                   {"confounding_sensitive", e.confounding_sensitive}});
  return ordered_json{
      {"kind", "estimate"},
      {"input", input_json(r.options)},
      {"options", options_json(r.options)},
      {"validation", validation_json(r.n, r.validation)},
      {"interaction", interaction_json(r.options.interaction, r.interactions_used,
                                       r.interaction_decision, r.interaction_test)},
      {"fits", fits_json(r.fits)},
      {"gates", ordered_json{{"ratio_of_acmes", gate_json(r.gate_estimand1)},
                             {"ratio_of_proportions", gate_json(r.gate_estimand2)}}},
      {"estimates", ordered_json{{"ratio_of_acmes", estimate_json(r.estimand1)},
                                 {"ratio_of_proportions", estimate_json(r.estimand2)}}},
      {"effects", effects},
      {"diagnostic", diagnostic_json(r.diagnostic_available, r.diagnostic_reason, r.diagnostic)},
      {"anatomy", anatomy_json(r.anatomy)},
      {"warnings", ordered_json(r.warnings)}};
}

nlohmann::ordered_json to_json(const DiagnoseReport& r) {
  return ordered_json{
      {"kind", "diagnose"},
      {"input", input_json(r.options)},
      {"options", options_json(r.options)},
      {"validation", validation_json(r.n, r.validation)},
      {"interaction", interaction_json(r.options.interaction, r.interactions_used,
                                       r.interaction_decision, r.interaction_test)},
      {"gates", ordered_json{{"ratio_of_acmes", gate_json(r.gate_estimand1)},
                             {"ratio_of_proportions", gate_json(r.gate_estimand2)}}},
      {"diagnostic", diagnostic_json(r.diagnostic_available, r.diagnostic_reason, r.diagnostic)},
      {"warnings", ordered_json(r.warnings)}};
}

nlohmann::ordered_json to_json(const McSummary& s) {
  ordered_json records = ordered_json::array();
  for (const auto& rec : s.records)
    records.push_back(ordered_json{{"label", rec.label},
                                   {"mean_estimate", jnum(rec.mean_estimate)},
                                   {"true_value", jnum(rec.true_value)},
                                   {"coverage_95", jnum(rec.coverage_95)},
                                   {"mean_ci_width", jnum(rec.mean_ci_width)}});
  return ordered_json{
      {"kind", "simulation"},
      {"r_reps", s.r_reps},
      {"failures", s.failures},
      {"mean_bias_acme1", jnum(s.mean_bias_acme1)},
      {"mean_bias_acme2", jnum(s.mean_bias_acme2)},
      {"coverage_acme1", jnum(s.coverage_acme1)},
      {"coverage_acme2", jnum(s.coverage_acme2)},
      {"diagnostic_holds_rate", jnum(s.diagnostic_holds_rate)},
      {"truths",
       ordered_json{{"acme1", jnum(s.truths.acme1)},
                    {"acme2", jnum(s.truths.acme2)},
                    {"tau1", jnum(s.truths.tau1)},
                    {"tau2", jnum(s.truths.tau2)},
                    {"estimand1", jnum(s.truths.estimand1)},
                    {"estimand2", jnum(s.truths.estimand2)},
                    {"treated_forms", s.truths.treated_forms},
                    {"method", s.truths.method}}},
      {"records", records}};
}

namespace {

void render_header(std::ostringstream& os, const char* title, const EstimateOptions& o,
                   int n, const ValidationReport& v) {
  os << title << "\n";
  os << "  input: " << (o.input_file.empty() ? "(stream)" : o.input_file) << "  (n = " << n
     << "; arms " << v.arm_sizes[0] << "/" << v.arm_sizes[1] << "/" << v.arm_sizes[2]
     << ")\n";
  os << "  options: alpha " << fmt(o.alpha) << ", boot " << o.b_reps << ", seed " << o.seed
     << ", interaction " << to_string(o.interaction) << ", ci " << to_string(o.ci_method)
     << ", stratified " << (o.stratified ? "yes" : "no") << ", force "
     << (o.force ? "yes" : "no") << "\n";
}

void render_interaction(std::ostringstream& os, const std::string& decision,
                        const std::optional<TestResult>& test) {
  os << "\noutcome model\n  " << decision << "\n";
  if (test) {
    os << "  interaction test: W = " << fmt(test->statistic) << ", p = " << fmt(test->p_value)
       << " (" << to_string(test->method) << ") -> "
       << (test->reject ? "additivity rejected" : "additivity not rejected") << "\n";
  }
}

void render_gates(std::ostringstream& os, const GateResult& g1, const GateResult& g2) {
  os << "\ndenominator gates (alpha " << fmt(g1.alpha) << ")\n";
  const auto line = [&](const char* label, const GateResult& g) {
    os << "  " << label << ": " << (g.passed ? "PASSED" : "FAILED") << "  ci "
       << interval_text(g.denominator_ci) << "\n    " << g.message << "\n";
  };
  line("ratio_of_acmes", g1);
  line("ratio_of_proportions", g2);
}

void render_diagnostic(std::ostringstream& os, bool available, const std::string& reason,
                       const std::optional<DiagnosticResult>& diag) {
  os << "\nconservatism diagnostic\n";
  if (!available) {
    os << "  unavailable: " << reason << "\n";
    return;
  }
  os << "  holds: " << (diag->holds ? "yes" : "no") << "  (lhs " << fmt(diag->lhs)
     << (diag->holds ? " > " : " <= ") << "rhs " << fmt(diag->rhs) << ")\n";
  os << "  note: " << diag->caveat << "\n";
}

void render_warnings(std::ostringstream& os, const std::vector<std::string>& warnings) {
  if (warnings.empty()) {
    os << "\nwarnings: none\n";
    return;
  }
  os << "\nwarnings\n";
  for (const auto& w : warnings) os << "  - " << w << "\n";
}

}  // namespace

std::string render_text(const RunReport& r) {
  std::ostringstream os;
  render_header(os, "comparative mediation estimate", r.options, r.n, r.validation);
  render_interaction(os, r.interaction_decision, r.interaction_test);

  const auto& f = r.fits;
  os << "\nmodel fits\n";
  os << "  mediator: pi " << fmt(f.mediator.pi_hat) << ", alpha1 " << fmt(f.mediator.alpha1_hat)
     << ", alpha2 " << fmt(f.mediator.alpha2_hat) << ", resid var "
     << fmt(f.mediator.resid_var_eta) << "\n";
  os << "  outcome:  lambda " << fmt(f.outcome.lambda_hat) << ", delta1 "
     << fmt(f.outcome.delta1_hat) << ", delta2 " << fmt(f.outcome.delta2_hat) << ", beta "
     << fmt(f.outcome.beta_hat);
  if (f.outcome.interactions_included)
    os << ", gamma1 " << fmt(f.outcome.gamma1_hat) << ", gamma2 " << fmt(f.outcome.gamma2_hat)
       << ", omega1 " << fmt(f.outcome.omega1_hat) << ", omega2 " << fmt(f.outcome.omega2_hat);
  os << ", resid var " << fmt(f.outcome.resid_var_iota) << "\n";
  os << "  total:    chi " << fmt(f.total.chi_hat) << ", tau1 " << fmt(f.total.tau1_hat)
     << ", tau2 " << fmt(f.total.tau2_hat) << ", resid var " << fmt(f.total.resid_var_rho)
     << "\n";

  render_gates(os, r.gate_estimand1, r.gate_estimand2);

  os << "\nestimates\n";
  const auto est = [&](const ReportedEstimate& e) {
    os << "  " << to_string(e.id.which) << " (form " << to_string(e.id.interaction_mode)
       << ")\n";
    if (!e.available) {
      os << "    unavailable: " << e.reason << "\n";
      return;
    }
    os << "    simple " << fmt(e.simple_value) << "  adjusted "
       << (e.adjusted_value ? fmt(*e.adjusted_value) : "n/a") << "  (numerator "
       << fmt(e.numerator) << ", denominator " << fmt(e.denominator) << ")\n";
    if (e.ci)
      os << "    ci " << interval_text(*e.ci) << "  (" << e.ci_method << ", alpha "
         << fmt(e.ci_alpha) << ")\n";
    else
      os << "    ci unavailable: " << e.ci_reason << "\n";
  };
  est(r.estimand1);
  est(r.estimand2);

  os << "\neffect scale (point estimates)\n";
  for (const auto& e : r.effects)
    os << "  " << e.label << " = " << fmt(e.value)
       << (e.confounding_sensitive ? "  [confounding-sensitive]" : "") << "\n";

  render_diagnostic(os, r.diagnostic_available, r.diagnostic_reason, r.diagnostic);

  os << "\ncausal anatomy\n";
  if (r.anatomy.available) {
    os << "  label: " << to_string(r.anatomy.label) << "\n  basis: " << r.anatomy.basis << "\n";
  } else {
    os << "  unavailable: " << r.anatomy.reason << "\n";
  }

  render_warnings(os, r.warnings);
  return os.str();
}

std::string render_text(const DiagnoseReport& r) {
  std::ostringstream os;
  render_header(os, "comparative mediation diagnostics", r.options, r.n, r.validation);
  render_interaction(os, r.interaction_decision, r.interaction_test);
  render_gates(os, r.gate_estimand1, r.gate_estimand2);
  render_diagnostic(os, r.diagnostic_available, r.diagnostic_reason, r.diagnostic);
  render_warnings(os, r.warnings);
  return os.str();
}

namespace {

double config_number(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number())
    throw SchemaError("config: field \"" + path + "\" must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x))
    throw SchemaError("config: field \"" + path + "\" must be finite");
  return x;
}

void parse_normal_spec(const nlohmann::json& v, const std::string& path, NormalSpec& into) {
  if (!v.is_object())
    throw SchemaError("config: field \"" + path +
                      "\" must be an object with \"mean\" and \"var\"");
  for (const auto& [key, sub] : v.items()) {
    if (key == "mean") {
      into.mean = config_number(sub, path + ".mean");
    } else if (key == "var") {
      into.var = config_number(sub, path + ".var");
      if (into.var < 0.0)
        throw SchemaError("config: field \"" + path + ".var\" must be >= 0");
    } else {
      throw SchemaError("config: unknown field \"" + path + "." + key + "\"");
    }
  }
}

}  // namespace

SimulationConfig parse_simulation_config(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("config: root must be a JSON object");
  static const std::set<std::string> known = {
      "n_per_arm", "seed",   "pi",  "lambda", "alpha1",  "alpha2",       "beta",
      "delta1",    "delta2", "psi", "phi",    "x_range", "interactions"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) throw SchemaError("config: unknown field \"" + key + "\"");
  }

  SimulationConfig cfg = preset_no_interaction();
  if (j.contains("n_per_arm")) {
    const auto& v = j.at("n_per_arm");
    if (!v.is_number_integer() || v.get<long long>() < 2)
      throw SchemaError("config: field \"n_per_arm\" must be an integer >= 2");
    cfg.n_per_arm = v.get<int>();
  }
  if (j.contains("seed")) {
    const auto& v = j.at("seed");
    if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)))
      throw SchemaError("config: field \"seed\" must be a non-negative integer");
    cfg.seed = v.get<std::uint64_t>();
  }
  const std::pair<const char*, NormalSpec*> specs[] = {
      {"pi", &cfg.pi},         {"lambda", &cfg.lambda}, {"alpha1", &cfg.alpha1},
      {"alpha2", &cfg.alpha2}, {"beta", &cfg.beta},     {"delta1", &cfg.delta1},
      {"delta2", &cfg.delta2}, {"psi", &cfg.psi},       {"phi", &cfg.phi}};
  for (const auto& [key, into] : specs)
    if (j.contains(key)) parse_normal_spec(j.at(key), key, *into);

  if (j.contains("x_range")) {
    const auto& v = j.at("x_range");
    if (!v.is_array() || v.size() != 2)
      throw SchemaError("config: field \"x_range\" must be an array [lo, hi]");
    cfg.x_lo = config_number(v.at(0), "x_range[0]");
    cfg.x_hi = config_number(v.at(1), "x_range[1]");
    if (cfg.x_hi < cfg.x_lo)
      throw SchemaError("config: field \"x_range\" must satisfy lo <= hi");
  }

  if (j.contains("interactions") && !j.at("interactions").is_null()) {
    const auto& v = j.at("interactions");
    if (!v.is_object())
      throw SchemaError(
          "config: field \"interactions\" must be an object with \"gamma1\" and \"gamma2\" or null");
    InteractionSpecs inter = *preset_interacted().interactions;
    for (const auto& [key, sub] : v.items()) {
      if (key == "gamma1") {
        parse_normal_spec(sub, "interactions.gamma1", inter.gamma1);
      } else if (key == "gamma2") {
        parse_normal_spec(sub, "interactions.gamma2", inter.gamma2);
      } else {
        throw SchemaError("config: unknown field \"interactions." + key + "\"");
      }
    }
    cfg.interactions = inter;
  }
  return cfg;
}

}  // namespace ccm
