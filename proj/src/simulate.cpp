#include "ccm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ccm/adjust.hpp"
#include "ccm/errors.hpp"
#include "ccm/estimators.hpp"
#include "ccm/inference.hpp"
#include "ccm/least_squares.hpp"
#include "ccm/rng.hpp"
#include "resample.hpp"

namespace ccm {

SimulationConfig preset_no_interaction() { return SimulationConfig{}; }

SimulationConfig preset_interacted() {
  SimulationConfig cfg;
  cfg.n_per_arm = 1000;
  cfg.interactions = InteractionSpecs{{1.0, 2.0}, {4.0, 2.0}};
  return cfg;
}

namespace {

void check_spec(const NormalSpec& s, const char* name) {
  if (!(s.var >= 0.0) || !std::isfinite(s.var) || !std::isfinite(s.mean)) {
    throw std::invalid_argument(std::string("distribution spec for ") + name +
                                " needs a finite mean and variance >= 0");
  }
}

void check_config(const SimulationConfig& cfg) {
  if (cfg.n_per_arm < 2) {
    throw std::invalid_argument("n_per_arm must be at least 2");
  }
  check_spec(cfg.pi, "pi");
  check_spec(cfg.lambda, "lambda");
  check_spec(cfg.alpha1, "alpha1");
  check_spec(cfg.alpha2, "alpha2");
  check_spec(cfg.beta, "beta");
  check_spec(cfg.delta1, "delta1");
  check_spec(cfg.delta2, "delta2");
  check_spec(cfg.psi, "psi");
  check_spec(cfg.phi, "phi");
  if (cfg.interactions) {
    check_spec(cfg.interactions->gamma1, "gamma1");
    check_spec(cfg.interactions->gamma2, "gamma2");
  }
  if (!(cfg.x_hi >= cfg.x_lo)) {
    throw std::invalid_argument("confounder range needs x_hi >= x_lo");
  }
}

Dataset generate_impl(const SimulationConfig& cfg, std::uint64_t replicate_seed,
                      std::vector<double>* x_out, bool with_interactions) {
  check_config(cfg);
  CounterRng rng(replicate_seed,
                 CounterRng::stream_id(stream_purpose::generate));
  Dataset d;
  d.rows.reserve(static_cast<std::size_t>(3 * cfg.n_per_arm));
  for (int arm = 0; arm < 3; ++arm) {
    const int t1 = arm == 1 ? 1 : 0;
    const int t2 = arm == 2 ? 1 : 0;
    for (int i = 0; i < cfg.n_per_arm; ++i) {
      const double x = rng.uniform(cfg.x_lo, cfg.x_hi);
      const double pi = rng.normal(cfg.pi.mean, cfg.pi.var);
      const double a1 = rng.normal(cfg.alpha1.mean, cfg.alpha1.var);
      const double a2 = rng.normal(cfg.alpha2.mean, cfg.alpha2.var);
      const double psi = rng.normal(cfg.psi.mean, cfg.psi.var);
      const double m = pi + a1 * t1 + a2 * t2 + psi * x;

      const double lambda = rng.normal(cfg.lambda.mean, cfg.lambda.var);
      const double d1 = rng.normal(cfg.delta1.mean, cfg.delta1.var);
      const double d2 = rng.normal(cfg.delta2.mean, cfg.delta2.var);
      const double beta = rng.normal(cfg.beta.mean, cfg.beta.var);
      double g1 = 0.0;
      double g2 = 0.0;
      if (with_interactions) {
        g1 = rng.normal(cfg.interactions->gamma1.mean,
                        cfg.interactions->gamma1.var);
        g2 = rng.normal(cfg.interactions->gamma2.mean,
                        cfg.interactions->gamma2.var);
      }
      const double phi = rng.normal(cfg.phi.mean, cfg.phi.var);
      const double y = lambda + d1 * t1 + d2 * t2 + beta * m +
                       g1 * t1 * m + g2 * t2 * m + phi * x;
      d.rows.push_back({t1, t2, m, y});
      if (x_out) x_out->push_back(x);
    }
  }
  return d;
}

}  // namespace

Dataset generate_no_interaction(const SimulationConfig& cfg,
                                std::uint64_t replicate_seed,
                                std::vector<double>* x_out) {
  if (cfg.interactions) {
    throw ModeError(
        "config carries interaction specs; use generate_with_interaction");
  }
  return generate_impl(cfg, replicate_seed, x_out, false);
}

Dataset generate_with_interaction(const SimulationConfig& cfg,
                                  std::uint64_t replicate_seed,
                                  std::vector<double>* x_out) {
  if (!cfg.interactions) {
    throw ModeError(
        "config has no interaction specs; use generate_no_interaction");
  }
  return generate_impl(cfg, replicate_seed, x_out, true);
}

TrueEstimands true_estimands(const SimulationConfig& cfg) {
  check_config(cfg);
  TrueEstimands t;
  if (!cfg.interactions) {
    // Unit-level coefficients are independent, so every population quantity
    // is a product/sum of the parameter means.
    t.acme1 = cfg.alpha1.mean * cfg.beta.mean;
    t.acme2 = cfg.alpha2.mean * cfg.beta.mean;
    t.tau1 = cfg.delta1.mean + t.acme1;
    t.tau2 = cfg.delta2.mean + t.acme2;
    t.estimand1 = t.acme2 / t.acme1;
    t.estimand2 = (t.acme2 / t.tau2) / (t.acme1 / t.tau1);
    t.treated_forms = false;
    t.method = "analytic";
    return t;
  }

  // With interactions the total effects pick up gamma * (pi + psi X)
  // pathways; evaluate all targets by simulating unit-level potential
  // outcomes at large n.
  const long units = 2'000'000;
  CounterRng rng(cfg.seed, CounterRng::stream_id(stream_purpose::truth));
  double sum_acme1 = 0.0, sum_acme2 = 0.0, sum_tau1 = 0.0, sum_tau2 = 0.0;
  for (long i = 0; i < units; ++i) {
    const double x = rng.uniform(cfg.x_lo, cfg.x_hi);
    const double pi = rng.normal(cfg.pi.mean, cfg.pi.var);
    const double a1 = rng.normal(cfg.alpha1.mean, cfg.alpha1.var);
    const double a2 = rng.normal(cfg.alpha2.mean, cfg.alpha2.var);
    const double psi = rng.normal(cfg.psi.mean, cfg.psi.var);
    const double d1 = rng.normal(cfg.delta1.mean, cfg.delta1.var);
    const double d2 = rng.normal(cfg.delta2.mean, cfg.delta2.var);
    const double beta = rng.normal(cfg.beta.mean, cfg.beta.var);
    const double g1 = rng.normal(cfg.interactions->gamma1.mean,
                                 cfg.interactions->gamma1.var);
    const double g2 = rng.normal(cfg.interactions->gamma2.mean,
                                 cfg.interactions->gamma2.var);
    const double m0 = pi + psi * x;
    // Mediated effect for arm j in the treated condition: slope there times
    // the mediator shift; total effect: potential-outcome difference with the
    // unit's own confounder (lambda and phi*x cancel).
    sum_acme1 += (beta + g1) * a1;
    sum_acme2 += (beta + g2) * a2;
    sum_tau1 += d1 + (beta + g1) * (m0 + a1) - beta * m0;
    sum_tau2 += d2 + (beta + g2) * (m0 + a2) - beta * m0;
  }
  t.acme1 = sum_acme1 / units;
  t.acme2 = sum_acme2 / units;
  t.tau1 = sum_tau1 / units;
  t.tau2 = sum_tau2 / units;
  t.estimand1 = t.acme2 / t.acme1;
  t.estimand2 = (t.acme2 / t.tau2) / (t.acme1 / t.tau1);
  t.treated_forms = true;
  t.method = "simulation";
  return t;
}

const McEstimandRecord& McSummary::record(const std::string& label) const {
  for (const auto& r : records) {
    if (r.label == label) return r;
  }
  throw std::out_of_range("no Monte Carlo record labeled " + label);
}

namespace {

struct RecordCell {
  std::string label;
  double estimate = 0.0;
  Interval ci;
  double true_value = 0.0;
};

}  // namespace

McSummary monte_carlo(const SimulationConfig& cfg, int r_reps, int b_boot,
                      std::uint64_t seed) {
  if (r_reps < 2) throw std::invalid_argument("r_reps must be at least 2");
  const bool inter = cfg.interactions.has_value();
  const TrueEstimands truths = true_estimands(cfg);
  const double true_pm1 = truths.acme1 / truths.tau1;
  const double true_pm2 = truths.acme2 / truths.tau2;

  const std::vector<Statistic> stats =
      inter ? std::vector<Statistic>{Statistic::acme1_treated,
                                     Statistic::acme2_treated,
                                     Statistic::pm1_treated,
                                     Statistic::pm2_treated,
                                     Statistic::estimand1_treated,
                                     Statistic::estimand2_treated}
            : std::vector<Statistic>{Statistic::acme1, Statistic::acme2,
                                     Statistic::pm1, Statistic::pm2,
                                     Statistic::estimand1,
                                     Statistic::estimand2};
  const std::string suffix = inter ? "_treated" : "";
  const std::vector<std::string> labels = {
      "naive_acme1" + suffix,          "naive_acme2" + suffix,
      "naive_pm1" + suffix,            "naive_pm2" + suffix,
      "estimand1" + suffix + "_simple", "estimand1" + suffix + "_adjusted",
      "estimand2" + suffix + "_simple", "estimand2" + suffix + "_adjusted"};
  const std::vector<double> record_truths = {
      truths.acme1, truths.acme2,     true_pm1,         true_pm2,
      truths.estimand1, truths.estimand1, truths.estimand2, truths.estimand2};

  McSummary out;
  out.truths = truths;
  const std::size_t n_rec = labels.size();
  std::vector<double> sum_est(n_rec, 0.0), sum_width(n_rec, 0.0);
  std::vector<int> covered_count(n_rec, 0);
  int holds = 0;

  const InteractionMode mode =
      inter ? InteractionMode::treated : InteractionMode::none;
  const EstimandId id1{Which::ratio_of_acmes, mode};
  const EstimandId id2{Which::ratio_of_proportions, mode};

  for (int r = 0; r < r_reps; ++r) {
    const std::uint64_t rep_seed = derive_seed(seed, static_cast<std::uint32_t>(r));
    try {
      const Dataset d = inter ? generate_with_interaction(cfg, rep_seed)
                              : generate_no_interaction(cfg, rep_seed);
      const FitBundle bundle = fit_bundle(d, inter);

      detail::EngineSpec spec;
      spec.stats = stats;
      spec.b = b_boot;
      spec.seed = rep_seed;
      spec.collect_coefs = inter;
      spec.coefs_with_omega = inter;
      detail::EngineResult res = detail::run_resampling(d, spec);

      std::array<Interval, 6> cis;
      for (int k = 0; k < 6; ++k) {
        auto& vals = res.stat_values[static_cast<std::size_t>(k)];
        if (static_cast<int>(vals.size()) < static_cast<int>(0.9 * b_boot)) {
          throw ResamplingError(std::string("statistic ") +
                                to_string(stats[static_cast<std::size_t>(k)]) +
                                " was undefined on too many resamples");
        }
        std::sort(vals.begin(), vals.end());
        BootstrapDistribution bd;
        bd.statistic = stats[static_cast<std::size_t>(k)];
        bd.values = std::move(vals);
        bd.b_requested = b_boot;
        bd.b_valid = static_cast<int>(bd.values.size());
        cis[static_cast<std::size_t>(k)] = percentile_ci(bd, 0.05);
      }

      const CoefficientCovariances cov =
          inter ? detail::empirical_covariances(res.coef_rows, b_boot,
                                                res.coef_dropped, true)
                : coefficient_covariances(d, CovScheme::analytic_homoskedastic);

      std::array<RecordCell, 8> cells;
      for (std::size_t k = 0; k < n_rec; ++k) {
        cells[k].label = labels[k];
        cells[k].true_value = record_truths[k];
      }
      cells[0].estimate = acme_naive(bundle, 1, mode);
      cells[1].estimate = acme_naive(bundle, 2, mode);
      cells[2].estimate = proportion_mediated(bundle, 1, mode);
      cells[3].estimate = proportion_mediated(bundle, 2, mode);
      cells[4].estimate = ccm_point(bundle, id1).simple_value;
      cells[6].estimate = ccm_point(bundle, id2).simple_value;
      if (inter) {
        cells[5].estimate = adjust_with_interaction(bundle, cov, id1);
        cells[7].estimate = adjust_with_interaction(bundle, cov, id2);
      } else {
        cells[5].estimate = adjust_estimand1_no_interaction(bundle, cov);
        cells[7].estimate = adjust_estimand2_no_interaction(bundle, cov);
      }
      for (int k = 0; k < 4; ++k) cells[static_cast<std::size_t>(k)].ci = cis[static_cast<std::size_t>(k)];
      cells[4].ci = cis[4];
      cells[5].ci = cis[4];  // adjusted records share the simple interval
      cells[6].ci = cis[5];
      cells[7].ci = cis[5];

      const bool diag_holds = inter && conservatism_diagnostic(d).holds;

      // Replicate succeeded; commit its contributions.
      for (std::size_t k = 0; k < n_rec; ++k) {
        const bool cov_flag = cells[k].ci.contains(cells[k].true_value);
        sum_est[k] += cells[k].estimate;
        sum_width[k] += cells[k].ci.hi - cells[k].ci.lo;
        covered_count[k] += cov_flag ? 1 : 0;
        out.replicate_table.push_back({r, cells[k].label, cells[k].estimate,
                                       cells[k].ci.lo, cells[k].ci.hi,
                                       cov_flag});
      }
      if (diag_holds) ++holds;
      ++out.r_reps;
    } catch (const std::exception&) {
      ++out.failures;
      if (out.failures > 0.05 * r_reps) {
        throw ResamplingError(
            "more than 5% of Monte Carlo replicates failed (" +
            std::to_string(out.failures) + " of " + std::to_string(r_reps) +
            " attempted)");
      }
    }
  }

  out.records.reserve(n_rec);
  const double denom = std::max(out.r_reps, 1);
  for (std::size_t k = 0; k < n_rec; ++k) {
    McEstimandRecord rec;
    rec.label = labels[k];
    rec.mean_estimate = sum_est[k] / denom;
    rec.true_value = record_truths[k];
    rec.coverage_95 = covered_count[k] / denom;
    rec.mean_ci_width = sum_width[k] / denom;
    out.records.push_back(std::move(rec));
  }
  out.mean_bias_acme1 = out.records[0].mean_estimate - truths.acme1;
  out.mean_bias_acme2 = out.records[1].mean_estimate - truths.acme2;
  out.coverage_acme1 = out.records[0].coverage_95;
  out.coverage_acme2 = out.records[1].coverage_95;
  out.diagnostic_holds_rate =
      inter ? holds / denom : std::numeric_limits<double>::quiet_NaN();
  return out;
}

void write_replicate_table(std::ostream& os, const McSummary& summary) {
  const auto saved = os.precision(std::numeric_limits<double>::max_digits10);
  os << "replicate,label,estimate,ci_lo,ci_hi,covered\n";
  for (const auto& row : summary.replicate_table) {
    os << row.replicate << ',' << row.label << ',' << row.estimate << ','
       << row.ci_lo << ',' << row.ci_hi << ',' << (row.covered ? 1 : 0)
       << '\n';
  }
  os.precision(saved);
}

}  // namespace ccm
