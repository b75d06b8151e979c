#include "resample.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <iterator>
#include <limits>
#include <string>
#include <thread>

#include "ccm/errors.hpp"
#include "ccm/rng.hpp"

namespace ccm::detail {

bool statistic_uses_alpha(Statistic s) {
  switch (s) {
    case Statistic::tau1:
    case Statistic::tau2:
    case Statistic::tau_diff:
    case Statistic::beta:
      return false;
    default:
      return true;
  }
}

bool statistic_uses_tau(Statistic s) {
  switch (s) {
    case Statistic::tau1:
    case Statistic::tau2:
    case Statistic::tau_diff:
    case Statistic::pm1:
    case Statistic::pm2:
    case Statistic::pm1_treated:
    case Statistic::pm2_treated:
    case Statistic::estimand2:
    case Statistic::estimand2_treated:
      return true;
    default:
      return false;
  }
}

bool statistic_uses_beta(Statistic s) {
  switch (s) {
    case Statistic::beta:
    case Statistic::acme1:
    case Statistic::acme2:
    case Statistic::pm1:
    case Statistic::pm2:
      return true;
    default:
      return false;
  }
}

bool statistic_uses_omega(Statistic s) {
  switch (s) {
    case Statistic::acme1_treated:
    case Statistic::acme2_treated:
    case Statistic::pm1_treated:
    case Statistic::pm2_treated:
    case Statistic::estimand1_treated:
    case Statistic::estimand2_treated:
      return true;
    default:
      return false;
  }
}

namespace {

double finite_or_nan(double v) {
  return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::optional<double> evaluate_statistic(Statistic s, const ResampleFits& f) {
  const bool need_med = statistic_uses_alpha(s);
  const bool need_tot = statistic_uses_tau(s);
  const bool need_plain = statistic_uses_beta(s);
  const bool need_inter = statistic_uses_omega(s);
  if ((need_med && !f.med) || (need_tot && !f.tot) ||
      (need_plain && !f.out_plain) || (need_inter && !f.out_inter)) {
    return std::nullopt;
  }
  double v = 0.0;
  switch (s) {
    case Statistic::tau1: v = f.tot->tau1_hat; break;
    case Statistic::tau2: v = f.tot->tau2_hat; break;
    case Statistic::tau_diff: v = f.tot->tau2_hat - f.tot->tau1_hat; break;
    case Statistic::beta: v = f.out_plain->beta_hat; break;
    case Statistic::acme1: v = f.med->alpha1_hat * f.out_plain->beta_hat; break;
    case Statistic::acme2: v = f.med->alpha2_hat * f.out_plain->beta_hat; break;
    case Statistic::acme1_treated:
      v = f.med->alpha1_hat * f.out_inter->omega1_hat;
      break;
    case Statistic::acme2_treated:
      v = f.med->alpha2_hat * f.out_inter->omega2_hat;
      break;
    case Statistic::pm1:
      v = f.med->alpha1_hat * f.out_plain->beta_hat / f.tot->tau1_hat;
      break;
    case Statistic::pm2:
      v = f.med->alpha2_hat * f.out_plain->beta_hat / f.tot->tau2_hat;
      break;
    case Statistic::pm1_treated:
      v = f.med->alpha1_hat * f.out_inter->omega1_hat / f.tot->tau1_hat;
      break;
    case Statistic::pm2_treated:
      v = f.med->alpha2_hat * f.out_inter->omega2_hat / f.tot->tau2_hat;
      break;
    case Statistic::estimand1: v = f.med->alpha2_hat / f.med->alpha1_hat; break;
    case Statistic::estimand2:
      v = f.med->alpha2_hat * f.tot->tau1_hat /
          (f.med->alpha1_hat * f.tot->tau2_hat);
      break;
    case Statistic::estimand1_treated:
      v = f.med->alpha2_hat * f.out_inter->omega2_hat /
          (f.med->alpha1_hat * f.out_inter->omega1_hat);
      break;
    case Statistic::estimand2_treated:
      v = f.med->alpha2_hat * f.out_inter->omega2_hat * f.tot->tau1_hat /
          (f.med->alpha1_hat * f.out_inter->omega1_hat * f.tot->tau2_hat);
      break;
  }
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

CoefficientCovariances empirical_covariances(const Eigen::MatrixXd& coef_rows,
                                             int b_reps, int dropped,
                                             bool has_omega) {
  const int used = static_cast<int>(coef_rows.rows());
  if (used < static_cast<int>(0.9 * b_reps)) {
    throw ResamplingError("only " + std::to_string(used) + " of " +
                          std::to_string(b_reps) +
                          " resamples produced usable coefficient fits");
  }
  CoefficientCovariances c;
  c.scheme = CovScheme::bootstrap;
  c.b_reps = b_reps;
  c.b_valid = used;
  c.dropped = dropped;
  c.has_omega = has_omega;
  const Eigen::MatrixXd centered =
      coef_rows.rowwise() - coef_rows.colwise().mean();
  c.entries = (centered.adjoint() * centered) / (used - 1);
  if (dropped > 0.01 * b_reps) {
    c.warning = std::to_string(dropped) + " of " + std::to_string(b_reps) +
                " resamples dropped (singular refits); covariance estimates "
                "may be unstable";
  }
  return c;
}

int resampling_threads() {
  if (const char* env = std::getenv("CCM_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 256) {
      return static_cast<int>(v);
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

EngineResult run_resampling(const Dataset& d, const EngineSpec& spec) {
  const int n = d.n();
  const int b = spec.b;
  const int n_stats = static_cast<int>(spec.stats.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  bool need_med = spec.collect_coefs;
  bool need_tot = spec.collect_coefs;
  bool need_plain = false;
  bool need_inter = spec.collect_coefs && spec.coefs_with_omega;
  for (Statistic s : spec.stats) {
    need_med = need_med || statistic_uses_alpha(s);
    need_tot = need_tot || statistic_uses_tau(s);
    need_plain = need_plain || statistic_uses_beta(s);
    need_inter = need_inter || statistic_uses_omega(s);
  }

  const std::array<std::vector<int>, 3> arms =
      spec.stratified ? arm_indices(d) : std::array<std::vector<int>, 3>{};

  Eigen::MatrixXd stat_slots(n_stats > 0 ? b : 0, n_stats);
  stat_slots.setConstant(nan);
  std::vector<double> custom_slots;
  if (spec.custom) custom_slots.assign(b, nan);
  Eigen::MatrixXd coef_slots(spec.collect_coefs ? b : 0, 6);
  coef_slots.setConstant(nan);

  auto worker = [&](int lo, int hi) {
    FitScratch scratch;
    std::vector<int> draw(n);
    for (int r = lo; r < hi; ++r) {
      CounterRng rng(spec.seed, CounterRng::stream_id(stream_purpose::resample,
                                                      static_cast<std::uint32_t>(r)));
      if (spec.stratified) {
        int k = 0;
        for (const auto& idx : arms) {
          const auto sz = static_cast<std::uint64_t>(idx.size());
          for (std::size_t i = 0; i < idx.size(); ++i) {
            draw[k++] = idx[static_cast<std::size_t>(rng.below(sz))];
          }
        }
      } else {
        for (int i = 0; i < n; ++i) {
          draw[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        }
      }
      load_rows(d, &draw, scratch);

      ResampleFits fits;
      if (need_med) fits.med = try_mediator(scratch);
      if (need_tot) fits.tot = try_total(scratch);
      if (need_plain) fits.out_plain = try_outcome(scratch, false);
      if (need_inter) fits.out_inter = try_outcome(scratch, true);

      for (int k = 0; k < n_stats; ++k) {
        if (auto v = evaluate_statistic(spec.stats[k], fits)) {
          stat_slots(r, k) = finite_or_nan(*v);
        }
      }
      if (spec.custom) {
        try {
          if (auto v = spec.custom(scratch)) custom_slots[r] = finite_or_nan(*v);
        } catch (...) {
          // dropped
        }
      }
      if (spec.collect_coefs && fits.med && fits.tot &&
          (!spec.coefs_with_omega || fits.out_inter)) {
        const double row[6] = {
            fits.med->alpha1_hat,
            fits.med->alpha2_hat,
            fits.tot->tau1_hat,
            fits.tot->tau2_hat,
            spec.coefs_with_omega ? fits.out_inter->omega1_hat : 0.0,
            spec.coefs_with_omega ? fits.out_inter->omega2_hat : 0.0,
        };
        if (std::all_of(std::begin(row), std::end(row),
                        [](double v) { return std::isfinite(v); })) {
          for (int k = 0; k < 6; ++k) coef_slots(r, k) = row[k];
        }
      }
    }
  };

  const int threads = std::min(resampling_threads(), std::max(b, 1));
  if (threads <= 1) {
    worker(0, b);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const int chunk = (b + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int lo = t * chunk;
      const int hi = std::min(b, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  EngineResult out;
  out.stat_values.resize(static_cast<std::size_t>(n_stats));
  out.stat_dropped.assign(static_cast<std::size_t>(n_stats), 0);
  for (int k = 0; k < n_stats; ++k) {
    auto& vals = out.stat_values[static_cast<std::size_t>(k)];
    vals.reserve(static_cast<std::size_t>(b));
    for (int r = 0; r < b; ++r) {
      const double v = stat_slots(r, k);
      if (std::isnan(v)) {
        ++out.stat_dropped[static_cast<std::size_t>(k)];
      } else {
        vals.push_back(v);
      }
    }
  }
  if (spec.custom) {
    out.custom_values.reserve(static_cast<std::size_t>(b));
    for (int r = 0; r < b; ++r) {
      if (std::isnan(custom_slots[static_cast<std::size_t>(r)])) {
        ++out.custom_dropped;
      } else {
        out.custom_values.push_back(custom_slots[static_cast<std::size_t>(r)]);
      }
    }
  }
  if (spec.collect_coefs) {
    int used = 0;
    for (int r = 0; r < b; ++r) {
      if (!std::isnan(coef_slots(r, 0))) ++used;
    }
    out.coef_rows.resize(used, 6);
    int w = 0;
    for (int r = 0; r < b; ++r) {
      if (!std::isnan(coef_slots(r, 0))) out.coef_rows.row(w++) = coef_slots.row(r);
    }
    out.coef_dropped = b - used;
  }
  return out;
}

}  // namespace ccm::detail
