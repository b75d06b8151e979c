#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "ccm/errors.hpp"
#include "ccm/least_squares.hpp"
#include "ccm/rng.hpp"
#include "support.hpp"

using namespace ccm;
using test_support::fixture_f1;
using test_support::fixture_f2;
using test_support::make_dataset;

TEST_CASE("identity design returns the response as coefficients") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  const auto fit = solve_least_squares(X, y, {"a", "b", "c"});
  CHECK(fit.coef(0) == doctest::Approx(1).epsilon(1e-12));
  CHECK(fit.coef(1) == doctest::Approx(2).epsilon(1e-12));
  CHECK(fit.coef(2) == doctest::Approx(3).epsilon(1e-12));
}

TEST_CASE("intercept-only design recovers the mean") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
  Eigen::VectorXd y(3);
  y << 2, 4, 6;
  const auto fit = solve_least_squares(X, y, {"intercept"});
  CHECK(fit.coef(0) == doctest::Approx(4).epsilon(1e-12));
  CHECK(fit.resid_var() == doctest::Approx(4.0).epsilon(1e-12));  // ss=8, n-p=2
}

TEST_CASE("rank deficiency names the dependent column") {
  Eigen::MatrixXd X(4, 3);
  X << 1, 2, 4, 1, 3, 6, 1, 4, 8, 1, 5, 10;  // third column = 2 * second
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  try {
    solve_least_squares(X, y, {"intercept", "x", "x_doubled"});
    FAIL("expected SingularModelError");
  } catch (const SingularModelError& e) {
    const std::string msg = e.what();
    const bool names_one = msg.find("x") != std::string::npos;
    CHECK(names_one);
    CHECK(msg.find("rank 2 of 3") != std::string::npos);
  }
}

TEST_CASE("mediator fit on the nine-row fixture matches the group-mean oracle") {
  const auto f = fit_mediator_model(fixture_f1());
  CHECK(f.pi_hat == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(f.alpha1_hat == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(f.alpha2_hat == doctest::Approx(2.0 / 3).epsilon(1e-12));
  // Residual SS is 2/3 + 2/3 + 0 pooled over arms; divisor n - 3 = 6.
  CHECK(f.resid_var_eta == doctest::Approx(2.0 / 9).epsilon(1e-10));
}

TEST_CASE("total fit on the nine-row fixture matches the group-mean oracle") {
  const auto f = fit_total_model(fixture_f1());
  CHECK(f.chi_hat == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(f.tau1_hat == doctest::Approx(1.0 / 3).epsilon(1e-10));
  CHECK(f.tau2_hat == doctest::Approx(1.0 / 3).epsilon(1e-10));
}

TEST_CASE("mediator identical to control gives a zero contrast") {
  const auto d = make_dataset({{1, 0}, {2, 1}, {3, 0}}, {{1, 1}, {2, 0}, {3, 1}},
                              {{5, 1}, {6, 0}, {7, 1}});
  const auto f = fit_mediator_model(d);
  CHECK(f.alpha1_hat == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.alpha2_hat == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("constant mediator everywhere collapses the mediator fit") {
  const auto d = make_dataset({{7, 0}, {7, 1}}, {{7, 1}, {7, 0}}, {{7, 1}, {7, 2}});
  const auto f = fit_mediator_model(d);
  CHECK(f.pi_hat == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(f.alpha1_hat == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(f.alpha2_hat == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(f.resid_var_eta == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("outcome equal to mediator gives unit slope and zero contrasts") {
  auto d = make_dataset({{0.5, 0}, {1.5, 0}, {2, 0}}, {{1, 0}, {2.5, 0}, {3, 0}},
                        {{2, 0}, {3, 0}, {4.5, 0}});
  for (auto& r : d.rows) r.y = r.m;
  const auto f = fit_outcome_model(d, false);
  CHECK(f.beta_hat == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(f.delta1_hat == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(f.delta2_hat == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(f.omega1_hat == f.beta_hat);
  CHECK(f.interactions_included == false);
  CHECK(f.gamma1_hat == 0.0);
}

TEST_CASE("interacted fit on the degenerate fixture names the constant arm") {
  try {
    fit_outcome_model(fixture_f1(), true);
    FAIL("expected SingularModelError");
  } catch (const SingularModelError& e) {
    CHECK(std::string(e.what()).find("arm2") != std::string::npos);
  }
}

TEST_CASE("interacted fit recovers the exact within-arm slopes") {
  const auto f = fit_outcome_model(fixture_f2(), true);
  CHECK(f.interactions_included);
  CHECK(f.omega1_hat == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(f.omega2_hat == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(f.omega1_hat == doctest::Approx(f.beta_hat + f.gamma1_hat).epsilon(1e-12));
  CHECK(f.omega2_hat == doctest::Approx(f.beta_hat + f.gamma2_hat).epsilon(1e-12));
}

TEST_CASE("arm slopes match the hand-computed fixture values") {
  const auto s = arm_slopes(fixture_f2());
  CHECK(s.omega1_hat == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.omega2_hat == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.var_m_arm1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.var_m_arm2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("arm slopes reject a constant-mediator arm by name") {
  CHECK_THROWS_AS(arm_slopes(fixture_f1()), SingularModelError);
}

TEST_CASE("arm with y proportional to m has that slope") {
  const auto d = make_dataset({{0, 0}, {1, 0.5}, {2, 1}}, {{0, 0}, {1, 1}, {2, 2}},
                              {{0, 0}, {1, 3}, {2, 6}});
  const auto s = arm_slopes(d);
  CHECK(s.omega1_hat == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.omega2_hat == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("group-mean oracle holds across a random corpus") {
  CounterRng rng(11, 0);
  for (int k = 0; k < 40; ++k) {
    const Dataset d = test_support::random_dataset(rng);
    const auto arms = arm_partition(d);
    const auto med = fit_mediator_model(d);
    const auto tot = fit_total_model(d);
    CHECK(std::abs(med.pi_hat - arms[0].mean_m) <= 1e-10);
    CHECK(std::abs(med.alpha1_hat - (arms[1].mean_m - arms[0].mean_m)) <= 1e-10);
    CHECK(std::abs(med.alpha2_hat - (arms[2].mean_m - arms[0].mean_m)) <= 1e-10);
    CHECK(std::abs(tot.tau1_hat - (arms[1].mean_y - arms[0].mean_y)) <= 1e-10);
    CHECK(std::abs(tot.tau2_hat - (arms[2].mean_y - arms[0].mean_y)) <= 1e-10);
  }
}

TEST_CASE("saturation identity: interacted coefficients equal within-arm fits") {
  CounterRng rng(12, 0);
  for (int k = 0; k < 40; ++k) {
    const Dataset d = test_support::random_dataset(rng);
    const auto f = fit_outcome_model(d, true);
    const auto s = arm_slopes(d);
    CHECK(std::abs(f.omega1_hat - s.omega1_hat) <= 1e-10);
    CHECK(std::abs(f.omega2_hat - s.omega2_hat) <= 1e-10);
  }
}

TEST_CASE("scale equivariance in y, invariance of the mediator equation") {
  CounterRng rng(13, 0);
  Dataset d = test_support::random_dataset(rng);
  const auto before = fit_bundle(d, true);
  Dataset scaled = d;
  for (auto& r : scaled.rows) r.y = 3.0 * r.y;
  const auto after = fit_bundle(scaled, true);
  CHECK(after.outcome.beta_hat == doctest::Approx(3 * before.outcome.beta_hat).epsilon(1e-9));
  CHECK(after.outcome.gamma1_hat ==
        doctest::Approx(3 * before.outcome.gamma1_hat).epsilon(1e-9));
  CHECK(after.total.tau1_hat == doctest::Approx(3 * before.total.tau1_hat).epsilon(1e-9));
  CHECK(after.total.tau2_hat == doctest::Approx(3 * before.total.tau2_hat).epsilon(1e-9));
  CHECK(after.outcome.delta2_hat ==
        doctest::Approx(3 * before.outcome.delta2_hat).epsilon(1e-9));
  CHECK(after.mediator.alpha1_hat == before.mediator.alpha1_hat);
  CHECK(after.mediator.alpha2_hat == before.mediator.alpha2_hat);
}

TEST_CASE("row permutation leaves coefficients unchanged") {
  CounterRng rng(14, 0);
  Dataset d = test_support::random_dataset(rng);
  Dataset shuffled = d;
  // Deterministic Fisher-Yates.
  for (int i = shuffled.n() - 1; i > 0; --i)
    std::swap(shuffled.rows[i], shuffled.rows[rng.below(i + 1)]);
  const auto a = fit_bundle(d, true);
  const auto b = fit_bundle(shuffled, true);
  CHECK(a.mediator.alpha1_hat == doctest::Approx(b.mediator.alpha1_hat).epsilon(1e-10));
  CHECK(a.outcome.omega2_hat == doctest::Approx(b.outcome.omega2_hat).epsilon(1e-10));
  CHECK(a.total.tau2_hat == doctest::Approx(b.total.tau2_hat).epsilon(1e-10));
}
