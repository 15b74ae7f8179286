#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace almsdp;
using testutil::Rng;
using testutil::sym2;

namespace {

const double kSqrt2 = std::sqrt(2.0);

AlmConfig implementable_config() {
  AlmConfig cfg;
  cfg.mode = CriterionMode::Implementable;
  return cfg;
}

void expect_feasibility_identity(const AlmResult& res) {
  for (const ConvergenceRecord& r : res.state.history) {
    EXPECT_NEAR(r.dual_infeas * r.ck, r.step_norm, 1e-8 * std::max(1.0, r.step_norm)) << "k = " << r.k;
  }
}

}  // namespace

TEST(CriterionBprime, Examples) {
  EXPECT_TRUE(check_criterion_Bprime_oracle(0.0, 1.0, 0.0, 3.0));
  EXPECT_TRUE(check_criterion_Bprime_oracle(0.0, 7.0, 0.5, 0.0));
  EXPECT_FALSE(check_criterion_Bprime_oracle(1.0, 1.0, 0.5, 2.0));
  EXPECT_TRUE(check_criterion_Bprime_oracle(0.4, 1.0, 0.5, 2.0));
  EXPECT_TRUE(check_criterion_Bprime_oracle(0.5, 1.0, 0.5, 2.0));
}

TEST(CriterionAprimeAndBpp, Examples) {
  EXPECT_TRUE(check_criterion_Aprime_oracle(0.125, 2.0, 1.0));
  EXPECT_TRUE(check_criterion_Aprime_oracle(0.25, 2.0, 1.0));
  EXPECT_FALSE(check_criterion_Aprime_oracle(0.26, 2.0, 1.0));
  EXPECT_TRUE(check_criterion_Bpp(0.05, 2.0, 0.1, 1.0));
  EXPECT_FALSE(check_criterion_Bpp(0.06, 2.0, 0.1, 1.0));
  EXPECT_TRUE(check_criterion_Bpp(0.0, 1.0, 0.1, 0.0));
}

TEST(ThetaPredicted, Examples) {
  EXPECT_NEAR(theta_k_predicted(1.0, 1.0, 0.0), 1 / kSqrt2, 1e-15);
  EXPECT_NEAR(theta_k_predicted(1.0, 1.0, 0.0), 0.70711, 1e-5);
  EXPECT_EQ(theta_k_predicted(1.0, INFINITY, 0.0), 0.0);
  EXPECT_LT(theta_k_predicted(1.0, 1e12, 0.0), 1e-11);
  EXPECT_EQ(theta_k_predicted(0.0, 1.0, 0.5), 2.0);
  EXPECT_THROW(theta_k_predicted(1.0, 1.0, 1.0), ValidationError);
  EXPECT_THROW(theta_k_predicted(-1.0, 1.0, 0.0), ValidationError);
  EXPECT_THROW(theta_k_predicted(1.0, 0.0, 0.0), ValidationError);
}

TEST(Tau, Examples) {
  EXPECT_EQ(tau_k(2.0, 0.5), 1.0);
  EXPECT_EQ(tau_k(4.0, 0.0), 0.25);
  EXPECT_EQ(tau_k_prime(2.0, 0.5, 4.0, 1.0, 2.0), (0.25 * 4 + 1 + 2) / 2);
  EXPECT_THROW(tau_k(1.0, 1.5), ValidationError);
}

TEST(GeometricSchedule, Values) {
  const GeometricSchedule s{0.1, 0.8};
  EXPECT_EQ(s.at(0), 0.1);
  EXPECT_NEAR(s.at(3), 0.1 * 0.512, 1e-16);
}

TEST(AlmConfig, Validation) {
  AlmConfig c;
  EXPECT_NO_THROW(c.validate());
  c.c0 = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = AlmConfig{};
  c.eps.ratio = 1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = AlmConfig{};
  c.c_growth = 0.5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = AlmConfig{};
  c.c_max = 0.5;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(ImplementableCriteria, SyntheticGapOneThresholdHalf) {
  // Trace fixture, Xᵏ = 0, c = 1: gradient 2y − 4 for y ≥ 2, so y = 1 + √6/2 gives gap y·g = 1.
  const SdpProblem p = fixtures::trace_constraint();
  const InnerProblem ip(p, SymMat(2), 1.0);
  const double y = 1 + std::sqrt(6.0) / 2;
  const InnerResult r = make_inner_result(ip, evaluate_inner(ip, Vector::Constant(1, y), Vector(0)));
  const double nu = nu_bar(p);
  const CriterionCheck chk = check_criteria_implementable(ip, r, ImplementableCriterion::ATilde, std::sqrt(nu), nu);
  EXPECT_NEAR(chk.gap, 1.0, 1e-14);
  EXPECT_NEAR(chk.t, 0.5, 1e-15);
  EXPECT_FALSE(chk.passed);
}

TEST(ImplementableCriteria, TraceFixtureHandEvaluation) {
  // Xᵏ = X̂ = I/2, c = 1, y = 2: W = diag(1.5, 0.5) = Xᵏ⁺¹, u = tr Xᵏ⁺¹ − 1 = 1,
  // gap = y·u = 2, ∇fₖ = −C − (Xᵏ⁺¹ − Xᵏ) = −2I.
  const SdpProblem p = fixtures::trace_constraint();
  const InnerProblem ip(p, 0.5 * SymMat::identity(2), 1.0);
  const InnerResult r = make_inner_result(ip, evaluate_inner(ip, Vector::Constant(1, 2.0), Vector(0)));
  const double mu = (1 + kSqrt2) / kSqrt2;
  const double nu = 1 + mu + 0.5 * mu * mu;
  ASSERT_NEAR(nu_bar(p), nu, 1e-13);

  const CriterionCheck a = check_criteria_implementable(ip, r, ImplementableCriterion::ATilde, 1.0, nu);
  const double ta = 1 / (2 * nu);
  EXPECT_NEAR(a.gap, 2.0, 1e-14);
  EXPECT_NEAR(a.t, ta, 1e-15);
  EXPECT_NEAR(a.residual_lhs, 1 + std::sqrt(2.5), 1e-14);
  EXPECT_NEAR(a.residual_rhs, ta / (2 * kSqrt2), 1e-15);
  EXPECT_FALSE(a.passed);

  const CriterionCheck b = check_criteria_implementable(ip, r, ImplementableCriterion::BTilde, 0.5, nu);
  const double tb = 0.25 / (2 * nu);  // ‖Xᵏ⁺¹ − Xᵏ‖ = ‖diag(1, 0)‖ = 1
  EXPECT_NEAR(b.t, tb, 1e-15);
  EXPECT_NEAR(b.residual_rhs, tb / (2 * kSqrt2), 1e-15);
  EXPECT_FALSE(b.passed);
}

TEST(ImplementableCriteria, ExactInnerMinimizerPasses) {
  const SdpProblem p = fixtures::trace_constraint();
  const double nu = nu_bar(p);
  for (const SymMat& xk : {0.5 * SymMat::identity(2), sym2(2, 0.5, 1), SymMat(2)}) {
    for (double c : {0.5, 1.0, 8.0}) {
      const InnerProblem ip(p, xk, c);
      const InnerResult r = solve_inner(ip, Vector::Zero(1), Vector(0), 1e-14, 200);
      for (double eps : {1.0, 1e-2, 1e-4}) {
        EXPECT_TRUE(check_criteria_implementable(ip, r, ImplementableCriterion::ATilde, eps, nu).passed)
            << "c = " << c << " eps = " << eps;
      }
    }
  }
}

TEST(ImplementableCriteria, RequiresStrictlyFeasiblePoint) {
  const SdpProblem p = fixtures::example32();
  const InnerProblem ip(p, SymMat(2), 1.0);
  const InnerResult r = make_inner_result(ip, evaluate_inner(ip, Vector::Zero(1), Vector::Zero(1)));
  EXPECT_THROW(check_criteria_implementable(ip, r, ImplementableCriterion::ATilde, 1.0, 1.0), ValidationError);
}

TEST(AlmRun, OptimalStartStopsImmediately) {
  // Trace fixture: X* = diag(1, 0), y* = 1, S* = diag(0, 1).
  const SdpProblem p = fixtures::trace_constraint();
  const AlmResult res = alm_run(p, AlmConfig{}, sym2(1, 0, 0));
  EXPECT_EQ(res.reason, StopReason::KktTolerance);
  EXPECT_LE(res.state.history.size(), 2u);
  EXPECT_NEAR(res.state.yk[0], 1.0, 1e-9);
}

TEST(AlmRun, Example31ImplementableFromIdentity) {
  const SdpProblem p = fixtures::example31();
  AlmConfig cfg = implementable_config();
  cfg.max_outer = 30;
  cfg.kkt_stop_tol = 1e-6;
  const AlmResult res = alm_run(p, cfg, SymMat::identity(2));
  EXPECT_EQ(res.reason, StopReason::KktTolerance);
  EXPECT_LE(res.state.history.back().kkt_norm, 1e-6);
  EXPECT_LE(dist_example31(res.state.Xk), 1e-6);
  expect_feasibility_identity(res);
}

TEST(AlmRun, Example31DefaultStartIsXhat) {
  const SdpProblem p = fixtures::example31();
  AlmConfig cfg = implementable_config();
  cfg.distance_oracle = dist_example31;
  const AlmResult res = alm_run(p, cfg);
  ASSERT_TRUE(res.state.initial_dist_est);
  EXPECT_NEAR(*res.state.initial_dist_est, dist_example31(sym2(5, 1, 2)), 1e-15);
  EXPECT_EQ(res.reason, StopReason::KktTolerance);
  EXPECT_LE(res.state.history.size(), 40u);
  EXPECT_LE(*res.state.history.back().dist_est, 1e-8);
}

TEST(AlmRun, Example32DualConvergesToZero) {
  const SdpProblem p = fixtures::example32();
  for (const SymMat& x0 : {0.5 * SymMat::identity(2), SymMat::identity(2), SymMat(2)}) {
    AlmConfig cfg;
    cfg.c_growth = 1.5;
    const AlmResult res = alm_run(p, cfg, x0);
    EXPECT_EQ(res.reason, StopReason::KktTolerance);
    const double dual = std::sqrt(res.state.yk.squaredNorm() + res.state.wk.squaredNorm() +
                                  std::pow(res.state.Sk.norm(), 2));
    EXPECT_LE(dual, 1e-6);
    const SymMat& x = res.state.Xk;
    EXPECT_NEAR(x(0, 0) + x(1, 1), 1.0, 1e-6);
    EXPECT_LE(inner(sym2(1, -2, 1), x), 1 + 1e-8);
    EXPECT_GE(lambda_min(x), -1e-8);
    expect_feasibility_identity(res);
  }
}

TEST(AlmRun, RockafellarOracleModeOnExample31) {
  const SdpProblem p = fixtures::example31();
  AlmConfig cfg;
  cfg.mode = CriterionMode::RockafellarOracle;
  int steps = 0;
  cfg.observer = [&](const OuterStep& s) {
    ASSERT_TRUE(s.a_prime && s.b_prime);
    EXPECT_FALSE(s.a_tilde || s.b_tilde);
    if (s.certified) {
      EXPECT_TRUE(s.a_prime->passed && s.b_prime->passed && s.bpp);
    }
    ++steps;
  };
  const AlmResult res = alm_run(p, cfg, SymMat::identity(2));
  EXPECT_EQ(res.reason, StopReason::KktTolerance);
  EXPECT_EQ(steps, static_cast<int>(res.state.history.size()));
}

TEST(AlmRun, ObjectiveGapInequality) {
  // ϑ(zᵏ⁺¹) − inf ϑ ≤ [ζₖ(zᵏ⁺¹) − inf ζₖ] + (‖Xᵏ‖² − ‖Xᵏ⁺¹‖²)/2cₖ with inf ϑ = 0 on both fixtures.
  for (const SdpProblem& p : {fixtures::example31(), fixtures::example32()}) {
    for (const SymMat& x0 : {SymMat::identity(2), sym2(3, 1, 1)}) {
      AlmConfig cfg;
      cfg.mode = CriterionMode::RockafellarOracle;
      int checked = 0;
      cfg.observer = [&](const OuterStep& s) {
        const InnerResult& r = s.result;
        const double theta = dual_objective(p, r.y, r.w);
        const double xk2 = std::pow(s.ip.Xk().norm(), 2), xn2 = std::pow(r.Xnext.norm(), 2);
        const double bound = s.a_prime->gap + (xk2 - xn2) / (2 * s.ip.ck());
        EXPECT_LE(theta, bound + 1e-10 * (1 + xk2));
        if (s.a_prime->passed) {
          EXPECT_LE(theta, s.a_prime->threshold + (xk2 - xn2) / (2 * s.ip.ck()) + 1e-10 * (1 + xk2));
        }
        ++checked;
      };
      alm_run(p, cfg, x0);
      EXPECT_GT(checked, 0);
    }
  }
}

TEST(AlmRun, TwoXUpdateFormulasAgreeOnEveryStep) {
  for (const SdpProblem& p : {fixtures::example31(), fixtures::example32(), fixtures::trace_constraint()}) {
    AlmConfig cfg;
    cfg.observer = [&](const OuterStep& s) {
      const InnerResult& r = s.result;
      const SymMat direct = s.ip.Xk() + s.ip.ck() * (dual_operator(p, r.y, r.w) + r.S - p.C());
      const double scale = 1 + r.Xnext.norm() + s.ip.Xk().norm();
      EXPECT_LE((direct - r.Xnext).norm(), 1e-10 * scale);
    };
    alm_run(p, cfg, SymMat::identity(2));
  }
}

TEST(AlmRun, PenaltyMonotoneAndCapped) {
  const SdpProblem p = fixtures::example32();
  AlmConfig cfg;
  cfg.c_growth = 3.0;
  cfg.c_max = 20.0;
  cfg.kkt_stop_tol = 0.0;
  cfg.max_outer = 8;
  const AlmResult res = alm_run(p, cfg, SymMat::identity(2));
  EXPECT_EQ(res.reason, StopReason::MaxOuter);
  ASSERT_EQ(res.state.history.size(), 8u);
  double prev = 0;
  for (const ConvergenceRecord& r : res.state.history) {
    EXPECT_GE(r.ck, prev);
    EXPECT_LE(r.ck, 20.0);
    prev = r.ck;
  }
  EXPECT_EQ(res.state.history.back().ck, 20.0);
  EXPECT_GE(lambda_min(res.state.Xk), -default_eigtol(res.state.Xk));
}

TEST(AlmRun, ProjectsNonPsdStart) {
  const SdpProblem p = fixtures::example32();
  const AlmResult res = alm_run(p, AlmConfig{}, sym2(1, 0, -1));
  ASSERT_FALSE(res.state.notes.empty());
  EXPECT_NE(res.state.notes.front().find("projected"), std::string::npos);
  EXPECT_EQ(res.reason, StopReason::KktTolerance);
}

TEST(AlmRun, UnattainableCriterionIsReported) {
  const SdpProblem p = fixtures::example32();
  AlmConfig cfg;
  cfg.eta_prime = {1e-300, 0.5};
  cfg.kkt_stop_tol = 0.0;
  cfg.max_outer = 3;
  cfg.inner_tol_floor = 1e-6;
  cfg.fail_on_unattainable = true;
  const AlmResult hard = alm_run(p, cfg, SymMat::identity(2));
  EXPECT_EQ(hard.reason, StopReason::CriterionUnattainable);
  ASSERT_FALSE(hard.state.notes.empty());

  cfg.fail_on_unattainable = false;
  const AlmResult soft = alm_run(p, cfg, SymMat::identity(2));
  EXPECT_EQ(soft.reason, StopReason::MaxOuter);
  ASSERT_EQ(soft.state.history.size(), 3u);
  // A step can still land on an exact stationary point; every other one is flagged.
  size_t flagged = 0;
  for (const ConvergenceRecord& r : soft.state.history) flagged += r.certified ? 0 : 1;
  EXPECT_GE(flagged, 1u);
  EXPECT_EQ(soft.state.notes.size(), flagged);
}

TEST(AlmRun, ImplementableModeRejectsInequalityRows) {
  EXPECT_THROW(alm_run(fixtures::example32(), implementable_config()), ValidationError);
  const SdpProblem no_xhat = SdpProblem::linear(sym2(1, 0, 2), LinearOperator(2, {SymMat::identity(2)}),
                                                Vector::Ones(1), ConeSpec::all_equality(1));
  EXPECT_THROW(alm_run(no_xhat, implementable_config()), ValidationError);
  EXPECT_THROW(alm_run(fixtures::example31(), AlmConfig{}, SymMat(3)), DimensionError);
}

TEST(AlmRun, ImplementableStepsSatisfyOracleGapBound) {
  // Whenever a tilde criterion passes, ζₖ(zᵏ⁺¹) − inf ζₖ ≤ ν̄·t.
  Rng rng(40);
  int checked = 0;
  for (int t = 0; t < 10; ++t) {
    const SdpProblem p = testutil::random_feasible_problem(rng, rng.integer(2, 4), rng.integer(1, 3), t % 2 == 0);
    const double nu = nu_bar(p);
    AlmConfig cfg = implementable_config();
    cfg.max_outer = 10;
    cfg.observer = [&](const OuterStep& s) {
      const double gap = oracle_inner_gap(s.ip, s.result, 1e-12);
      for (const auto& chk : {s.a_tilde, s.b_tilde}) {
        if (chk && chk->passed) {
          EXPECT_LE(gap, nu * chk->t + 1e-12);
          ++checked;
        }
      }
    };
    alm_run(p, cfg, rng.psd(p.dim()));
  }
  EXPECT_GT(checked, 0);
}

TEST(AlmRun, DeterministicHistory) {
  const SdpProblem p = fixtures::example32();
  const AlmResult a = alm_run(p, AlmConfig{}, SymMat::identity(2));
  const AlmResult b = alm_run(p, AlmConfig{}, SymMat::identity(2));
  ASSERT_EQ(a.state.history.size(), b.state.history.size());
  for (size_t i = 0; i < a.state.history.size(); ++i) {
    EXPECT_EQ(a.state.history[i].kkt_norm, b.state.history[i].kkt_norm);
  }
}

TEST(StopReason, Names) {
  EXPECT_STREQ(to_string(StopReason::KktTolerance), "KKT_TOL");
  EXPECT_STREQ(to_string(StopReason::MaxOuter), "MAX_OUTER");
  EXPECT_STREQ(to_string(StopReason::CriterionUnattainable), "CRITERION_UNATTAINABLE");
  EXPECT_STREQ(to_string(CriterionMode::RockafellarOracle), "bprime-oracle");
}
