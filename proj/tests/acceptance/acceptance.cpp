// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "../test_util.hpp"

using namespace almsdp;
using testutil::Rng;
using testutil::sym2;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

struct Criterion {
  int id;
  std::string title;
  double time_limit_s;  // ≤ 0: none
  std::function<void(Outcome&)> body;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

// ---------------------------------------------------------------------------

void perturbation_table(Outcome& o) {
  const SdpProblem p = fixtures::example31();
  double worst_uv = 0, worst_pd = 0, worst_viol = 0, min_dual_margin = INFINITY;
  for (const PerturbationRow& r : example31_perturbation_demo(p, {1e-2, 1e-4, 1e-6})) {
    worst_uv = std::max(worst_uv, rel_err(r.uv_norm, 2 * std::sqrt(2.0) * r.eps));
    worst_pd = std::max(worst_pd, rel_err(r.primal_dist, std::sqrt(6.0) * r.eps));
    worst_viol = std::max(worst_viol, r.violation / r.uv_norm);
    min_dual_margin = std::min(min_dual_margin, r.dual_dist / (2 * std::sqrt(r.eps)));
  }
  o.detail << "max rel err |(u,V)| " << sci(worst_uv) << ", primal dist " << sci(worst_pd)
           << ", perturbed-system residual/|(u,V)| " << sci(worst_viol) << ", min dual_dist/(2 sqrt eps) "
           << min_dual_margin;
  o.require(worst_uv <= 1e-12, "|(u,V)| = 2 sqrt2 eps");
  o.require(worst_pd <= 1e-12, "primal distance = sqrt6 eps");
  o.require(worst_viol <= 1e-12, "triple solves the perturbed system");
  o.require(min_dual_margin >= 1.0, "dual distance >= 2 sqrt eps");
}

void example31_solve(Outcome& o) {
  const SdpProblem p = fixtures::example31();
  AlmConfig cfg;
  cfg.mode = CriterionMode::Implementable;
  cfg.c0 = 1;
  cfg.c_growth = 2;
  cfg.max_outer = 40;
  cfg.kkt_stop_tol = 1e-8;
  cfg.distance_oracle = dist_example31;
  const AlmResult res = alm_run(p, cfg);
  const auto& h = res.state.history;
  const RateReport rep = rate_report(rate_series(h, *res.state.initial_dist_est, 5.0), std::nullopt);
  o.detail << "outer " << h.size() << ", kkt " << sci(h.back().kkt_norm) << ", dist " << sci(*h.back().dist_est)
           << ", certified tail ratios";
  for (std::size_t i = rep.tail_start.value_or(0); i < rep.rows.size(); ++i) o.detail << " " << sci(rep.rows[i].ratio);
  std::size_t uncertified = 0;
  for (const auto& r : h) uncertified += r.certified ? 0 : 1;
  o.detail << ", uncertified final steps " << uncertified;
  o.require(res.reason == StopReason::KktTolerance && h.size() <= 40, "KKT_TOL within 40 outer iterations");
  o.require(h.back().kkt_norm <= 1e-8, "kkt_norm <= 1e-8");
  o.require(*h.back().dist_est <= 1e-8, "dist <= 1e-8");
  o.require(rep.superlinear_signature, "tail ratios monotonically decreasing below 0.1");
}

void example31_fixed_penalty(Outcome& o) {
  const SdpProblem p = fixtures::example31();
  Rng rng(2024);
  std::vector<double> kappas;
  std::vector<double> kappa_eta_free;
  for (int run = 0; run < 5; ++run) {
    AlmConfig cfg;
    cfg.mode = CriterionMode::Implementable;
    cfg.c0 = 10;
    cfg.c_growth = 1;
    cfg.eta = {0.5, 0.5};
    cfg.distance_oracle = dist_example31;
    const SymMat x0 = rng.psd(2) + 0.1 * SymMat::identity(2);
    const AlmResult res = alm_run(p, cfg, x0);
    const double scale = std::max(1.0, x0.norm());
    const RateSeries s = rate_series(res.state.history, *res.state.initial_dist_est, scale);
    const RateReport free = rate_report(s, std::nullopt);
    o.require(free.tail_start.has_value(), "run " + std::to_string(run) + " has a tail");
    if (!free.tail_start) continue;
    const double kappa = free.kappa_empirical;
    const RateReport checked = rate_report(s, kappa);
    o.require(std::isfinite(kappa), "kappa_empirical finite");
    o.require(checked.verdict.value_or(false), "tail ratios within theta_k(kappa_empirical) * 1.05");
    kappas.push_back(kappa);
    double k0 = 0;
    o.detail << (run ? "; " : "") << "run " << run << " ratios";
    for (std::size_t i = *free.tail_start; i < free.rows.size(); ++i) {
      o.detail << " " << sci(free.rows[i].ratio);
      k0 = std::max(k0, kappa_for_ratio(free.rows[i].ratio, 10.0, 0.0));
    }
    o.detail << " kappa_emp " << kappa;
    kappa_eta_free.push_back(k0);
  }
  if (kappas.empty()) return;
  double mean = 0;
  for (double k : kappas) mean += k / static_cast<double>(kappas.size());
  double spread = 0;
  for (double k : kappas) spread = std::max(spread, std::abs(k - mean));
  o.detail << "; kappa_emp mean " << mean << ", max deviation " << spread << "; kappa with eta = 0:";
  for (double k : kappa_eta_free) o.detail << " " << sci(k);
  if (mean == 0.0) o.detail << " (kappa_emp = 0: ratios lie below the 2 eta_k/(1 - eta_k) term)";
  o.require(spread <= 0.2 * mean, "kappa_empirical stable within 20%");
}

void example32_solve(Outcome& o) {
  const SdpProblem p = fixtures::example32();
  const SymMat a = example32_A();
  for (const SymMat& x0 : {0.5 * SymMat::identity(2), SymMat::identity(2), SymMat(2)}) {
    AlmConfig cfg;
    cfg.c0 = 1;
    cfg.c_growth = 1.5;
    const AlmResult res = alm_run(p, cfg, x0);
    const AlmState& st = res.state;
    const double dual = dual_dist_example32(st.yk, st.wk, st.Sk);
    const SymMat& x = st.Xk;
    const double tr = x(0, 0) + x(1, 1);
    o.detail << "X0 = " << x0(0, 0) << "I: outer " << st.history.size() << ", dual dist " << sci(dual)
             << ", tr-1 " << sci(tr - 1) << ", <A,X>-1 " << sci(inner(a, x) - 1) << ", lmin " << sci(lambda_min(x))
             << "; ";
    o.require(res.reason == StopReason::KktTolerance, "KKT_TOL");
    o.require(dual <= 1e-6, "dual iterate within 1e-6 of (0,0,0)");
    o.require(std::abs(tr - 1) <= 1e-6, "tr X = 1 +- 1e-6");
    o.require(inner(a, x) <= 1 + 1e-8, "<A,X> <= 1 + 1e-8");
    o.require(lambda_min(x) >= -1e-8, "lambda_min(X) >= -1e-8");
  }
}

void fejer_suite(Outcome& o) {
  using R = std::function<double(const double&, double)>;
  const std::vector<std::pair<std::string, R>> ops{
      {"abs", [](const double& x, double c) { return resolvent_abs(x, c); }},
      {"identity", [](const double& x, double c) { return resolvent_identity(x, c); }},
      {"interval", [](const double& x, double) { return resolvent_interval_normal(x, 0.0, 1.0); }}};
  const std::vector<double> zeros_abs{0.0}, zeros_id{0.0}, zeros_int{0.0, 0.25, 1.0};
  const std::vector<const std::vector<double>*> zeros{&zeros_abs, &zeros_id, &zeros_int};
  double worst = -INFINITY;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    for (double x0 : {5.0, -3.0, 0.5, 17.0}) {
      for (int sched = 0; sched < 3; ++sched) {
        PpaOptions<double> opt;
        opt.iterations = 40;
        opt.c = [sched](int k) { return sched == 0 ? 1.0 : sched == 1 ? 0.3 * (k + 1) : std::pow(1.7, k); };
        const PpaLog<double> log = ppa_run(ops[i].second, x0, opt);
        for (double xbar : *zeros[i]) worst = std::max(worst, fejer_check(log, xbar));
      }
    }
  }
  PpaOptions<double> opt;
  opt.iterations = 30;
  opt.c = [](int k) { return 1.0 + 0.5 * k; };
  const PpaLog<double> log = ppa_run(ops[1].second, 5.0, opt);
  double worst_rate = 0;
  bool bounded = true;
  for (std::size_t k = 0; k + 1 < log.xi.size(); ++k) {
    const double ratio = log.xi[k + 1] / log.xi[k];
    worst_rate = std::max(worst_rate, rel_err(ratio, 1 / (1 + log.c[k])));
    bounded = bounded && ratio <= theta_k_predicted(1.0, log.c[k], 0.0);
  }
  o.detail << "worst Fejer violation " << sci(worst) << ", identity ratio vs 1/(1+c_k) max rel err " << sci(worst_rate)
           << ", bounded by theta(kappa = 1): " << (bounded ? "yes" : "no");
  o.require(worst <= 1e-12, "Fejer violation <= 1e-12");
  o.require(worst_rate <= 1e-15, "identity ratio = 1/(1+c_k)");
  o.require(bounded, "ratio <= theta_k(1, c_k, 0)");
}

void feasibility_bound_suite(Outcome& o) {
  Rng rng(4301);
  double worst = -INFINITY;
  int count = 0;
  for (int t = 0; t < 1000; ++t) {
    const Index n = rng.integer(2, 10);
    const SdpProblem p = testutil::random_feasible_problem(rng, n, rng.integer(1, static_cast<int>(n)));
    const SymMat x = rng.psd(n, rng.integer(1, static_cast<int>(n)));
    const double oracle = feasible_set_distance(p, x, 1e-12);
    const double bound = feasibility_distance_bound(p, x);
    worst = std::max(worst, oracle - bound);
    ++count;
  }
  o.detail << count << " samples, max(oracle distance - bound) = " << sci(worst);
  o.require(worst <= 1e-9, "Dykstra distance <= bound + 1e-9");
}

void implementable_consistency(Outcome& o) {
  Rng rng(4401);
  int steps = 0, passing = 0, violations = 0;
  double worst_ratio = 0;
  auto check = [&](const InnerProblem& ip, const InnerResult& r, double eps_k, double eta_k, double nu) {
    const auto at = check_criteria_implementable(ip, r, ImplementableCriterion::ATilde, eps_k, nu);
    const auto bt = check_criteria_implementable(ip, r, ImplementableCriterion::BTilde, eta_k, nu);
    if (!at.passed && !bt.passed) return;
    const double gap = oracle_inner_gap(ip, r, 1e-12);
    const double round = 64 * std::numeric_limits<double>::epsilon() *
                         (std::abs(r.objective_value) + std::pow(ip.Xk().norm(), 2) / ip.ck());
    for (const CriterionCheck* c : {&at, &bt}) {
      if (!c->passed) continue;
      ++passing;
      if (gap > nu * c->t + round) ++violations;
      if (c->t > 0) worst_ratio = std::max(worst_ratio, gap / (nu * c->t));
    }
  };
  while (steps < 200) {
    const Index n = rng.integer(2, 5);
    const SdpProblem p = testutil::random_feasible_problem(rng, n, rng.integer(1, static_cast<int>(n)), steps % 2 == 0);
    const double nu = nu_bar(p);
    AlmConfig cfg;
    cfg.mode = CriterionMode::Implementable;
    cfg.max_outer = 8;
    cfg.observer = [&](const OuterStep& s) {
      if (steps >= 200) return;
      ++steps;
      check(s.ip, s.result, s.eps_k, s.eta_k, nu);
      // Early inner iterates of the same subproblem.
      for (int it = 1; it <= 4; ++it) {
        const InnerResult r = solve_inner(s.ip, Vector::Zero(p.num_constraints()), Vector::Zero(p.num_ls_rows()),
                                          1e-14, it);
        check(s.ip, r, s.eps_k, s.eta_k, nu);
      }
    };
    alm_run(p, cfg, rng.psd(n));
  }
  o.detail << steps << " outer steps, " << passing << " passing criterion evaluations, " << violations
           << " violations, max gap/(nu t) = " << sci(worst_ratio);
  o.require(passing > 0, "some criterion evaluations pass");
  o.require(violations == 0, "oracle gap <= nu_bar t whenever a criterion passes");
}

void kernel_suites(Outcome& o) {
  Rng rng(4501);
  double idem = 0, moreau = 0, nonexp = -INFINITY;
  for (int t = 0; t < 500; ++t) {
    const Index n = rng.integer(1, 8);
    const SymMat a = rng.sym(n), b = rng.sym(n);
    const SymMat pa = project_psd(a).projected, pb = project_psd(b).projected;
    const SymMat na = project_psd(-1.0 * a).projected;
    const double s = 1 + a.norm();
    idem = std::max(idem, (project_psd(pa).projected - pa).norm() / s);
    moreau = std::max({moreau, (pa - na - a).norm() / s, std::abs(inner(pa, na)) / (s * s)});
    nonexp = std::max(nonexp, ((pa - pb).norm() - (a - b).norm()) / (1 + (a - b).norm()));
  }

  struct Fx {
    std::string name;
    SdpProblem p;
  };
  const std::vector<Fx> fx{{"example31", fixtures::example31()},
                           {"example32", fixtures::example32()},
                           {"trace", fixtures::trace_constraint()}};
  double fd_worst = 0;
  for (const Fx& f : fx) {
    int done = 0;
    while (done < 20) {
      const InnerProblem ip(f.p, rng.psd(2), rng.uniform(0.5, 5));
      const Vector y = project_cone_Q(f.p.cone(), rng.gaussian(f.p.num_constraints()));
      const Vector w = rng.gaussian(f.p.num_ls_rows());
      const Vector lam = eig_sym(inner_argument(ip, y, w)).eigenvalues;
      if ((lam.array().abs() < 1e-2).any()) continue;
      const ReducedGradient g = reduced_gradient(ip, y, w);
      Vector ga(y.size() + w.size()), gf(y.size() + w.size());
      ga << g.y, g.w;
      const double h = 1e-5;
      for (Index i = 0; i < ga.size(); ++i) {
        Vector dy = Vector::Zero(y.size()), dw = Vector::Zero(w.size());
        (i < y.size() ? dy[i] : dw[i - y.size()]) = h;
        gf[i] = (reduced_objective(ip, y + dy, w + dw) - reduced_objective(ip, y - dy, w - dw)) / (2 * h);
      }
      fd_worst = std::max(fd_worst, (ga - gf).norm() / std::max(1.0, ga.norm()));
      ++done;
    }
  }

  double xupd = 0;
  int steps = 0;
  for (const Fx& f : fx) {
    for (const SymMat& x0 : {SymMat::identity(2), sym2(3, 1, 1), SymMat(2)}) {
      for (CriterionMode mode : {CriterionMode::BppOnly, CriterionMode::RockafellarOracle, CriterionMode::Implementable}) {
        if (mode == CriterionMode::Implementable && !f.p.cone().equality_only()) continue;
        AlmConfig cfg;
        cfg.mode = mode;
        cfg.observer = [&](const OuterStep& s) {
          const InnerResult& r = s.result;
          const SymMat direct = s.ip.Xk() + s.ip.ck() * (dual_operator(f.p, r.y, r.w) + r.S - f.p.C());
          xupd = std::max(xupd, (direct - r.Xnext).norm() / (1 + r.Xnext.norm() + s.ip.Xk().norm()));
          ++steps;
        };
        alm_run(f.p, cfg, x0);
      }
    }
  }
  o.detail << "idempotence " << sci(idem) << ", Moreau " << sci(moreau) << ", nonexpansiveness excess " << sci(nonexp)
           << ", gradient FD rel err " << sci(fd_worst) << " (60 points), X-update mismatch " << sci(xupd) << " over "
           << steps << " outer steps";
  o.require(idem <= 1e-10, "idempotence");
  o.require(moreau <= 1e-10, "Moreau decomposition");
  o.require(nonexp <= 1e-10, "nonexpansiveness");
  o.require(fd_worst <= 1e-6, "gradient vs central differences");
  o.require(xupd <= 1e-10, "X-update formulas agree");
}

void rank_reproduction(Outcome& o) {
  const RankReport good = rank_conditions(sym2(1, 0, 0), sym2(0, 0, 1), 1e-9);
  const RankReport bad = rank_conditions(SymMat(2), sym2(0, 0, 1), 1e-9);
  o.detail << "diag(1,0): cond_i " << good.cond_i << ", cond_ii " << good.cond_ii << "; X = 0: cond_ii " << bad.cond_ii;
  o.require(good.cond_i && good.cond_ii, "cond_i and cond_ii at diag(1,0)");
  o.require(!bad.cond_ii, "cond_ii fails at X = 0");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "example31 perturbation table", 1.0, perturbation_table},
      {2, "example31 implementable solve, superlinear tail", 5.0, example31_solve},
      {3, "example31 fixed penalty c = 10, stable kappa_empirical", 5.0, example31_fixed_penalty},
      {4, "example32 solve, dual iterate to (0,0,0)", 5.0, example32_solve},
      {5, "Fejer suite on exact PPA resolvents", 0.0, fejer_suite},
      {6, "feasibility error bound vs Dykstra oracle, 1000 samples", 60.0, feasibility_bound_suite},
      {7, "implementable criteria vs oracle gap, 200 outer steps", 0.0, implementable_consistency},
      {8, "kernel property suites", 0.0, kernel_suites},
      {9, "rank-condition reproduction", 0.0, rank_reproduction},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit_s > 0 && secs > c.time_limit_s) {
      o.pass = false;
      o.detail << " [violated: runtime limit " << c.time_limit_s << " s]";
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s criterion %d: %s (%.3f s) | %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title.c_str(), secs,
                o.detail.str().c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
