#pragma once

// Outer augmented Lagrangian loop on the dual problem with Rockafellar-type
// inexactness criteria, plus the implementable replacements that need only a
// strictly feasible primal point.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "almsdp/error.hpp"
#include "almsdp/inner.hpp"
#include "almsdp/model.hpp"
#include "almsdp/symcone.hpp"

namespace almsdp {

/// first·ratioᵏ.
struct GeometricSchedule {
  double first = 1.0;
  double ratio = 0.5;

  double at(int k) const { return first * std::pow(ratio, k); }
};

enum class CriterionMode {
  Implementable,      // (Ã′) + (B̃′) + (B″); needs X̂ and equality rows only
  RockafellarOracle,  // (A′) + (B′) + (B″) against a high-accuracy inf ζₖ
  BppOnly,            // (B″) alone
};

enum class StopReason { KktTolerance, MaxOuter, CriterionUnattainable };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::KktTolerance: return "KKT_TOL";
    case StopReason::MaxOuter: return "MAX_OUTER";
    case StopReason::CriterionUnattainable: return "CRITERION_UNATTAINABLE";
  }
  return "UNKNOWN";
}

inline const char* to_string(CriterionMode m) {
  switch (m) {
    case CriterionMode::Implementable: return "implementable";
    case CriterionMode::RockafellarOracle: return "bprime-oracle";
    case CriterionMode::BppOnly: return "bpp-only";
  }
  return "unknown";
}

/// Outcome of one inexactness test: `gap ≤ threshold`, and for the
/// implementable criteria also `residual_lhs ≤ residual_rhs`.
struct CriterionCheck {
  bool passed = false;
  double gap = 0.0;
  double threshold = 0.0;
  double t = 0.0;
  double residual_lhs = 0.0;
  double residual_rhs = std::numeric_limits<double>::infinity();
};

struct OuterStep;

struct AlmConfig {
  double c0 = 1.0;
  double c_growth = 2.0;
  double c_max = 1e6;
  GeometricSchedule eps{1.0, 0.5};
  GeometricSchedule eta{0.5, 0.5};
  GeometricSchedule eta_prime{0.1, 0.8};
  CriterionMode mode = CriterionMode::BppOnly;
  int max_outer = 100;
  double kkt_stop_tol = 1e-8;
  int max_inner_iter = 200;
  /// The inner tolerance loop gives up below this value.
  double inner_tol_floor = 1e-14;
  /// Inner accuracy of the inf ζₖ oracle in RockafellarOracle mode.
  double oracle_tol = 1e-12;
  /// When the criteria cannot be certified: stop with CriterionUnattainable
  /// (true) or accept the step and flag it in the record (false).
  bool fail_on_unattainable = false;
  /// Optional exact distance of an iterate to the primal solution set.
  std::function<double(const SymMat&)> distance_oracle;
  /// Called once per accepted outer step.
  std::function<void(const OuterStep&)> observer;

  void validate() const {
    if (!(c0 > 0.0)) throw ValidationError("AlmConfig: c0 must be positive");
    if (!(c_growth >= 1.0)) throw ValidationError("AlmConfig: c_growth must be >= 1");
    if (!(c_max >= c0)) throw ValidationError("AlmConfig: c_max must be >= c0");
    if (!(eps.first > 0.0) || !(eps.ratio > 0.0 && eps.ratio < 1.0)) {
      throw ValidationError("AlmConfig: eps schedule must be positive and summable");
    }
    if (!(eta.first > 0.0) || !(eta.ratio > 0.0 && eta.ratio < 1.0)) {
      throw ValidationError("AlmConfig: eta schedule must be positive and summable");
    }
    if (!(eta_prime.first > 0.0) || !(eta_prime.ratio > 0.0 && eta_prime.ratio < 1.0)) {
      throw ValidationError("AlmConfig: eta' schedule must be positive and tend to 0");
    }
    if (max_outer < 0) throw ValidationError("AlmConfig: max_outer must be >= 0");
    if (!(kkt_stop_tol >= 0.0)) throw ValidationError("AlmConfig: kkt_stop_tol must be >= 0");
  }
};

struct ConvergenceRecord {
  int k = 0;
  double ck = 0.0;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double primal_infeas = 0.0;
  double dual_infeas = 0.0;
  double kkt_norm = 0.0;
  double step_norm = 0.0;
  int inner_iters = 0;
  double criterion_gap = 0.0;    // quantity the active criterion bounds
  double criterion_bound = 0.0;  // its threshold
  double eta_k = 0.0;
  bool certified = true;         // every active criterion passed
  std::optional<double> dist_est;
};

/// View of one accepted outer step, handed to AlmConfig::observer.
struct OuterStep {
  int k;
  const InnerProblem& ip;
  const InnerResult& result;
  double eps_k;
  double eta_k;
  double eta_prime_k;
  double step_norm;
  std::optional<CriterionCheck> a_tilde;
  std::optional<CriterionCheck> b_tilde;
  std::optional<CriterionCheck> a_prime;
  std::optional<CriterionCheck> b_prime;
  bool bpp = false;
  bool certified = false;
};

struct AlmState {
  int k = 0;
  SymMat Xk;
  Vector yk;
  Vector wk;
  SymMat Sk;
  double ck = 0.0;
  std::vector<ConvergenceRecord> history;
  std::optional<double> initial_dist_est;
  std::vector<std::string> notes;
};

struct AlmResult {
  AlmState state;
  StopReason reason = StopReason::MaxOuter;
};

/// (A′): ζₖ(zᵏ⁺¹) − inf ζₖ ≤ εₖ²/(2cₖ).
inline bool check_criterion_Aprime_oracle(double gap, double ck, double eps_k) {
  return gap <= eps_k * eps_k / (2.0 * ck);
}

/// (B′): ζₖ(zᵏ⁺¹) − inf ζₖ ≤ (ηₖ²/(2cₖ))‖Xᵏ⁺¹ − Xᵏ‖².
inline bool check_criterion_Bprime_oracle(double gap, double ck, double eta_k,
                                          double step_norm) {
  return gap <= eta_k * eta_k / (2.0 * ck) * step_norm * step_norm;
}

/// (B″): dist(0, ∂ζₖ(zᵏ⁺¹)) ≤ (η′ₖ/cₖ)‖Xᵏ⁺¹ − Xᵏ‖.
inline bool check_criterion_Bpp(double stationarity, double ck, double eta_prime_k,
                                double step_norm) {
  return stationarity <= eta_prime_k / ck * step_norm;
}

enum class ImplementableCriterion { ATilde, BTilde };

/// (Ã′) with `schedule_value` = εₖ, or (B̃′) with `schedule_value` = ηₖ:
///   ζₖ(zᵏ⁺¹) − fₖ(Xᵏ⁺¹) ≤ t   and
///   (1 + ‖Xᵏ⁺¹‖)‖uᵏ⁺¹‖ ≤ min{1, √cₖ, √t/‖∇fₖ(Xᵏ⁺¹)‖}·√t,
/// with uᵏ⁺¹ = AXᵏ⁺¹ − b and t = ν̄⁻¹εₖ²/(2cₖ) resp. ν̄⁻¹(ηₖ²/(2cₖ))‖Xᵏ⁺¹ − Xᵏ‖².
inline CriterionCheck check_criteria_implementable(const InnerProblem& ip,
                                                   const InnerResult& r,
                                                   ImplementableCriterion which,
                                                   double schedule_value, double nu_bar) {
  const SdpProblem& p = ip.prob();
  if (!p.strictly_feasible()) {
    throw ValidationError("check_criteria_implementable: problem has no strictly feasible point");
  }
  if (!(nu_bar > 0.0)) throw ValidationError("check_criteria_implementable: nu_bar must be > 0");
  const double c = ip.ck();
  const double step = (r.Xnext - ip.Xk()).norm();
  const double s2 = schedule_value * schedule_value;

  CriterionCheck out;
  out.t = which == ImplementableCriterion::ATilde ? s2 / (2.0 * c * nu_bar)
                                                  : s2 / (2.0 * c * nu_bar) * step * step;
  out.threshold = out.t;
  out.gap = primal_dual_gap(ip, r);

  const double u = (p.A().apply(r.Xnext) - p.b()).norm();
  const double grad = proximal_primal_gradient(ip, r.Xnext).norm();
  const double sqrt_t = std::sqrt(out.t);
  double factor = std::min(1.0, std::sqrt(c));
  if (grad > 0.0) factor = std::min(factor, sqrt_t / grad);
  out.residual_lhs = (1.0 + r.Xnext.norm()) * u;
  out.residual_rhs = factor * sqrt_t;
  out.passed = out.gap <= out.threshold && out.residual_lhs <= out.residual_rhs;
  return out;
}

/// θₖ = (κ/√(κ² + cₖ²) + 2ηₖ)/(1 − ηₖ); may exceed 1.
inline double theta_k_predicted(double kappa_phi, double ck, double eta_k) {
  if (!(kappa_phi >= 0.0)) throw ValidationError("theta_k_predicted: kappa must be >= 0");
  if (!(ck > 0.0)) throw ValidationError("theta_k_predicted: ck must be > 0");
  if (!(eta_k >= 0.0 && eta_k < 1.0)) {
    throw ValidationError("theta_k_predicted: eta_k must lie in [0, 1)");
  }
  const double lead = std::isinf(ck) ? 0.0 : kappa_phi / std::sqrt(kappa_phi * kappa_phi + ck * ck);
  return (lead + 2.0 * eta_k) / (1.0 - eta_k);
}

/// τₖ = cₖ⁻¹(1 − ηₖ)⁻¹.
inline double tau_k(double ck, double eta_k) {
  if (!(ck > 0.0)) throw ValidationError("tau_k: ck must be > 0");
  if (!(eta_k >= 0.0 && eta_k < 1.0)) throw ValidationError("tau_k: eta_k must lie in [0, 1)");
  return 1.0 / (ck * (1.0 - eta_k));
}

/// τₖ′ = τₖ(ηₖ²‖Xᵏ⁺¹ − Xᵏ‖ + ‖Xᵏ⁺¹‖ + ‖Xᵏ‖)/2.
inline double tau_k_prime(double ck, double eta_k, double step_norm, double norm_next,
                          double norm_curr) {
  return tau_k(ck, eta_k) * (eta_k * eta_k * step_norm + norm_next + norm_curr) / 2.0;
}

/// ζₖ(z) − inf ζₖ, with inf ζₖ obtained by a warm-started inner solve to
/// `oracle_tol`. Intended for verification runs.
inline double oracle_inner_gap(const InnerProblem& ip, const InnerResult& r,
                               double oracle_tol = 1e-12, int max_iter = 500) {
  const InnerResult best = solve_inner(ip, r.y, r.w, oracle_tol, max_iter);
  return std::max(0.0, reduced_objective_difference(ip, r.eval, best.eval));
}

namespace detail {

inline ConvergenceRecord make_record(const SdpProblem& prob, int k, double c,
                                     const InnerProblem& ip, const InnerResult& r) {
  ConvergenceRecord rec;
  rec.k = k;
  rec.ck = c;
  const KktPoint pt{r.y, r.w, r.S, r.Xnext};
  const Residuals res = kkt_residual(prob, pt);
  rec.primal_obj = primal_objective(prob, r.Xnext);
  rec.dual_obj = dual_objective(prob, pt);
  rec.primal_infeas = res.primal_infeas;
  rec.dual_infeas = res.dual_infeas;
  rec.kkt_norm = res.kkt_norm;
  rec.step_norm = (r.Xnext - ip.Xk()).norm();
  return rec;
}

}  // namespace detail

/// Runs the ALM from X0 (projected onto the PSD cone if needed). When X0 is
/// absent the start is X̂ in Implementable mode and 0 otherwise.
inline AlmResult alm_run(const SdpProblem& prob, const AlmConfig& cfg,
                         std::optional<SymMat> x0 = std::nullopt) {
  cfg.validate();
  double nu = 0.0;
  if (cfg.mode == CriterionMode::Implementable) {
    require_implementable_setting(prob, "alm_run (implementable mode)");
    nu = nu_bar(prob);
  }

  AlmResult out;
  AlmState& st = out.state;
  if (!x0) {
    x0 = cfg.mode == CriterionMode::Implementable ? *prob.strictly_feasible()
                                                  : SymMat(prob.dim());
  }
  if (x0->dim() != prob.dim()) throw DimensionError("alm_run: X0 has the wrong dimension");
  if (lambda_min(*x0) < -default_eigtol(*x0)) {
    st.notes.push_back("X0 was not PSD and has been projected onto the PSD cone");
    x0 = project_psd(*x0).projected;
  }
  st.Xk = *x0;
  st.yk = Vector::Zero(prob.num_constraints());
  st.wk = Vector::Zero(prob.num_ls_rows());
  st.Sk = SymMat(prob.dim());
  st.ck = cfg.c0;
  if (cfg.distance_oracle) st.initial_dist_est = cfg.distance_oracle(st.Xk);

  double prev_step = 1.0;
  for (int k = 0; k < cfg.max_outer; ++k) {
    const double c = st.ck;
    const double eps_k = cfg.eps.at(k);
    const double eta_k = cfg.eta.at(k);
    const double etap_k = cfg.eta_prime.at(k);
    const InnerProblem ip(prob, st.Xk, c);

    double tol = etap_k / c * std::max(prev_step, 1e-6);
    Vector y = st.yk;
    Vector w = st.wk;
    int inner_total = 0;
    InnerResult r;
    ConvergenceRecord rec;
    std::optional<CriterionCheck> at, bt, ap, bp;
    bool bpp = false;
    bool certified = false;
    bool converged = false;

    for (;;) {
      r = solve_inner(ip, y, w, tol, cfg.max_inner_iter);
      inner_total += r.iterations;
      y = r.y;
      w = r.w;
      rec = detail::make_record(prob, k, c, ip, r);
      const double step = rec.step_norm;

      bpp = check_criterion_Bpp(r.grad_norm_Q, c, etap_k, step);
      bool gap_ok = true;
      rec.criterion_gap = r.grad_norm_Q;
      rec.criterion_bound = etap_k / c * step;
      if (cfg.mode == CriterionMode::Implementable) {
        at = check_criteria_implementable(ip, r, ImplementableCriterion::ATilde, eps_k, nu);
        bt = check_criteria_implementable(ip, r, ImplementableCriterion::BTilde, eta_k, nu);
        gap_ok = at->passed && bt->passed;
        rec.criterion_gap = at->gap;
        rec.criterion_bound = std::min(at->threshold, bt->threshold);
      } else if (cfg.mode == CriterionMode::RockafellarOracle) {
        const double gap = oracle_inner_gap(ip, r, cfg.oracle_tol);
        ap = CriterionCheck{check_criterion_Aprime_oracle(gap, c, eps_k), gap,
                            eps_k * eps_k / (2.0 * c)};
        bp = CriterionCheck{check_criterion_Bprime_oracle(gap, c, eta_k, step), gap,
                            eta_k * eta_k / (2.0 * c) * step * step};
        gap_ok = ap->passed && bp->passed;
        rec.criterion_gap = gap;
        rec.criterion_bound = std::min(ap->threshold, bp->threshold);
      }
      certified = bpp && gap_ok;
      converged = rec.kkt_norm <= cfg.kkt_stop_tol;
      if (certified || converged) break;
      if (r.stagnated || tol < cfg.inner_tol_floor) break;
      tol = 0.5 * std::min(tol, r.grad_norm_Q);
    }

    rec.inner_iters = inner_total;
    rec.eta_k = eta_k;
    rec.certified = certified;
    if (cfg.distance_oracle) rec.dist_est = cfg.distance_oracle(r.Xnext);

    if (!certified && !converged && cfg.fail_on_unattainable) {
      st.notes.push_back("outer iteration " + std::to_string(k) +
                         ": inexactness criteria could not be certified");
      out.reason = StopReason::CriterionUnattainable;
      return out;
    }
    if (!certified && !converged) {
      st.notes.push_back("outer iteration " + std::to_string(k) +
                         ": step accepted without certifying the inexactness criteria");
    }

    if (cfg.observer) {
      cfg.observer(OuterStep{k, ip, r, eps_k, eta_k, etap_k, rec.step_norm, at, bt, ap, bp, bpp,
                             certified});
    }

    st.history.push_back(rec);
    st.k = k + 1;
    st.Xk = r.Xnext;
    st.yk = r.y;
    st.wk = r.w;
    st.Sk = r.S;
    prev_step = rec.step_norm;
    st.ck = std::min(cfg.c_growth * c, cfg.c_max);

    if (converged) {
      out.reason = StopReason::KktTolerance;
      return out;
    }
  }
  out.reason = StopReason::MaxOuter;
  return out;
}

}  // namespace almsdp
