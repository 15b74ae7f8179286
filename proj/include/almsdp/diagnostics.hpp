#pragma once

// Convergence-rate measurement and checks: a generic proximal point harness,
// Fejér monotonicity, fixture distance oracles, rank conditions at
// complementary pairs and rate reports over outer-iteration histories.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "almsdp/alm.hpp"
#include "almsdp/error.hpp"
#include "almsdp/inner.hpp"
#include "almsdp/model.hpp"
#include "almsdp/symcone.hpp"

namespace almsdp {

namespace detail {

inline double sq_norm(double x) { return x * x; }
inline double sq_norm(const Vector& x) { return x.squaredNorm(); }
inline double sq_norm(const SymMat& x) { return x.norm() * x.norm(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Proximal point harness

/// Iterates ξᵏ and errors eᵏ⁺¹ = (I + cₖT)⁻¹(ξᵏ) − ξᵏ⁺¹. `err[k]` belongs to
/// the step from `xi[k]` to `xi[k+1]`.
template <class Point>
struct PpaLog {
  std::vector<Point> xi;
  std::vector<Point> err;
  std::vector<double> c;
  std::vector<bool> criterion_a;  // ‖eᵏ⁺¹‖ ≤ εₖ
  std::vector<bool> criterion_b;  // ‖eᵏ⁺¹‖ ≤ ηₖ‖ξᵏ⁺¹ − ξᵏ‖
};

template <class Point>
struct PpaOptions {
  int iterations = 20;
  std::function<double(int)> c = [](int) { return 1.0; };
  std::function<double(int)> eps = [](int k) { return std::pow(0.5, k); };
  std::function<double(int)> eta = [](int k) { return 0.5 * std::pow(0.5, k); };
  /// Error added to the exact resolvent value at step k; none if empty.
  std::function<Point(int, const Point&)> error_injector;
};

/// ξᵏ⁺¹ = J_{cₖ}(ξᵏ) − eᵏ⁺¹ with `resolvent(ξ, c)` = (I + cT)⁻¹(ξ).
template <class Point>
PpaLog<Point> ppa_run(const std::function<Point(const Point&, double)>& resolvent,
                      const Point& x0, const PpaOptions<Point>& opt) {
  if (opt.iterations < 0) throw ValidationError("ppa_run: iterations must be >= 0");
  PpaLog<Point> log;
  log.xi.push_back(x0);
  for (int k = 0; k < opt.iterations; ++k) {
    const double ck = opt.c(k);
    if (!(ck > 0.0)) throw ValidationError("ppa_run: c_k must be positive");
    const Point exact = resolvent(log.xi.back(), ck);
    Point e = exact - exact;
    if (opt.error_injector) e = opt.error_injector(k, exact);
    Point next = exact - e;
    const double en = std::sqrt(detail::sq_norm(e));
    const double step = std::sqrt(detail::sq_norm(next - log.xi.back()));
    log.criterion_a.push_back(en <= opt.eps(k));
    log.criterion_b.push_back(en <= opt.eta(k) * step);
    log.c.push_back(ck);
    log.err.push_back(std::move(e));
    log.xi.push_back(std::move(next));
  }
  return log;
}

/// max over k of ‖ξᵏ⁺¹ + eᵏ⁺¹ − ξ̄‖² − ‖ξᵏ − ξ̄‖² + ‖ξᵏ⁺¹ + eᵏ⁺¹ − ξᵏ‖²; the
/// Fejér inequality holds when this is ≤ 0. Returns −∞ for an empty log.
template <class Point>
double fejer_check(const PpaLog<Point>& log, const Point& xbar) {
  if (log.err.size() + 1 != log.xi.size()) {
    throw ValidationError("fejer_check: log must hold one error per step");
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < log.err.size(); ++k) {
    const Point j = log.xi[k + 1] + log.err[k];
    const double v = detail::sq_norm(j - xbar) - detail::sq_norm(log.xi[k] - xbar) +
                     detail::sq_norm(j - log.xi[k]);
    worst = std::max(worst, v);
  }
  return worst;
}

/// Resolvent of T = ∂|·| on ℝ: soft threshold.
inline double resolvent_abs(double x, double c) {
  return std::copysign(std::max(std::abs(x) - c, 0.0), x);
}

/// Resolvent of T(x) = x on ℝ.
inline double resolvent_identity(double x, double c) { return x / (1.0 + c); }

/// Resolvent of the normal cone of [lo, hi]: clamp.
inline double resolvent_interval_normal(double x, double lo, double hi) {
  return std::clamp(x, lo, hi);
}

/// (I + cₖT_φ)⁻¹(Xᵏ) computed by a tight warm-started inner solve.
inline SymMat alm_resolvent_oracle(const InnerProblem& ip, const InnerResult& r,
                                   double tol = 1e-12, int max_iter = 500) {
  return solve_inner(ip, r.y, r.w, tol, max_iter).Xnext;
}

// ---------------------------------------------------------------------------
// Projections and Dykstra

using Projector = std::function<SymMat(const SymMat&)>;

struct DykstraResult {
  SymMat point;
  int iterations = 0;
};

/// Projection of x0 onto the intersection of closed convex sets. Stops when
/// one full sweep moves the iterate and every correction by at most tol.
inline DykstraResult dykstra_project(const SymMat& x0, const std::vector<Projector>& sets,
                                     double tol = 1e-12, int max_iter = 100000) {
  if (sets.empty()) return {x0, 0};
  const std::size_t p = sets.size();
  std::vector<SymMat> incr(p, SymMat(x0.dim()));
  SymMat x = x0;
  for (int it = 1; it <= max_iter; ++it) {
    double change = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      const SymMat shifted = x + incr[i];
      SymMat y = sets[i](shifted);
      const SymMat new_incr = shifted - y;
      change = std::max(change, (y - x).norm());
      change = std::max(change, (new_incr - incr[i]).norm());
      incr[i] = new_incr;
      x = std::move(y);
    }
    if (change <= tol * (1.0 + x.norm())) return {x, it};
  }
  std::ostringstream os;
  os << "dykstra_project: no convergence within " << max_iter << " sweeps";
  throw NumericalError(os.str());
}

/// Projector onto {X : <A_i, X> = b_i for all i}.
inline Projector affine_projector(const LinearOperator& a, const Vector& b) {
  if (b.size() != a.rows()) throw DimensionError("affine_projector: length mismatch");
  const Eigen::CompleteOrthogonalDecomposition<Matrix> gram(a.gram());
  return [a, b, gram](const SymMat& x) {
    const Vector r = a.apply(x) - b;
    return x - a.adjoint(gram.solve(r));
  };
}

/// Projector onto {X : <A, X> ≤ beta}.
inline Projector halfspace_projector(const SymMat& a, double beta) {
  const double nsq = a.norm() * a.norm();
  if (!(nsq > 0.0)) throw ValidationError("halfspace_projector: zero normal");
  return [a, beta, nsq](const SymMat& x) {
    const double v = inner(a, x) - beta;
    return v > 0.0 ? x - (v / nsq) * a : x;
  };
}

inline Projector psd_projector() {
  return [](const SymMat& x) { return project_psd(x).projected; };
}

/// Distance of X to {X ⪰ 0 : AX = b} (equality rows) by Dykstra.
inline double feasible_set_distance(const SdpProblem& prob, const SymMat& x,
                                    double tol = 1e-12) {
  if (!prob.cone().equality_only()) {
    throw ValidationError("feasible_set_distance: equality constraints only");
  }
  const DykstraResult r =
      dykstra_project(x, {affine_projector(prob.A(), prob.b()), psd_projector()}, tol);
  return (x - r.point).norm();
}

// ---------------------------------------------------------------------------
// Fixture solution sets

/// Distance to {diag(t, 0) : t ≥ 0}.
inline double dist_example31(const SymMat& x) {
  if (x.dim() != 2) throw DimensionError("dist_example31: expects a 2x2 matrix");
  const double m = std::min(x(0, 0), 0.0);
  return std::sqrt(2.0 * x(0, 1) * x(0, 1) + x(1, 1) * x(1, 1) + m * m);
}

/// Distance of (y, S) to the unique dual solution (0, diag(0, 1)).
inline double dual_dist_example31(const Vector& y, const SymMat& s) {
  if (y.size() != 1 || s.dim() != 2) throw DimensionError("dual_dist_example31: bad shapes");
  const double d = (s - SymMat::diagonal(Vector::Unit(2, 1))).norm();
  return std::sqrt(y.squaredNorm() + d * d);
}

inline SymMat example32_A() {
  Matrix a(2, 2);
  a << 1.0, -2.0, -2.0, 1.0;
  return SymMat::from_lower(a);
}

/// Projection onto {X ⪰ 0 : tr X = 1, <A, X> ≤ 1}, A = [[1, −2], [−2, 1]].
inline SymMat project_example32(const SymMat& x, double tol = 1e-12) {
  if (x.dim() != 2) throw DimensionError("dist_example32: expects a 2x2 matrix");
  const LinearOperator trace(2, {SymMat::identity(2)});
  const std::vector<Projector> sets{affine_projector(trace, Vector::Ones(1)),
                                    halfspace_projector(example32_A(), 1.0), psd_projector()};
  return dykstra_project(x, sets, tol).point;
}

inline double dist_example32(const SymMat& x) { return (x - project_example32(x)).norm(); }

/// Distance of (y, w, S) to the unique dual solution (0, 0, 0).
inline double dual_dist_example32(const Vector& y, const Vector& w, const SymMat& s) {
  const double sn = s.norm();
  return std::sqrt(y.squaredNorm() + w.squaredNorm() + sn * sn);
}

struct SolutionSetOracle {
  std::string tag;
  std::function<double(const SymMat&)> exact_distance;
  std::function<double(const Vector&, const Vector&, const SymMat&)> exact_dual_distance;
};

inline SolutionSetOracle example31_oracle() {
  return {"example31", dist_example31,
          [](const Vector& y, const Vector&, const SymMat& s) { return dual_dist_example31(y, s); }};
}

inline SolutionSetOracle example32_oracle() {
  return {"example32", [](const SymMat& x) { return dist_example32(x); }, dual_dist_example32};
}

// ---------------------------------------------------------------------------
// Perturbed KKT system

/// Right-hand side (u₁, u₂, U, V) of the perturbed KKT system.
struct KktPerturbation {
  Vector u1;
  Vector u2;
  SymMat U;
  SymMat V;

  double norm() const {
    const double a = U.norm();
    const double b = V.norm();
    return std::sqrt(u1.squaredNorm() + u2.squaredNorm() + a * a + b * b);
  }
};

/// Euclidean violation of
///   u₁ ∈ −b + AX + N_Q(y),  u₂ = FX − (d − w),  U ∈ X + N_{𝕊₊}(S),
///   V = C − A*y − F*w − S,
/// including the PSD violation of S.
inline double perturbed_kkt_violation(const SdpProblem& prob, const KktPoint& pt,
                                      const KktPerturbation& pert) {
  check_point(prob, pt);
  if (pert.u1.size() != prob.num_constraints() || pert.u2.size() != prob.num_ls_rows() ||
      pert.U.dim() != prob.dim() || pert.V.dim() != prob.dim()) {
    throw DimensionError("perturbed_kkt_violation: perturbation has the wrong shape");
  }
  const ConeSpec& cone = prob.cone();
  if (!cone.contains(pt.y)) throw ValidationError("perturbed_kkt_violation: y is not in Q");

  const Vector v = pert.u1 + prob.b() - prob.A().apply(pt.X);
  double s1 = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double r = cone.is_inequality(i) && pt.y[i] == 0.0 ? std::max(v[i], 0.0) : v[i];
    s1 += r * r;
  }
  double s2 = 0.0;
  if (prob.num_ls_rows() > 0) {
    s2 = (pert.u2 - (prob.F().apply(pt.X) - prob.d() + pt.w)).squaredNorm();
  }
  const SymMat h = pert.U - pt.X;
  const double tol = default_eigtol(pt.S);
  const double r3 = (h - project_normal_cone_psd(pt.S, h, tol)).norm();
  const double psd = std::max(-lambda_min(pt.S), 0.0);
  const double r4 = (pert.V - (prob.C() - dual_operator(prob, pt.y, pt.w) - pt.S)).norm();
  return std::sqrt(s1 + s2 + r3 * r3 + psd * psd + r4 * r4);
}

struct PerturbationRow {
  double eps = 0.0;
  double uv_norm = 0.0;       // ‖(u(ε), V(ε))‖
  double violation = 0.0;     // residual of the perturbed system
  double primal_dist = 0.0;   // dist(X(ε), primal solution set)
  double dual_dist = 0.0;     // dist((y(ε), S(ε)), dual solution set)
  double ratio = 0.0;         // dual_dist / uv_norm
  double kkt_norm = 0.0;      // unperturbed KKT residual at the triple
};

/// The triple y = √ε, S = [[ε, −√ε], [−√ε, 1 + √ε]], X = [[ε, ε], [ε, 2ε]]
/// together with u = (0, X), V = diag(−ε, 0).
inline std::pair<KktPoint, KktPerturbation> example31_perturbed_point(double eps) {
  if (!(eps > 0.0)) throw ValidationError("example31_perturbed_point: eps must be > 0");
  const double r = std::sqrt(eps);
  Matrix s(2, 2), x(2, 2);
  s << eps, -r, -r, 1.0 + r;
  x << eps, eps, eps, 2.0 * eps;
  KktPoint pt{Vector::Constant(1, r), Vector(0), SymMat::from_lower(s), SymMat::from_lower(x)};
  KktPerturbation pert{Vector::Zero(1), Vector(0), pt.X, SymMat::diagonal(Vector::Unit(2, 0) * -eps)};
  return {pt, pert};
}

// ---------------------------------------------------------------------------
// Rank conditions

struct RankReport {
  Index rank_X = 0;
  Index rank_S = 0;
  Index beta_size = 0;
  bool cond_i = false;   // rank S ≥ n − 1
  bool cond_ii = false;  // rank X + rank S = n
  bool complementary = true;
  std::vector<std::string> warnings;
};

inline RankReport rank_conditions(const SymMat& x, const SymMat& s, double eigtol) {
  if (x.dim() != s.dim()) throw DimensionError("rank_conditions: dimension mismatch");
  if (!(eigtol > 0.0)) throw ValidationError("rank_conditions: eigtol must be > 0");
  const Index n = x.dim();
  auto rank = [eigtol](const SymMat& m) {
    const Vector ev = eig_sym(m).eigenvalues;
    return static_cast<Index>((ev.array() > eigtol).count());
  };
  RankReport r;
  r.rank_X = rank(x);
  r.rank_S = rank(s);
  r.beta_size = std::max<Index>(0, n - r.rank_X - r.rank_S);
  r.cond_i = r.rank_S >= n - 1;
  r.cond_ii = r.rank_X + r.rank_S == n;
  const double xs = std::abs(inner(x, s));
  if (xs > eigtol * std::max(1.0, x.norm() * s.norm())) {
    r.complementary = false;
    std::ostringstream os;
    os << "X and S are not complementary: <X, S> = " << xs;
    r.warnings.push_back(os.str());
  }
  if (lambda_min(x) < -eigtol) r.warnings.push_back("X is not PSD");
  if (lambda_min(s) < -eigtol) r.warnings.push_back("S is not PSD");
  return r;
}

// ---------------------------------------------------------------------------
// Rate reports

/// dist[k] = dist(Xᵏ) for k = 0..K; ck[k], eta[k] are the parameters of the
/// step from Xᵏ to Xᵏ⁺¹; feas[k] (optional) is the dual infeasibility after it.
/// Rows stop at the first step flagged false in `certified` (optional).
struct RateSeries {
  std::vector<double> dist;
  std::vector<double> ck;
  std::vector<double> eta;
  std::vector<double> feas;
  std::vector<bool> certified;
  double scale = 1.0;
};

struct RateRow {
  int k = 0;
  double dist = 0.0;
  double dist_next = 0.0;
  double ratio = 0.0;
  std::optional<double> theta;
  std::optional<bool> within_bound;
  std::optional<double> feas_ratio;  // feas / (τₖ·distₖ)
};

struct RateReport {
  std::vector<RateRow> rows;
  std::optional<int> tail_start;  // index into rows of the first ratio < 1
  std::optional<bool> verdict;    // needs a κ hypothesis
  double kappa_empirical = std::numeric_limits<double>::quiet_NaN();
  bool superlinear_signature = false;
  static constexpr double slack = 1.05;
};

/// κ with θ(κ, c, η) = r, clipped at 0; +∞ when no finite κ reaches r.
inline double kappa_for_ratio(double r, double ck, double eta) {
  const double rp = r * (1.0 - eta) - 2.0 * eta;
  if (rp <= 0.0) return 0.0;
  if (rp >= 1.0) return std::numeric_limits<double>::infinity();
  return ck * rp / std::sqrt(1.0 - rp * rp);
}

inline RateReport rate_report(const RateSeries& s, std::optional<double> kappa_guess) {
  const std::size_t steps = s.dist.empty() ? 0 : s.dist.size() - 1;
  if (s.ck.size() < steps || s.eta.size() < steps) {
    throw DimensionError("rate_report: ck and eta must cover every step");
  }
  if (!s.feas.empty() && s.feas.size() < steps) {
    throw DimensionError("rate_report: feas must cover every step");
  }
  if (!s.certified.empty() && s.certified.size() < steps) {
    throw DimensionError("rate_report: certified must cover every step");
  }
  const double guard = 10.0 * std::numeric_limits<double>::epsilon() * s.scale;
  RateReport rep;
  for (std::size_t k = 0; k < steps; ++k) {
    if (!(s.dist[k] > guard)) break;
    if (!s.certified.empty() && !s.certified[k]) break;
    RateRow row;
    row.k = static_cast<int>(k);
    row.dist = s.dist[k];
    row.dist_next = s.dist[k + 1];
    row.ratio = s.dist[k + 1] / s.dist[k];
    if (!s.feas.empty()) row.feas_ratio = s.feas[k] / (tau_k(s.ck[k], s.eta[k]) * s.dist[k]);
    if (kappa_guess) {
      row.theta = theta_k_predicted(*kappa_guess, s.ck[k], s.eta[k]);
    }
    if (!rep.tail_start && row.ratio < 1.0) rep.tail_start = static_cast<int>(rep.rows.size());
    rep.rows.push_back(row);
  }
  if (!rep.tail_start) return rep;

  double kappa = 0.0;
  bool ok = true;
  bool monotone = true;
  for (std::size_t i = static_cast<std::size_t>(*rep.tail_start); i < rep.rows.size(); ++i) {
    RateRow& row = rep.rows[i];
    kappa = std::max(kappa, kappa_for_ratio(row.ratio, s.ck[row.k], s.eta[row.k]));
    if (row.theta) {
      row.within_bound = row.ratio <= RateReport::slack * *row.theta;
      ok = ok && *row.within_bound;
    }
    if (i > static_cast<std::size_t>(*rep.tail_start) && row.ratio > rep.rows[i - 1].ratio) {
      monotone = false;
    }
  }
  rep.kappa_empirical = kappa;
  if (kappa_guess) rep.verdict = ok;
  rep.superlinear_signature = monotone && rep.rows.back().ratio < 0.1 &&
                              rep.rows.size() - static_cast<std::size_t>(*rep.tail_start) >= 2;
  return rep;
}

/// Series from an ALM history; dist_est must be present on every record.
inline RateSeries rate_series(const std::vector<ConvergenceRecord>& history, double dist0,
                              double scale = 1.0) {
  RateSeries s;
  s.scale = scale;
  s.dist.push_back(dist0);
  for (const auto& rec : history) {
    if (!rec.dist_est) throw ValidationError("rate_series: record without dist_est");
    s.dist.push_back(*rec.dist_est);
    s.ck.push_back(rec.ck);
    s.eta.push_back(rec.eta_k);
    s.feas.push_back(rec.dual_infeas);
    s.certified.push_back(rec.certified);
  }
  return s;
}

inline std::vector<PerturbationRow> example31_perturbation_demo(
    const SdpProblem& example31, const std::vector<double>& eps_list) {
  std::vector<PerturbationRow> rows;
  for (double eps : eps_list) {
    const auto [pt, pert] = example31_perturbed_point(eps);
    PerturbationRow row;
    row.eps = eps;
    row.uv_norm = pert.norm();
    row.violation = perturbed_kkt_violation(example31, pt, pert);
    row.primal_dist = dist_example31(pt.X);
    row.dual_dist = dual_dist_example31(pt.y, pt.S);
    row.ratio = row.dual_dist / row.uv_norm;
    row.kkt_norm = kkt_residual(example31, pt).kkt_norm;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace almsdp
