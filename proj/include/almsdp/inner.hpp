#pragma once

// Inner solver: approximate minimization over (y, w) ∈ Q × 𝕎 of the
// augmented Lagrangian after eliminating S in closed form,
//
//   ζ(y, w) = −<b, y> + h*(−w) + (c/2)‖Π(W)‖² − ‖Xᵏ‖²/(2c),
//   W       = Xᵏ/c + A*y + F*w − C,
//
// by a projected semismooth Newton-CG method with an Armijo line search and
// a projected-gradient fallback.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "almsdp/error.hpp"
#include "almsdp/model.hpp"
#include "almsdp/symcone.hpp"

namespace almsdp {

/// ζₖ(·) = L_{cₖ}(·, Xᵏ) for one outer iteration. Holds a non-owning
/// reference to the problem.
class InnerProblem {
 public:
  InnerProblem(const SdpProblem& prob, SymMat xk, double ck)
      : prob_(&prob), xk_(std::move(xk)), ck_(ck) {
    if (!(ck_ > 0.0) || !std::isfinite(ck_)) {
      throw ValidationError("InnerProblem: penalty parameter must be positive and finite");
    }
    if (xk_.dim() != prob.dim()) throw DimensionError("InnerProblem: Xk has wrong dimension");
  }

  const SdpProblem& prob() const { return *prob_; }
  const SymMat& Xk() const { return xk_; }
  double ck() const { return ck_; }

 private:
  const SdpProblem* prob_;
  SymMat xk_;
  double ck_;
};

/// Everything the solver needs at one (y, w).
struct InnerEvaluation {
  Vector y;
  Vector w;
  EigenDecomposition w_decomp;  // of W
  SymMat proj;                  // Π(W)
  double value = 0.0;
  Vector grad_y;
  Vector grad_w;
};

inline SymMat inner_argument(const InnerProblem& ip, const Vector& y, const Vector& w) {
  const SdpProblem& p = ip.prob();
  return (1.0 / ip.ck()) * ip.Xk() + dual_operator(p, y, w) - p.C();
}

inline InnerEvaluation evaluate_inner(const InnerProblem& ip, const Vector& y,
                                      const Vector& w) {
  const SdpProblem& p = ip.prob();
  if (y.size() != p.num_constraints() || w.size() != p.num_ls_rows()) {
    throw DimensionError("evaluate_inner: (y, w) dimensions do not match the problem");
  }
  InnerEvaluation ev;
  ev.y = y;
  ev.w = w;
  ev.w_decomp = eig_sym(inner_argument(ip, y, w));
  const Vector pos = ev.w_decomp.eigenvalues.cwiseMax(0.0);
  ev.proj = ev.w_decomp.compose(pos);
  const double c = ip.ck();
  const double xk_sq = ip.Xk().norm() * ip.Xk().norm();
  ev.value = -p.b().dot(y) + p.h_conj_neg(w) + 0.5 * c * pos.squaredNorm() - xk_sq / (2.0 * c);

  const SymMat x_trial = c * ev.proj;
  ev.grad_y = p.A().apply(x_trial) - p.b();
  ev.grad_w = w - p.d();
  if (p.num_ls_rows() > 0) ev.grad_w += p.F().apply(x_trial);
  return ev;
}

inline double reduced_objective(const InnerProblem& ip, const Vector& y, const Vector& w) {
  return evaluate_inner(ip, y, w).value;
}

struct ReducedGradient {
  Vector y;
  Vector w;
};

inline ReducedGradient reduced_gradient(const InnerProblem& ip, const Vector& y,
                                        const Vector& w) {
  InnerEvaluation ev = evaluate_inner(ip, y, w);
  return {std::move(ev.grad_y), std::move(ev.grad_w)};
}

/// 𝒮ₖ(y, w) = Π(C − A*y − F*w − Xᵏ/cₖ).
inline SymMat dual_slack(const InnerProblem& ip, const Vector& y, const Vector& w) {
  return project_psd(-inner_argument(ip, y, w)).projected;
}

/// Distance of 0 to ∇ζ + N_Q(y) × {0}.
inline double stationarity_distance(const ConeSpec& cone, const Vector& y, const Vector& g_y,
                                    const Vector& g_w) {
  if (y.size() != cone.size() || g_y.size() != cone.size()) {
    throw DimensionError("stationarity_distance: length mismatch");
  }
  double sq = g_w.squaredNorm();
  for (Index i = 0; i < cone.size(); ++i) {
    if (!cone.is_inequality(i)) {
      sq += g_y[i] * g_y[i];
    } else if (y[i] > 0.0) {
      sq += g_y[i] * g_y[i];
    } else if (y[i] == 0.0) {
      const double g = std::min(g_y[i], 0.0);
      sq += g * g;
    } else {
      std::ostringstream os;
      os << "stationarity_distance: y[" << i << "] = " << y[i] << " lies outside Q";
      throw ValidationError(os.str());
    }
  }
  return std::sqrt(sq);
}

inline double stationarity_distance(const InnerProblem& ip, const InnerEvaluation& ev) {
  return stationarity_distance(ip.prob().cone(), ev.y, ev.grad_y, ev.grad_w);
}

/// Generalized Hessian of ζ at an evaluation point, acting on (dy, dw):
///   [c·A V A*     c·A V F*    ] [dy]
///   [c·F V A*  I + c·F V F*   ] [dw]
/// with V the generalized derivative of Π at W.
class NewtonOperator {
 public:
  NewtonOperator(const InnerProblem& ip, const InnerEvaluation& ev)
      : ip_(&ip), deriv_(ev.w_decomp) {}

  std::pair<Vector, Vector> apply(const Vector& dy, const Vector& dw) const {
    const SdpProblem& p = ip_->prob();
    const SymMat vh = deriv_.apply(dual_operator(p, dy, dw));
    Vector out_y = ip_->ck() * p.A().apply(vh);
    Vector out_w = dw;
    if (p.num_ls_rows() > 0) out_w += ip_->ck() * p.F().apply(vh);
    return {std::move(out_y), std::move(out_w)};
  }

 private:
  const InnerProblem* ip_;
  PsdProjectionDerivative deriv_;
};

struct CgResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
};

/// Conjugate gradients for a self-adjoint PSD operator; stops at
/// ‖r‖ ≤ rtol·‖rhs‖.
inline CgResult conjugate_gradient(const std::function<Vector(const Vector&)>& op,
                                   const Vector& rhs, double rtol, int max_iter) {
  CgResult res;
  res.x = Vector::Zero(rhs.size());
  const double target = rtol * rhs.norm();
  Vector r = rhs;
  if (r.norm() <= target) {
    res.converged = true;
    return res;
  }
  Vector p = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < max_iter; ++it) {
    const Vector ap = op(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rr / pap;
    res.x += alpha * p;
    r -= alpha * ap;
    res.iterations = it + 1;
    const double rr_new = r.squaredNorm();
    if (std::sqrt(rr_new) <= target) {
      res.converged = true;
      break;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return res;
}

struct InnerOptions {
  double tol = 1e-10;
  int max_iter = 200;
  double armijo_slope = 1e-4;
  double backtrack = 0.5;
};

struct InnerResult {
  Vector y;
  Vector w;
  SymMat S;      // 𝒮ₖ(y, w)
  SymMat Xnext;  // Π(Xᵏ + cₖ(A*y + F*w − C))
  double grad_norm_Q = 0.0;
  double objective_value = 0.0;
  int iterations = 0;
  int cg_iterations = 0;
  bool converged = false;   // grad_norm_Q ≤ tol
  bool stagnated = false;   // no further decrease was possible
  InnerEvaluation eval;     // evaluation at (y, w)
};

inline InnerResult make_inner_result(const InnerProblem& ip, InnerEvaluation ev) {
  InnerResult r;
  r.y = ev.y;
  r.w = ev.w;
  r.S = ev.w_decomp.compose((-ev.w_decomp.eigenvalues).cwiseMax(0.0));
  r.Xnext = ip.ck() * ev.proj;
  r.grad_norm_Q = stationarity_distance(ip, ev);
  r.objective_value = ev.value;
  r.eval = std::move(ev);
  return r;
}

namespace detail {

inline void ensure_finite(const InnerEvaluation& ev, int iteration) {
  if (!std::isfinite(ev.value) || !ev.grad_y.allFinite() || !ev.grad_w.allFinite()) {
    std::ostringstream os;
    os << "solve_inner: non-finite objective at iteration " << iteration
       << " (value = " << ev.value << ", ‖y‖ = " << ev.y.norm() << ", ‖w‖ = " << ev.w.norm()
       << ")";
    throw NumericalError(os.str());
  }
}

/// Lipschitz bound of ∇ζ: c·λ_max(G) + 1 with G the Gram matrix of the
/// stacked rows of A and F.
inline double gradient_lipschitz(const InnerProblem& ip) {
  const SdpProblem& p = ip.prob();
  std::vector<SymMat> stacked = p.A().row_list();
  stacked.insert(stacked.end(), p.F().row_list().begin(), p.F().row_list().end());
  if (stacked.empty()) return 1.0;
  const LinearOperator all(p.dim(), std::move(stacked));
  const double lmax =
      Eigen::SelfAdjointEigenSolver<Matrix>(all.gram(), Eigen::EigenvaluesOnly)
          .eigenvalues()
          .maxCoeff();
  return ip.ck() * std::max(lmax, 0.0) + 1.0;
}

}  // namespace detail

/// Projected semismooth Newton-CG on ζ starting from (y0, w0).
inline InnerResult solve_inner(const InnerProblem& ip, const Vector& y0, const Vector& w0,
                               const InnerOptions& opt) {
  if (!(opt.tol > 0.0)) throw ValidationError("solve_inner: tol must be positive");
  const SdpProblem& p = ip.prob();
  const ConeSpec& cone = p.cone();
  const Index m = p.num_constraints();
  const Index mw = p.num_ls_rows();

  InnerEvaluation ev = evaluate_inner(ip, project_cone_Q(cone, y0), w0);
  detail::ensure_finite(ev, 0);
  double stat = stationarity_distance(ip, ev);

  // Diagonal bound of the Newton matrix, for the regularization shift.
  double diag_bound = 0.0;
  for (Index i = 0; i < m; ++i) {
    diag_bound = std::max(diag_bound, ip.ck() * std::pow(p.A().row(i).norm(), 2));
  }
  for (Index i = 0; i < mw; ++i) {
    diag_bound = std::max(diag_bound, 1.0 + ip.ck() * std::pow(p.F().row(i).norm(), 2));
  }
  const double shift = 1e-12 * (1.0 + diag_bound);
  double lipschitz = -1.0;

  int iter = 0;
  int cg_total = 0;
  bool stagnated = false;
  const double eps = std::numeric_limits<double>::epsilon();

  // Armijo acceptance along a projected path; near the rounding floor a
  // step is also accepted if it strictly improves stationarity.
  auto accept = [&](const InnerEvaluation& trial, double predicted) {
    const double diff = trial.value - ev.value;
    if (predicted < 0.0 && diff <= opt.armijo_slope * predicted) return true;
    if (std::abs(diff) <= 10.0 * eps * (1.0 + std::abs(ev.value))) {
      return stationarity_distance(ip, trial) < stat;
    }
    return false;
  };
  auto predicted_change = [&](const Vector& yt, const Vector& wt) {
    return ev.grad_y.dot(yt - ev.y) + ev.grad_w.dot(wt - ev.w);
  };

  while (stat > opt.tol && iter < opt.max_iter) {
    ++iter;
    // ε-active inequality rows are held at zero.
    const double eps_active = std::min(1e-3, stat);
    std::vector<bool> active(static_cast<std::size_t>(m), false);
    for (Index i = 0; i < m; ++i) {
      active[static_cast<std::size_t>(i)] =
          cone.is_inequality(i) && ev.y[i] <= eps_active && ev.grad_y[i] > 0.0;
    }
    auto mask = [&](Vector v) {
      for (Index i = 0; i < m; ++i) {
        if (active[static_cast<std::size_t>(i)]) v[i] = 0.0;
      }
      return v;
    };

    const NewtonOperator hess(ip, ev);
    auto op = [&](const Vector& v) {
      Vector dy = mask(v.head(m));
      const Vector dw = v.tail(mw);
      auto [hy, hw] = hess.apply(dy, dw);
      Vector out(m + mw);
      out.head(m) = mask(hy) + shift * dy;
      out.tail(mw) = hw + shift * dw;
      return out;
    };
    Vector rhs(m + mw);
    rhs.head(m) = -mask(ev.grad_y);
    rhs.tail(mw) = -ev.grad_w;
    const double rtol = std::min(0.5, std::sqrt(stat));
    const CgResult cg = conjugate_gradient(op, rhs, rtol, std::max<int>(50, 2 * int(m + mw)));
    cg_total += cg.iterations;

    bool moved = false;
    const Vector dir_y = mask(cg.x.head(m));
    const Vector dir_w = cg.x.tail(mw);
    const double slope = -rhs.dot(cg.x);
    if (cg.x.allFinite() && slope < 0.0) {
      for (double alpha = 1.0; alpha >= 1e-10; alpha *= opt.backtrack) {
        const Vector yt = project_cone_Q(cone, ev.y + alpha * dir_y);
        const Vector wt = ev.w + alpha * dir_w;
        InnerEvaluation trial = evaluate_inner(ip, yt, wt);
        detail::ensure_finite(trial, iter);
        if (accept(trial, predicted_change(yt, wt))) {
          ev = std::move(trial);
          moved = true;
          break;
        }
      }
    }
    if (!moved) {
      // Projected gradient with steps starting at 1/L.
      if (lipschitz < 0.0) lipschitz = detail::gradient_lipschitz(ip);
      for (double alpha = 1.0 / lipschitz; alpha >= 1e-20 / lipschitz;
           alpha *= opt.backtrack) {
        const Vector yt = project_cone_Q(cone, ev.y - alpha * ev.grad_y);
        const Vector wt = ev.w - alpha * ev.grad_w;
        InnerEvaluation trial = evaluate_inner(ip, yt, wt);
        detail::ensure_finite(trial, iter);
        if (accept(trial, predicted_change(yt, wt))) {
          ev = std::move(trial);
          moved = true;
          break;
        }
      }
    }
    if (!moved) {
      stagnated = true;
      break;
    }
    stat = stationarity_distance(ip, ev);
  }

  InnerResult r = make_inner_result(ip, std::move(ev));
  r.iterations = iter;
  r.cg_iterations = cg_total;
  r.converged = r.grad_norm_Q <= opt.tol;
  r.stagnated = stagnated;
  return r;
}

inline InnerResult solve_inner(const InnerProblem& ip, const Vector& y0, const Vector& w0,
                               double tol, int max_iter) {
  InnerOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  return solve_inner(ip, y0, w0, opt);
}

/// ζ(y₁, w₁) − ζ(y₂, w₂), assembled from differences so that nearby points do
/// not lose accuracy to cancellation.
inline double reduced_objective_difference(const InnerProblem& ip, const InnerEvaluation& a,
                                           const InnerEvaluation& b) {
  const SdpProblem& p = ip.prob();
  const Vector dy = a.y - b.y;
  const Vector dw = a.w - b.w;
  const double conj = 0.5 * dw.dot(a.w + b.w) - p.d().dot(dw);
  const double quad = 0.5 * ip.ck() * inner(a.proj - b.proj, a.proj + b.proj);
  return -p.b().dot(dy) + conj + quad;
}

/// fₖ(X) = −h(FX) − <C, X> − ‖X − Xᵏ‖²/(2cₖ).
inline double proximal_primal_value(const InnerProblem& ip, const SymMat& x) {
  const SdpProblem& p = ip.prob();
  double v = -inner(p.C(), x);
  if (p.num_ls_rows() > 0) v -= p.h(p.F().apply(x));
  const double dist = (x - ip.Xk()).norm();
  return v - dist * dist / (2.0 * ip.ck());
}

/// ∇fₖ(X) = −F*(FX − d) − C − (X − Xᵏ)/cₖ.
inline SymMat proximal_primal_gradient(const InnerProblem& ip, const SymMat& x) {
  const SdpProblem& p = ip.prob();
  SymMat g = -p.C() - (1.0 / ip.ck()) * (x - ip.Xk());
  if (p.num_ls_rows() > 0) g -= p.F().adjoint(p.F().apply(x) - p.d());
  return g;
}

/// ζₖ(z) − fₖ(Xnext) at an inner result, via the identity
/// <A Xnext − b, y> + ½‖F Xnext − d + w‖² (exact because <S, Xnext> = 0).
inline double primal_dual_gap([[maybe_unused]] const InnerProblem& ip, const InnerResult& r) {
  return r.eval.grad_y.dot(r.y) + 0.5 * r.eval.grad_w.squaredNorm();
}

}  // namespace almsdp
