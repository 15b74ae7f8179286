#pragma once

// Problem data for linear and least-squares SDPs in the form
//
//   min  h(FX) + <C, X>   s.t.  b - AX ∈ Q°,  X ⪰ 0,   h(v) = ½‖v - d‖²
//
// together with the dual (minimization form)
//
//   min  -<b, y> + h*(-w)  s.t.  A*y + F*w + S = C,  y ∈ Q, S ⪰ 0.
//
// A LINEAR problem is the special case with an empty F.

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "almsdp/error.hpp"
#include "almsdp/symcone.hpp"

namespace almsdp {

/// Finite stack of symmetric matrices; (AX)_i = <A_i, X>.
class LinearOperator {
 public:
  LinearOperator() = default;
  explicit LinearOperator(Index n) : n_(n) {}

  LinearOperator(Index n, std::vector<SymMat> rows) : n_(n), rows_(std::move(rows)) {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (rows_[i].dim() != n_) {
        std::ostringstream os;
        os << "LinearOperator: row " << i << " has dimension " << rows_[i].dim()
           << ", expected " << n_;
        throw DimensionError(os.str());
      }
      if (!rows_[i].all_finite()) {
        throw ValidationError("LinearOperator: row has non-finite entries");
      }
    }
  }

  Index dim() const { return n_; }
  Index rows() const { return static_cast<Index>(rows_.size()); }
  const SymMat& row(Index i) const { return rows_[static_cast<std::size_t>(i)]; }
  const std::vector<SymMat>& row_list() const { return rows_; }

  Vector apply(const SymMat& x) const {
    if (x.dim() != n_) throw DimensionError("LinearOperator::apply: dimension mismatch");
    Vector out(rows());
    for (Index i = 0; i < rows(); ++i) out[i] = inner(row(i), x);
    return out;
  }

  SymMat adjoint(const Vector& y) const {
    if (y.size() != rows()) {
      throw DimensionError("LinearOperator::adjoint: vector length mismatch");
    }
    Matrix acc = Matrix::Zero(n_, n_);
    for (Index i = 0; i < rows(); ++i) acc += y[i] * row(i).dense();
    return SymMat::from_lower(acc);
  }

  /// m × n(n+1)/2 matrix of svec(A_i) rows; an isometry of 𝕊ⁿ onto its
  /// coordinate image.
  Matrix matricize() const {
    Matrix out(rows(), n_ * (n_ + 1) / 2);
    for (Index i = 0; i < rows(); ++i) out.row(i) = row(i).svec().transpose();
    return out;
  }

  /// Gram matrix AA*, entries <A_i, A_j>.
  Matrix gram() const {
    Matrix g(rows(), rows());
    for (Index i = 0; i < rows(); ++i) {
      for (Index j = 0; j <= i; ++j) {
        g(i, j) = g(j, i) = inner(row(i), row(j));
      }
    }
    return g;
  }

  double max_row_norm() const {
    double out = 0.0;
    for (const auto& r : rows_) out = std::max(out, r.norm());
    return out;
  }

 private:
  Index n_ = 0;
  std::vector<SymMat> rows_;
};

enum class RowKind { Equality, InequalityGE };

/// Q = ℝ^{m_e} × ℝ₊^{m_i}, one tag per constraint row. An INEQUALITY_GE row
/// reads <A_i, X> ≥ b_i.
class ConeSpec {
 public:
  ConeSpec() = default;
  explicit ConeSpec(std::vector<RowKind> kinds) : kinds_(std::move(kinds)) {}

  static ConeSpec all_equality(Index m) {
    return ConeSpec(std::vector<RowKind>(static_cast<std::size_t>(m), RowKind::Equality));
  }
  static ConeSpec all_inequality(Index m) {
    return ConeSpec(
        std::vector<RowKind>(static_cast<std::size_t>(m), RowKind::InequalityGE));
  }

  Index size() const { return static_cast<Index>(kinds_.size()); }
  RowKind kind(Index i) const { return kinds_[static_cast<std::size_t>(i)]; }
  bool is_inequality(Index i) const { return kind(i) == RowKind::InequalityGE; }
  const std::vector<RowKind>& kinds() const { return kinds_; }

  bool equality_only() const {
    for (auto k : kinds_) {
      if (k != RowKind::Equality) return false;
    }
    return true;
  }

  bool contains(const Vector& y) const {
    for (Index i = 0; i < size(); ++i) {
      if (is_inequality(i) && !(y[i] >= 0.0)) return false;
    }
    return true;
  }

 private:
  std::vector<RowKind> kinds_;
};

/// Π_Q: equality components pass through, inequality components are clamped
/// at zero.
inline Vector project_cone_Q(const ConeSpec& cone, const Vector& y) {
  if (y.size() != cone.size()) throw DimensionError("project_cone_Q: length mismatch");
  Vector out = y;
  for (Index i = 0; i < cone.size(); ++i) {
    if (cone.is_inequality(i)) out[i] = std::max(out[i], 0.0);
  }
  return out;
}

enum class ObjectiveKind { Linear, LeastSquares };

/// Immutable problem instance, validated at construction.
class SdpProblem {
 public:
  static SdpProblem linear(SymMat c, LinearOperator a, Vector b, ConeSpec cone,
                           std::optional<SymMat> strictly_feasible = std::nullopt) {
    const Index n = c.dim();
    return SdpProblem(ObjectiveKind::Linear, std::move(c), std::move(a), std::move(b),
                      std::move(cone), LinearOperator(n), Vector(0),
                      std::move(strictly_feasible));
  }

  static SdpProblem least_squares(SymMat c, LinearOperator a, Vector b, ConeSpec cone,
                                  LinearOperator f, Vector d,
                                  std::optional<SymMat> strictly_feasible = std::nullopt) {
    return SdpProblem(ObjectiveKind::LeastSquares, std::move(c), std::move(a), std::move(b),
                      std::move(cone), std::move(f), std::move(d),
                      std::move(strictly_feasible));
  }

  ObjectiveKind objective() const { return kind_; }
  Index dim() const { return c_.dim(); }
  Index num_constraints() const { return a_.rows(); }
  Index num_ls_rows() const { return f_.rows(); }

  const SymMat& C() const { return c_; }
  const LinearOperator& A() const { return a_; }
  const Vector& b() const { return b_; }
  const ConeSpec& cone() const { return cone_; }
  const LinearOperator& F() const { return f_; }
  const Vector& d() const { return d_; }
  const std::optional<SymMat>& strictly_feasible() const { return xhat_; }

  /// h(v) = ½‖v − d‖².
  double h(const Vector& v) const { return 0.5 * (v - d_).squaredNorm(); }
  /// h*(−w) = ½‖w‖² − <d, w>.
  double h_conj_neg(const Vector& w) const { return 0.5 * w.squaredNorm() - d_.dot(w); }

 private:
  SdpProblem(ObjectiveKind kind, SymMat c, LinearOperator a, Vector b, ConeSpec cone,
             LinearOperator f, Vector d, std::optional<SymMat> xhat)
      : kind_(kind),
        c_(std::move(c)),
        a_(std::move(a)),
        b_(std::move(b)),
        cone_(std::move(cone)),
        f_(std::move(f)),
        d_(std::move(d)),
        xhat_(std::move(xhat)) {
    validate();
  }

  void validate() const {
    const Index n = c_.dim();
    if (n <= 0) throw ValidationError("SdpProblem: C must have positive dimension");
    if (!c_.all_finite()) throw ValidationError("SdpProblem: C has non-finite entries");
    if (a_.dim() != n) throw DimensionError("SdpProblem: A acts on the wrong dimension");
    if (b_.size() != a_.rows()) {
      throw DimensionError("SdpProblem: b length does not match the number of rows of A");
    }
    if (!b_.allFinite()) throw ValidationError("SdpProblem: b has non-finite entries");
    if (cone_.size() != a_.rows()) {
      throw DimensionError("SdpProblem: cone tags do not match the number of rows of A");
    }
    if (f_.dim() != n) throw DimensionError("SdpProblem: F acts on the wrong dimension");
    if (d_.size() != f_.rows()) {
      throw DimensionError("SdpProblem: d length does not match the number of rows of F");
    }
    if (kind_ == ObjectiveKind::LeastSquares && f_.rows() == 0) {
      throw ValidationError("SdpProblem: least-squares objective needs at least one F row");
    }
    if (!d_.allFinite()) throw ValidationError("SdpProblem: d has non-finite entries");
    if (xhat_) {
      if (xhat_->dim() != n) {
        throw DimensionError("SdpProblem: strictly feasible point has the wrong dimension");
      }
      if (!(lambda_min(*xhat_) > 0.0)) {
        throw ValidationError("SdpProblem: strictly feasible point is not positive definite");
      }
      const Vector ax = a_.apply(*xhat_);
      for (Index i = 0; i < a_.rows(); ++i) {
        const double slack = 1e-10 * (1.0 + std::abs(b_[i]));
        const bool ok = cone_.is_inequality(i) ? ax[i] >= b_[i] - slack
                                               : std::abs(ax[i] - b_[i]) <= slack;
        if (!ok) {
          std::ostringstream os;
          os << "SdpProblem: strictly feasible point violates constraint " << i
             << " (<A_i, X> = " << ax[i] << ", b_i = " << b_[i] << ")";
          throw ValidationError(os.str());
        }
      }
    }
  }

  ObjectiveKind kind_;
  SymMat c_;
  LinearOperator a_;
  Vector b_;
  ConeSpec cone_;
  LinearOperator f_;
  Vector d_;
  std::optional<SymMat> xhat_;
};

/// Primal-dual point (y, w, S, X); w is empty for LINEAR problems.
struct KktPoint {
  Vector y;
  Vector w;
  SymMat S;
  SymMat X;
};

struct Residuals {
  double primal_infeas = 0.0;  // ‖violation of b − AX ∈ Q°‖
  double dual_infeas = 0.0;    // ‖A*y + F*w + S − C‖
  double comp_X = 0.0;         // ‖S − Π(S − X)‖
  double comp_y = 0.0;         // ‖y − Π_Q(y + b − AX)‖
  double ls_residual = 0.0;    // ‖FX − (d − w)‖
  double kkt_norm = 0.0;
};

inline void check_point(const SdpProblem& prob, const KktPoint& pt) {
  if (pt.y.size() != prob.num_constraints() || pt.w.size() != prob.num_ls_rows() ||
      pt.S.dim() != prob.dim() || pt.X.dim() != prob.dim()) {
    throw DimensionError("KktPoint: dimensions do not match the problem");
  }
}

/// A*y + F*w.
inline SymMat dual_operator(const SdpProblem& prob, const Vector& y, const Vector& w) {
  SymMat out = prob.A().adjoint(y);
  if (prob.num_ls_rows() > 0) out += prob.F().adjoint(w);
  return out;
}

/// Four-block KKT residual of the dual problem, (r₁, r₂, r₃, r₄).
inline Residuals kkt_residual(const SdpProblem& prob, const KktPoint& pt) {
  check_point(prob, pt);
  Residuals r;
  const Vector ax = prob.A().apply(pt.X);
  const Vector r1 = pt.y - project_cone_Q(prob.cone(), pt.y + prob.b() - ax);

  double ls_sq = 0.0;
  if (prob.num_ls_rows() > 0) {
    ls_sq = (prob.F().apply(pt.X) - (prob.d() - pt.w)).squaredNorm();
  }
  const SymMat r3 = pt.S - project_psd(pt.S - pt.X).projected;
  const SymMat r4 = prob.C() - dual_operator(prob, pt.y, pt.w) - pt.S;

  Vector viol = prob.b() - ax;
  for (Index i = 0; i < viol.size(); ++i) {
    if (prob.cone().is_inequality(i)) viol[i] = std::max(viol[i], 0.0);
  }
  r.primal_infeas = viol.norm();
  r.dual_infeas = r4.norm();
  r.comp_X = r3.norm();
  r.comp_y = r1.norm();
  r.ls_residual = std::sqrt(ls_sq);
  r.kkt_norm = std::sqrt(r1.squaredNorm() + ls_sq + r3.norm() * r3.norm() +
                         r4.norm() * r4.norm());
  return r;
}

/// Smallest singular value of the matricized operator above 10⁻⁸·σ_max.
inline double sigma_min_positive(const LinearOperator& a) {
  if (a.rows() == 0 || a.max_row_norm() == 0.0) {
    throw ValidationError("sigma_min_positive: operator is identically zero");
  }
  const Eigen::BDCSVD<Matrix> svd(a.matricize());
  const Vector& s = svd.singularValues();
  const double cutoff = 1e-8 * s.maxCoeff();
  double out = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < s.size(); ++i) {
    if (s[i] > cutoff) out = std::min(out, s[i]);
  }
  return out;
}

inline void require_implementable_setting(const SdpProblem& prob, const char* who) {
  if (!prob.strictly_feasible()) {
    throw ValidationError(std::string(who) + ": problem has no strictly feasible point");
  }
  if (!prob.cone().equality_only()) {
    throw ValidationError(std::string(who) + ": requires equality constraints only");
  }
}

/// μ̄ = σ_min⁻¹(A)·max{λ_min⁻¹(X̂), 1 + λ_min⁻¹(X̂)‖X̂‖}.
inline double mu_bar(const SdpProblem& prob) {
  require_implementable_setting(prob, "mu_bar");
  const SymMat& xhat = *prob.strictly_feasible();
  const double lmin = lambda_min(xhat);
  const double sigma = sigma_min_positive(prob.A());
  return std::max(1.0 / lmin, 1.0 + xhat.norm() / lmin) / sigma;
}

/// λ_max(F*F); zero when F is empty.
inline double lambda_max_FtF(const SdpProblem& prob) {
  if (prob.num_ls_rows() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Matrix>(prob.F().gram(), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

/// ν̄ = 1 + μ̄ + ½λ_max(F*F)μ̄² + ½μ̄².
inline double nu_bar(const SdpProblem& prob) {
  const double mu = mu_bar(prob);
  return 1.0 + mu + 0.5 * lambda_max_FtF(prob) * mu * mu + 0.5 * mu * mu;
}

/// Upper bound μ̄(1 + ‖X‖)‖b − AX‖ on the distance of a PSD X to the
/// feasible set.
inline double feasibility_distance_bound(const SdpProblem& prob, const SymMat& x) {
  if (x.dim() != prob.dim()) {
    throw DimensionError("feasibility_distance_bound: dimension mismatch");
  }
  if (lambda_min(x) < -default_eigtol(x)) {
    throw ValidationError("feasibility_distance_bound: X is not PSD");
  }
  return mu_bar(prob) * (1.0 + x.norm()) * (prob.b() - prob.A().apply(x)).norm();
}

/// <C, X> (+ ½‖FX − d‖² for least squares).
inline double primal_objective(const SdpProblem& prob, const SymMat& x) {
  double v = inner(prob.C(), x);
  if (prob.num_ls_rows() > 0) v += prob.h(prob.F().apply(x));
  return v;
}

/// ϑ(y, w) = −<b, y> + h*(−w).
inline double dual_objective(const SdpProblem& prob, const Vector& y, const Vector& w) {
  if (y.size() != prob.num_constraints() || w.size() != prob.num_ls_rows()) {
    throw DimensionError("dual_objective: dimension mismatch");
  }
  return -prob.b().dot(y) + prob.h_conj_neg(w);
}

inline double dual_objective(const SdpProblem& prob, const KktPoint& pt) {
  return dual_objective(prob, pt.y, pt.w);
}

/// l(z, X) = ϑ(z) + <X, A*y + F*w + S − C>, for z ∈ Q × 𝕎 × 𝕊₊ⁿ.
inline double lagrangian(const SdpProblem& prob, const KktPoint& pt) {
  check_point(prob, pt);
  const SymMat r = dual_operator(prob, pt.y, pt.w) + pt.S - prob.C();
  return dual_objective(prob, pt) + inner(pt.X, r);
}

/// L_c(z, X) = l(z, X) + (c/2)‖A*y + F*w + S − C‖².
inline double augmented_lagrangian(const SdpProblem& prob, const KktPoint& pt, double c) {
  const SymMat r = dual_operator(prob, pt.y, pt.w) + pt.S - prob.C();
  return lagrangian(prob, pt) + 0.5 * c * r.norm() * r.norm();
}

}  // namespace almsdp
