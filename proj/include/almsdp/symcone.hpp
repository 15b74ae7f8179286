#pragma once

// Dense symmetric-matrix kernel: eigendecomposition, projection onto the
// positive semidefinite cone, its generalized derivative, pseudo-inverses and
// normal-cone projections.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "almsdp/error.hpp"

namespace almsdp {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense real symmetric matrix. Symmetry is exact: every constructor mirrors
/// one triangle, and the arithmetic below is closed on exactly symmetric
/// storage.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(Index n) : m_(Matrix::Zero(n, n)) {}

  /// Builds from the lower triangle of a square matrix; the upper triangle
  /// of `a` is ignored.
  static SymMat from_lower(const Matrix& a) {
    if (a.rows() != a.cols()) {
      throw DimensionError("SymMat::from_lower: matrix is not square");
    }
    SymMat s;
    s.m_ = a.selfadjointView<Eigen::Lower>();
    return s;
  }

  /// Builds (a + aᵀ)/2.
  static SymMat symmetrized(const Matrix& a) {
    if (a.rows() != a.cols()) {
      throw DimensionError("SymMat::symmetrized: matrix is not square");
    }
    return from_lower(0.5 * (a + a.transpose()));
  }

  static SymMat identity(Index n) {
    SymMat s(n);
    s.m_.setIdentity();
    return s;
  }

  static SymMat diagonal(const Vector& d) {
    SymMat s(d.size());
    s.m_.diagonal() = d;
    return s;
  }

  /// Inverse of svec(): coordinates in the isometric basis (off-diagonal
  /// entries scaled by √2), column-major lower triangle.
  static SymMat from_svec(const Vector& v, Index n) {
    if (v.size() != n * (n + 1) / 2) {
      throw DimensionError("SymMat::from_svec: length does not match n(n+1)/2");
    }
    SymMat s(n);
    Index p = 0;
    for (Index j = 0; j < n; ++j) {
      for (Index i = j; i < n; ++i, ++p) {
        const double x = (i == j) ? v[p] : v[p] / std::sqrt(2.0);
        s.m_(i, j) = x;
        s.m_(j, i) = x;
      }
    }
    return s;
  }

  Index dim() const { return m_.rows(); }
  double operator()(Index i, Index j) const { return m_(i, j); }
  const Matrix& dense() const { return m_; }

  double norm() const { return m_.norm(); }
  bool all_finite() const { return m_.allFinite(); }

  Vector svec() const {
    const Index n = dim();
    Vector v(n * (n + 1) / 2);
    Index p = 0;
    for (Index j = 0; j < n; ++j) {
      for (Index i = j; i < n; ++i, ++p) {
        v[p] = (i == j) ? m_(i, j) : std::sqrt(2.0) * m_(i, j);
      }
    }
    return v;
  }

  SymMat& operator+=(const SymMat& o) {
    check_same(o);
    m_ += o.m_;
    return *this;
  }
  SymMat& operator-=(const SymMat& o) {
    check_same(o);
    m_ -= o.m_;
    return *this;
  }
  SymMat& operator*=(double a) {
    m_ *= a;
    return *this;
  }

  friend SymMat operator+(SymMat a, const SymMat& b) { return a += b; }
  friend SymMat operator-(SymMat a, const SymMat& b) { return a -= b; }
  friend SymMat operator*(double a, SymMat b) { return b *= a; }
  friend SymMat operator*(SymMat b, double a) { return b *= a; }
  friend SymMat operator-(SymMat a) { return a *= -1.0; }

 private:
  void check_same(const SymMat& o) const {
    if (o.dim() != dim()) {
      throw DimensionError("SymMat: dimension mismatch");
    }
  }

  Matrix m_;
};

/// Trace inner product ⟨a, b⟩.
inline double inner(const SymMat& a, const SymMat& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("inner: dimension mismatch");
  }
  return a.dense().cwiseProduct(b.dense()).sum();
}

/// Eigenvalues sorted non-increasing, eigenvectors in matching columns.
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  Index dim() const { return eigenvalues.size(); }

  /// Q·diag(values)·Qᵀ for a replacement spectrum.
  SymMat compose(const Vector& values) const {
    const Matrix scaled = eigenvectors * values.asDiagonal();
    return SymMat::from_lower(scaled * eigenvectors.transpose());
  }

  SymMat reconstruct() const { return compose(eigenvalues); }
};

/// Default relative eigenvalue tolerance 10⁻⁸·max(1, ‖M‖_F).
inline double default_eigtol(double frobenius_norm) {
  return 1e-8 * std::max(1.0, frobenius_norm);
}
inline double default_eigtol(const SymMat& m) { return default_eigtol(m.norm()); }
inline double default_eigtol(const EigenDecomposition& d) {
  return default_eigtol(d.eigenvalues.norm());
}

/// Symmetric eigensolve. Columns are sign-normalized so that the entry of
/// largest magnitude (lowest index among near-ties) is positive.
inline EigenDecomposition eig_sym(const SymMat& m) {
  if (!m.all_finite()) {
    throw NumericalError("eig_sym: input has non-finite entries");
  }
  const Index n = m.dim();
  EigenDecomposition out;
  if (n == 0) {
    out.eigenvalues.resize(0);
    out.eigenvectors.resize(0, 0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.dense());
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eig_sym: eigensolver did not converge (n = " << n
       << ", ‖M‖_F = " << m.norm() << ")";
    throw NumericalError(os.str());
  }
  // Eigen sorts ascending.
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  for (Index j = 0; j < n; ++j) {
    auto col = out.eigenvectors.col(j);
    const double largest = col.cwiseAbs().maxCoeff();
    Index pivot = 0;
    while (std::abs(col[pivot]) < largest * (1.0 - 1e-10)) ++pivot;
    if (col[pivot] < 0.0) col *= -1.0;
  }
  return out;
}

inline double lambda_min(const SymMat& m) {
  if (m.dim() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Matrix>(m.dense(), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

inline double lambda_max(const SymMat& m) {
  if (m.dim() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Matrix>(m.dense(), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

struct PsdProjection {
  SymMat projected;
  EigenDecomposition decomposition;
};

/// Π onto the PSD cone from an existing decomposition.
inline SymMat positive_part(const EigenDecomposition& d) {
  return d.compose(d.eigenvalues.cwiseMax(0.0));
}

/// Π onto the PSD cone; the decomposition is returned for reuse.
inline PsdProjection project_psd(const SymMat& m) {
  PsdProjection out{SymMat(), eig_sym(m)};
  out.projected = positive_part(out.decomposition);
  return out;
}

/// Generalized (Clarke) derivative of the PSD projection at W = QΛQᵀ,
/// H ↦ Q(Ω ∘ QᵀHQ)Qᵀ. Ω is assembled once so repeated applications (inside
/// conjugate gradients) cost two n×n products each way.
class PsdProjectionDerivative {
 public:
  PsdProjectionDerivative() = default;

  PsdProjectionDerivative(const EigenDecomposition& d, double eigtol)
      : q_(d.eigenvectors), omega_(d.dim(), d.dim()) {
    const Vector& lam = d.eigenvalues;
    const Index n = d.dim();
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        const double denom = std::abs(lam[i]) + std::abs(lam[j]);
        if (denom <= eigtol) {
          // 0/0 entries: identity on the nonnegative side, zero otherwise.
          omega_(i, j) = (lam[i] >= 0.0 && lam[j] >= 0.0) ? 1.0 : 0.0;
        } else {
          omega_(i, j) = (std::max(lam[i], 0.0) + std::max(lam[j], 0.0)) / denom;
        }
      }
    }
  }

  explicit PsdProjectionDerivative(const EigenDecomposition& d)
      : PsdProjectionDerivative(d, default_eigtol(d)) {}

  SymMat apply(const SymMat& h) const {
    if (h.dim() != q_.rows()) {
      throw DimensionError("PsdProjectionDerivative::apply: dimension mismatch");
    }
    const Matrix rotated = q_.transpose() * h.dense() * q_;
    return SymMat::from_lower(q_ * omega_.cwiseProduct(rotated) * q_.transpose());
  }

  const Matrix& omega() const { return omega_; }

 private:
  Matrix q_;
  Matrix omega_;
};

inline SymMat project_psd_dderiv(const EigenDecomposition& d, const SymMat& h,
                                 double eigtol) {
  return PsdProjectionDerivative(d, eigtol).apply(h);
}

inline SymMat project_psd_dderiv(const EigenDecomposition& d, const SymMat& h) {
  return PsdProjectionDerivative(d).apply(h);
}

/// Eigen-index sets by sign relative to a tolerance (0-based indices).
struct IndexPartition {
  std::vector<Index> alpha;  // λ > eigtol
  std::vector<Index> beta;   // |λ| ≤ eigtol
  std::vector<Index> gamma;  // λ < −eigtol
};

inline IndexPartition partition_eigs(const EigenDecomposition& d, double eigtol) {
  if (!(eigtol > 0.0)) {
    throw ValidationError("partition_eigs: eigtol must be positive");
  }
  IndexPartition p;
  for (Index i = 0; i < d.dim(); ++i) {
    const double l = d.eigenvalues[i];
    if (l > eigtol) {
      p.alpha.push_back(i);
    } else if (l < -eigtol) {
      p.gamma.push_back(i);
    } else {
      p.beta.push_back(i);
    }
  }
  return p;
}

/// Moore-Penrose pseudo-inverse of a PSD matrix. Eigenvalues above eigtol are
/// inverted, the rest zeroed.
inline SymMat pinv_psd(const SymMat& m, double eigtol) {
  const EigenDecomposition d = eig_sym(m);
  if (d.dim() > 0 && d.eigenvalues.minCoeff() < -std::sqrt(eigtol)) {
    std::ostringstream os;
    os << "pinv_psd: input is not PSD (λ_min = " << d.eigenvalues.minCoeff() << ")";
    throw ValidationError(os.str());
  }
  Vector inv(d.dim());
  for (Index i = 0; i < d.dim(); ++i) {
    inv[i] = d.eigenvalues[i] > eigtol ? 1.0 / d.eigenvalues[i] : 0.0;
  }
  return d.compose(inv);
}

/// Projection of H onto the normal cone of the PSD cone at a PSD point X̄:
/// in X̄'s eigenbasis the rows/columns of the positive eigenvalues are zeroed
/// and the remaining block is projected onto the negative semidefinite cone.
inline SymMat project_normal_cone_psd(const SymMat& xbar, const SymMat& h, double eigtol) {
  if (xbar.dim() != h.dim()) {
    throw DimensionError("project_normal_cone_psd: dimension mismatch");
  }
  const EigenDecomposition d = eig_sym(xbar);
  const IndexPartition part = partition_eigs(d, eigtol);
  std::vector<Index> rest = part.beta;
  rest.insert(rest.end(), part.gamma.begin(), part.gamma.end());
  const Index r = static_cast<Index>(rest.size());
  const Index n = xbar.dim();
  if (r == 0) return SymMat(n);

  Matrix basis(n, r);
  for (Index k = 0; k < r; ++k) basis.col(k) = d.eigenvectors.col(rest[k]);
  const SymMat block = SymMat::from_lower(basis.transpose() * h.dense() * basis);
  // Π onto the NSD cone is −Π_{PSD}(−·).
  const SymMat nsd = -project_psd(-block).projected;
  return SymMat::from_lower(basis * nsd.dense() * basis.transpose());
}

}  // namespace almsdp
