#pragma once

// Small built-in problems with known solution sets.

#include "almsdp/model.hpp"
#include "almsdp/symcone.hpp"

namespace almsdp::fixtures {

inline SymMat sym2(double a11, double a12, double a22) {
  Matrix m(2, 2);
  m << a11, a12, a12, a22;
  return SymMat::from_lower(m);
}

/// min X₂₂ s.t. 2X₁₂ − X₂₂ = 0, X ⪰ 0. Primal solutions {diag(t, 0) : t ≥ 0},
/// unique dual solution y = 0, S = diag(0, 1).
inline SdpProblem example31() {
  return SdpProblem::linear(sym2(0.0, 0.0, 1.0), LinearOperator(2, {sym2(0.0, 1.0, -1.0)}),
                            Vector::Zero(1), ConeSpec::all_equality(1), sym2(5.0, 1.0, 2.0));
}

/// min ½(tr X − 1)² s.t. <A, X> ≤ 1, X ⪰ 0 with A = [[1, −2], [−2, 1]], written
/// as the row <−A, X> ≥ −1. Unique dual solution (0, 0, 0).
inline SdpProblem example32() {
  return SdpProblem::least_squares(SymMat(2), LinearOperator(2, {sym2(-1.0, 2.0, -1.0)}),
                                   Vector::Constant(1, -1.0), ConeSpec::all_inequality(1),
                                   LinearOperator(2, {SymMat::identity(2)}), Vector::Ones(1));
}

/// min <diag(1, 2), X> s.t. tr X = 1, X ⪰ 0, with X̂ = I/2.
inline SdpProblem trace_constraint() {
  return SdpProblem::linear(sym2(1.0, 0.0, 2.0), LinearOperator(2, {SymMat::identity(2)}),
                            Vector::Ones(1), ConeSpec::all_equality(1),
                            0.5 * SymMat::identity(2));
}

}  // namespace almsdp::fixtures
