// Solves the trace-constrained problem min <diag(1, 2), X> s.t. tr X = 1.
#include <cstdio>

#include "almsdp/almsdp.hpp"

int main() {
  using namespace almsdp;
  const SdpProblem prob = fixtures::trace_constraint();

  AlmConfig cfg;
  cfg.mode = CriterionMode::Implementable;
  const AlmResult res = alm_run(prob, cfg);

  const SymMat& x = res.state.Xk;
  std::printf("stop: %s after %d outer iterations\n", to_string(res.reason), res.state.k);
  std::printf("X = [[%.6f, %.6f], [%.6f, %.6f]]\n", x(0, 0), x(0, 1), x(1, 0), x(1, 1));
  std::printf("y = %.6f, objective = %.6f\n", res.state.yk[0], primal_objective(prob, x));
  return res.reason == StopReason::KktTolerance ? 0 : 1;
}
