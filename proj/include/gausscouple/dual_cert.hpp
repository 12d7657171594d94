#pragma once

// Fenchel dual of the unconstrained coupling problem:
//   max_K sum_j d_j log det(B_j K B_j^T) + sum_j d_j dim E^j
//     = inf { sum_i <U_i, K_i> - sum_j d_j log det V_j :
//             sum_j d_j B_j^T V_j B_j <= diag(U_1, ..., U_k) }.

#include <vector>

#include "gausscouple/coupling_max.hpp"

namespace gausscouple {

struct DualCertificate {
  // U_i may be singular at the optimum (e.g. a block no map sees), so it is kept symmetric only.
  std::vector<SymMatrix> U;
  std::vector<PdMatrix> V;
  double value = 0.0;
  // diag(U) - sum_j d_j B_j^T V_j B_j
  SymMatrix slack;
  int iterations = 0;
  bool converged = false;
  // Upper bound on (value - optimal dual value) from the barrier path.
  double suboptimality_bound = 0.0;
};

// Value and slack of a given (U, V); does not check feasibility.
DualCertificate make_certificate(const Datum& datum, const std::vector<PdMatrix>& marginals,
                                 std::vector<SymMatrix> u, std::vector<PdMatrix> v);

// U from V by U = blockdiag(R) + s I, R = sum_j d_j B_j^T V_j B_j and
// s = max(0, -lambda_min(blockdiag(R) - R)) + 1e-12. Always feasible.
DualCertificate feasible_certificate(const Datum& datum, const std::vector<PdMatrix>& marginals,
                                     const std::vector<PdMatrix>& v);

DualCertificate solve_dual(const Datum& datum, const std::vector<PdMatrix>& marginals,
                           const SolverOptions& opts = {});

// cert.value - (primal.value + sum_j d_j dim E^j)
double duality_gap(const Datum& datum, const CouplingSolution& primal, const DualCertificate& cert);

// Smallest eigenvalue of the slack relative to the largest diagonal entry of diag(U).
double certificate_violation(const DualCertificate& cert);

}  // namespace gausscouple
