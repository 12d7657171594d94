#pragma once

// Maximize K -> sum_j d_j log det(B_j K B_j^T) over couplings with fixed
// diagonal blocks, optionally under S-correlation bounds I_S(K) <= nu(S).

#include <map>
#include <vector>

#include "gausscouple/datum.hpp"
#include "gausscouple/options.hpp"

namespace gausscouple {

class CouplingCovariance {
 public:
  CouplingCovariance() = default;
  CouplingCovariance(Decomposition decomposition, SymMatrix matrix);

  const Decomposition& decomposition() const { return decomposition_; }
  const SymMatrix& sym() const { return matrix_; }
  const Matrix& matrix() const { return matrix_.matrix(); }
  Matrix block(int i) const { return decomposition_.block(matrix_.matrix(), i); }
  double min_eigenvalue() const;

 private:
  Decomposition decomposition_;
  SymMatrix matrix_;
};

struct CouplingSolution {
  CouplingCovariance optimizer;
  double value = 0.0;
  std::map<Subset, double> multipliers;
  std::vector<Subset> active_constraints;
  int iterations = 0;
  bool converged = false;
  // Upper bound on (true maximum - value) from the barrier path.
  double suboptimality_bound = 0.0;
  // K* (or some K*_S) is numerically singular: the optimum sits on the boundary.
  bool boundary = false;
  // Objective at successive centering points (non-decreasing).
  std::vector<double> value_trace;
  // Gradient of the optimal value with respect to each marginal K_i.
  std::vector<Matrix> marginal_gradient;
};

// sum_j d_j log det(B_j K B_j^T); SingularPushforward when some pushforward is singular.
double objective_value(const Datum& datum, const Matrix& k);

// sum_j d_j B_j^T (B_j K B_j^T)^{-1} B_j
SymMatrix objective_gradient(const Datum& datum, const Matrix& k);

CouplingSolution max_coupling(const Datum& datum, const std::vector<PdMatrix>& marginals,
                              const ConstraintFunction& nu, const SolverOptions& opts = {});

// Frobenius-nearest matrix in {PSD} cap {diagonal blocks = marginals}, by Dykstra's
// alternating projections.
CouplingCovariance project_feasible(const Decomposition& decomposition, const std::vector<PdMatrix>& marginals,
                                    const SymMatrix& m, int max_iters = 20000);

// Value of the coupling at the independent (block-diagonal) coupling.
double independent_value(const Datum& datum, const std::vector<PdMatrix>& marginals);

}  // namespace gausscouple
