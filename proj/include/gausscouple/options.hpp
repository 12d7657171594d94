#pragma once

#include <cstdint>

namespace gausscouple {

struct SolverOptions {
  // Target accuracy of objective values (coupling maximum, inner problems).
  double tol = 1e-8;
  // Target duality gap of the dual solver.
  double gap_tol = 1e-9;
  // Newton steps for barrier solvers, descent steps for the frbl descent.
  int max_iters = 10000;
  int max_proj_iters = 20000;
  double divergence_radius = 50.0;
  // Outer iterations over the simplex in best_constant.
  int outer_iters = 200;
  // Random tuples for the dimension condition.
  int dimension_trials = 16;
  std::uint64_t seed = 0;
};

}  // namespace gausscouple
