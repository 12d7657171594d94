#pragma once

// Forward-reverse Brascamp-Lieb constants over Gaussian inputs:
//   F(c, (K_i)) = max_{K in Pi(K_1..K_k; nu)} sum_j d_j log det(B_j K B_j^T) - sum_i c_i log det K_i,
//   D_g(c, d, B; nu) = -1/2 inf_{(K_i)} F.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gausscouple/coupling_max.hpp"

namespace gausscouple {

enum class ConstantStatus { finite, infinite, extremal_not_attained };

const char* to_string(ConstantStatus s);

struct FEvaluation {
  double value = 0.0;
  double coupling_value = 0.0;
  // Gradient in the trace inner product, per block: dF = sum_i <G_i, dK_i>.
  std::vector<Matrix> gradient;
  // K_i G_i K_i, the gradient for the affine-invariant metric.
  std::vector<Matrix> riemannian_gradient;
  double suboptimality_bound = 0.0;
  bool converged = true;
};

double evaluate_F(const Datum& datum, const std::vector<double>& c, const std::vector<PdMatrix>& marginals,
                  const ConstraintFunction& nu = {}, const SolverOptions& opts = {});

FEvaluation evaluate_F_full(const Datum& datum, const std::vector<double>& c, const std::vector<PdMatrix>& marginals,
                            const ConstraintFunction& nu = {}, const SolverOptions& opts = {});

struct ConstantReport {
  ConstantStatus status = ConstantStatus::finite;
  // D_g; +inf when status is infinite.
  double value = 0.0;
  // inf F = -2 D_g
  double inner_value = 0.0;
  // Exponents c the constant refers to (for best_constant: c* on the normalized simplex).
  std::vector<double> c;
  // Near-infimizing K_i, scaled jointly so that sum_i log det K_i = 0.
  std::vector<PdMatrix> witnesses;
  // Estimated error of inner_value: inner solver bound plus squared final gradient norm.
  double certificate_gap = 0.0;
  double gradient_norm = 0.0;
  // Product delta_2 distance of the final iterate from the starting point.
  double drift_distance = 0.0;
  int iterations = 0;
  std::string reason;
  bool scaling = true;
  std::optional<DimensionCheck> dimension;
  // Whitened descent direction at the stopping point (set when status is infinite by divergence).
  std::vector<Matrix> diverging_direction;

  // best_constant only. d is rescaled by d_scale so that sum_j d_j dim E^j = 1; the
  // minimax sides refer to the rescaled datum, `value` to the original one.
  double d_scale = 1.0;
  double minimax_lhs = std::numeric_limits<double>::quiet_NaN();
  double minimax_rhs = std::numeric_limits<double>::quiet_NaN();
  double minimax_residual = std::numeric_limits<double>::quiet_NaN();
};

ConstantReport compute_Dg(const Datum& datum, const std::vector<double>& c, const ConstraintFunction& nu = {},
                          const SolverOptions& opts = {});

ConstantReport best_constant(const Datum& datum, const SolverOptions& opts = {});

struct ComparisonResult {
  std::vector<PdMatrix> Z_covariances;
  std::vector<double> entropies;
  // max over nu-constrained Gaussian couplings Z of sum_j d_j h(B_j Z), at the returned Z_i.
  double lhs_reference = 0.0;
  ConstantStatus status = ConstantStatus::finite;
  double gradient_norm = 0.0;
  int iterations = 0;
};

ComparisonResult comparison_gaussians(const Datum& datum, const std::vector<double>& entropies,
                                      const ConstraintFunction& nu = {}, const SolverOptions& opts = {});

// inf over det K_i = 1 of the unconstrained coupling maximum (right-hand side of the minimax identity).
ConstantReport minimax_rhs(const Datum& datum, const SolverOptions& opts = {});

}  // namespace gausscouple
