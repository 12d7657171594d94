#pragma once

// Brute-force and quadrature oracles for small instances.

#include <functional>
#include <string>
#include <vector>

#include "gausscouple/pd_core.hpp"

namespace gausscouple {

double normal_cdf(double z);
// Phi^{-1}(p), accurate in both tails.
double normal_quantile(double p);

// A one-dimensional law restricted to the window [lo, hi]. pdf/cdf describe the
// untruncated law; the truncated law is renormalized by mass().
// to_normal / from_normal are the monotone maps x -> Phi^{-1}(F(x)) and
// z -> F^{-1}(Phi(z)), written to stay accurate in the tails.
struct Density1D {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool compact = true;
  std::function<double(double)> pdf;
  std::function<double(double)> cdf;
  std::function<double(double)> to_normal;
  std::function<double(double)> from_normal;

  double mass() const { return cdf(hi) - cdf(lo); }
  double truncated_pdf(double x) const;
  // from_normal clamped to the window.
  double transform(double z) const;
  // Same law with the window extended by `fraction` of its width (split on both sides).
  Density1D widened(double fraction) const;

  static Density1D uniform(double a, double b);
  // N(mean, sigma^2) truncated at mean +- 10 sigma.
  static Density1D gaussian(double sigma, double mean = 0.0);
  // Laplace(mean, scale) truncated where the density drops below 1e-12 of its peak.
  static Density1D laplace(double scale, double mean = 0.0);
};

struct CopulaCoupling {
  // Gaussian-copula correlation, in [-1, 1] (rho = 1 is the comonotone coupling).
  double rho = 0.0;
};

struct QuadratureOptions {
  int initial_points = 4096;
  int max_points = 1 << 16;
  double tol = 1e-7;
  // Allowed entropy change when the window of a non-compact law is widened by 50%.
  double tail_tol = 1e-6;
};

// max d log(b1^2 K1 + b2^2 K2 + 2 b1 b2 c) over a uniform grid of `grid` points
// c in [-sqrt(K1 K2), sqrt(K1 K2)] with -1/2 log(1 - c^2 / (K1 K2)) <= nu12.
double grid_max_coupling_2x2(double k1, double k2, double b1, double b2, double nu12, int grid, double d = 1.0);

// -int p log p by the composite trapezoid rule, doubling the grid until the change is below tol.
double entropy_quadrature(const Density1D& p, const QuadratureOptions& opts = {});

// Entropy of X1 + X2 when (X1, X2) has marginals p1, p2 and a Gaussian copula.
// The CDF of the sum is computed by conditioning on the innovation of the copula
// and inverting the (monotone) conditional sum map; the entropy comes from the
// cell probabilities of that CDF. Grids are doubled until the change is below opts.tol.
struct SumEntropyOptions {
  int score_points = 4096;
  int mixture_points = 64;
  int sum_points = 4096;
  int max_doublings = 4;
  double tol = 1e-7;
};
double coupled_sum_entropy(const Density1D& p1, const Density1D& p2, const CopulaCoupling& coupling,
                           const SumEntropyOptions& opts = {});

// Mutual information of the copula coupling by 2-D trapezoid quadrature in x-space.
double copula_mutual_information(const Density1D& p1, const Density1D& p2, const CopulaCoupling& coupling,
                                 int points = 4096);

enum class SpotStatus { pass, inconclusive };

struct SpotCheck {
  double lhs_lower_bound = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  double best_rho = 0.0;
  double rho_bar = 0.0;
  SpotStatus status = SpotStatus::pass;
};

// Lower bound on max h(X1 + X2) over copula couplings with I(X1; X2) <= zeta,
// against the Gaussian comparison value. The grid covers rho in [0, rho_bar].
SpotCheck comparison_spot_check(const Density1D& p1, const Density1D& p2, double zeta, int rho_grid,
                                double pass_tol = 1e-3, const SumEntropyOptions& opts = {});

// Central differences in each symmetric coordinate pair; gradient in the trace inner product.
SymMatrix finite_difference_gradient(const std::function<double(const SymMatrix&)>& f, const SymMatrix& at,
                                     double h);

}  // namespace gausscouple
