#pragma once

// Closed-form entropy power bounds, the interval Brunn-Minkowski check, the
// information-constrained additive noise game and the functional form of the
// Brascamp-Lieb type inequality on Gaussian test functions.

#include <cstdint>
#include <limits>
#include <vector>

#include "gausscouple/datum.hpp"
#include "gausscouple/options.hpp"

namespace gausscouple {

struct EntropyPower {
  int n = 1;
  double h = 0.0;
  double N = 0.0;

  // N = exp(2 h / n)
  static EntropyPower from_entropy(int n, double h);
  static EntropyPower from_power(int n, double power);
  static EntropyPower of_gaussian(const PdMatrix& k);
};

// 1 - exp(-2 zeta / n), with the value 1 at zeta = +inf.
double correlation_factor(double zeta, int n);

// N1 + N2 + 2 sqrt((1 - exp(-2 zeta / n)) N1 N2)
double dep_epi_bound(const EntropyPower& n1, const EntropyPower& n2, double zeta);

// Entropy power of Z1 + Z2 for the coupling Z1 = rho S1^{1/2} S2^{-1/2} Z2 + (1 - rho^2)^{1/2} W,
// rho = sqrt(1 - exp(-2 zeta / n)).
double gaussian_coupled_sum_power(const PdMatrix& k1, const PdMatrix& k2, double zeta);

struct BrunnMinkowskiCheck {
  double lhs = 0.0;
  double rhs_upper = 0.0;
  // exp(h(X1 + X2)) maximized over Gaussian-copula couplings of the two uniform laws.
  double copula_lower_bound = 0.0;
  double best_rho = 0.0;
};

BrunnMinkowskiCheck brunn_minkowski_check(double len1, double len2,
                                          const std::vector<double>& rho_grid = {0.5, 0.9, 1.0});

struct GameSpec {
  int n = 1;
  double P = 1.0;
  double N_noise = 1.0;
  double zeta = 0.0;

  void validate() const;
};

// (n/2) log(1 + P/N + 2 sqrt((1 - exp(-2 zeta/n)) P/N)) + zeta
double game_value_gaussian(const GameSpec& spec);

// sup over Gaussian couplings of (X, Z) with I(X; Z) <= zeta of h(X + Z) - h(Z), plus zeta.
double game_payoff(const PdMatrix& signal, const PdMatrix& noise, double zeta, const SolverOptions& opts = {});

struct SaddleReport {
  double saddle_value = 0.0;
  double isotropic_payoff = 0.0;
  double max_signal_payoff = -std::numeric_limits<double>::infinity();
  double min_noise_payoff = std::numeric_limits<double>::infinity();
  // max(0, max_signal_payoff - saddle, saddle - min_noise_payoff)
  double worst_violation = 0.0;
  int trials = 0;
};

// Random signal covariances with trace <= P against isotropic noise, and random
// noise covariances with trace <= N against the isotropic signal.
SaddleReport saddle_deviation_test(const GameSpec& spec, int trials, std::uint64_t seed,
                                   const SolverOptions& opts = {});

// x -> exp(log_scale - x^T A x)
struct FunctionalGaussian {
  PdMatrix quadratic;
  double log_scale = 0.0;

  int domain_dim() const { return quadratic.dim(); }
  double log_integral() const;
  double log_value(const Vector& x) const;
};

struct FunctionalCheck {
  bool majorization_holds = false;
  bool inequality_holds = false;
  // log of prod (int f_i)^{c_i} and of e^{Dg} prod (int g_j)^{d_j}
  double lhs = 0.0;
  double rhs = 0.0;
  // Smallest eigenvalue of blockdiag(c_i A_i^f) - sum_j d_j B_j^T A_j^g B_j.
  double dominance_margin = 0.0;
};

FunctionalCheck verify_functional_gaussian(const Datum& datum, double Dg, const std::vector<FunctionalGaussian>& f,
                                           const std::vector<FunctionalGaussian>& g);

}  // namespace gausscouple
