#include "gausscouple/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gausscouple/coupling_max.hpp"
#include "gausscouple/oracles.hpp"

namespace gausscouple {

EntropyPower EntropyPower::from_entropy(int n, double h) {
  if (n < 1) throw DimensionMismatch("EntropyPower: dimension must be positive");
  if (!std::isfinite(h)) throw SchemaError("EntropyPower: entropy must be finite");
  return {n, h, std::exp(2.0 * h / n)};
}

EntropyPower EntropyPower::from_power(int n, double power) {
  if (n < 1) throw DimensionMismatch("EntropyPower: dimension must be positive");
  if (!(power > 0.0) || !std::isfinite(power)) throw SchemaError("EntropyPower: power must be positive");
  return {n, 0.5 * n * std::log(power), power};
}

EntropyPower EntropyPower::of_gaussian(const PdMatrix& k) {
  return from_entropy(k.dim(), gaussian_entropy(k.dim(), log_det(k)));
}

double correlation_factor(double zeta, int n) {
  if (!(zeta >= 0.0)) throw SchemaError("zeta must be nonnegative");
  if (std::isinf(zeta)) return 1.0;
  return -std::expm1(-2.0 * zeta / n);
}

double dep_epi_bound(const EntropyPower& n1, const EntropyPower& n2, double zeta) {
  if (n1.n != n2.n) throw DimensionMismatch("dep_epi_bound: dimensions differ");
  return n1.N + n2.N + 2.0 * std::sqrt(correlation_factor(zeta, n1.n) * n1.N * n2.N);
}

double gaussian_coupled_sum_power(const PdMatrix& k1, const PdMatrix& k2, double zeta) {
  if (k1.dim() != k2.dim()) throw DimensionMismatch("gaussian_coupled_sum_power: dimensions differ");
  const int n = k1.dim();
  const double rho = std::sqrt(correlation_factor(zeta, n));
  const Matrix r1 = sqrt_pd(k1).matrix();
  const Matrix r2 = sqrt_pd(k2).matrix();
  const PdMatrix sum(SymMatrix(Matrix(k1.matrix() + k2.matrix() + rho * (r1 * r2 + r2 * r1))));
  return 2.0 * std::numbers::pi * std::numbers::e * std::exp(log_det(sum) / n);
}

BrunnMinkowskiCheck brunn_minkowski_check(double len1, double len2, const std::vector<double>& rho_grid) {
  if (!(len1 > 0.0) || !(len2 > 0.0)) throw SchemaError("brunn_minkowski_check: lengths must be positive");
  BrunnMinkowskiCheck out;
  out.lhs = len1 + len2;
  out.rhs_upper = len1 + len2;
  const Density1D p1 = Density1D::uniform(0.0, len1);
  const Density1D p2 = Density1D::uniform(0.0, len2);
  for (double rho : rho_grid) {
    const double h = coupled_sum_entropy(p1, p2, CopulaCoupling{rho});
    if (std::exp(h) > out.copula_lower_bound) {
      out.copula_lower_bound = std::exp(h);
      out.best_rho = rho;
    }
  }
  return out;
}

void GameSpec::validate() const {
  if (n < 1) throw SchemaError("GameSpec: n must be positive");
  if (!(P > 0.0) || !(N_noise > 0.0)) throw SchemaError("GameSpec: power budgets must be positive");
  if (!(zeta >= 0.0)) throw SchemaError("GameSpec: zeta must be nonnegative");
}

double game_value_gaussian(const GameSpec& spec) {
  spec.validate();
  if (std::isinf(spec.zeta)) return spec.zeta;
  const double snr = spec.P / spec.N_noise;
  const double f = correlation_factor(spec.zeta, spec.n);
  return 0.5 * spec.n * std::log1p(snr + 2.0 * std::sqrt(f * snr)) + spec.zeta;
}

double game_payoff(const PdMatrix& signal, const PdMatrix& noise, double zeta, const SolverOptions& opts) {
  if (signal.dim() != noise.dim()) throw DimensionMismatch("game_payoff: dimensions differ");
  if (!(zeta >= 0.0)) throw SchemaError("game_payoff: zeta must be nonnegative");
  if (std::isinf(zeta)) return zeta;
  const int n = signal.dim();
  Matrix b(n, 2 * n);
  b << Matrix::Identity(n, n), Matrix::Identity(n, n);
  const Datum datum(Decomposition({n, n}), {0.0, 0.0}, {1.0}, {b});
  const CouplingSolution sol = max_coupling(datum, {signal, noise}, ConstraintFunction::pair(zeta), opts);
  return 0.5 * (sol.value - log_det(noise)) + zeta;
}

namespace {

// Random PD matrix with trace exactly `trace`.
PdMatrix random_strategy(std::mt19937_64& rng, int n, double trace) {
  std::normal_distribution<double> gauss;
  Matrix g(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) g(r, c) = gauss(rng);
  Matrix k = g * g.transpose() + 0.05 * Matrix::Identity(n, n);
  k *= trace / k.trace();
  return PdMatrix(SymMatrix(k));
}

}  // namespace

SaddleReport saddle_deviation_test(const GameSpec& spec, int trials, std::uint64_t seed, const SolverOptions& opts) {
  spec.validate();
  if (trials < 1) throw SchemaError("saddle_deviation_test: trials must be positive");
  const int n = spec.n;
  const PdMatrix iso_signal(Matrix(spec.P / n * Matrix::Identity(n, n)));
  const PdMatrix iso_noise(Matrix(spec.N_noise / n * Matrix::Identity(n, n)));
  SaddleReport out;
  out.trials = trials;
  out.saddle_value = game_value_gaussian(spec);
  out.isotropic_payoff = game_payoff(iso_signal, iso_noise, spec.zeta, opts);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> budget(0.5, 1.0);
  for (int t = 0; t < trials; ++t) {
    const double fraction = t == 0 ? 1.0 : budget(rng);
    const PdMatrix s = random_strategy(rng, n, fraction * spec.P);
    out.max_signal_payoff = std::max(out.max_signal_payoff, game_payoff(s, iso_noise, spec.zeta, opts));
    const PdMatrix z = random_strategy(rng, n, (t == 0 ? 1.0 : budget(rng)) * spec.N_noise);
    out.min_noise_payoff = std::min(out.min_noise_payoff, game_payoff(iso_signal, z, spec.zeta, opts));
  }
  out.worst_violation = std::max({0.0, out.max_signal_payoff - out.saddle_value,
                                  out.saddle_value - out.min_noise_payoff,
                                  std::abs(out.isotropic_payoff - out.saddle_value)});
  return out;
}

double FunctionalGaussian::log_integral() const {
  return log_scale + 0.5 * domain_dim() * std::log(std::numbers::pi) - 0.5 * log_det(quadratic);
}

double FunctionalGaussian::log_value(const Vector& x) const {
  return log_scale - x.dot(quadratic.matrix() * x);
}

FunctionalCheck verify_functional_gaussian(const Datum& datum, double Dg, const std::vector<FunctionalGaussian>& f,
                                           const std::vector<FunctionalGaussian>& g) {
  const Decomposition& dec = datum.decomposition();
  if (static_cast<int>(f.size()) != dec.k() || static_cast<int>(g.size()) != datum.m())
    throw DimensionMismatch("verify_functional_gaussian: wrong number of functions");
  Matrix dominance = Matrix::Zero(dec.total(), dec.total());
  double scale_gap = 0.0;
  FunctionalCheck out;
  for (int i = 0; i < dec.k(); ++i) {
    if (f[i].domain_dim() != dec.dim(i)) throw DimensionMismatch("verify_functional_gaussian: f has the wrong dimension");
    const int o = dec.offset(i);
    dominance.block(o, o, dec.dim(i), dec.dim(i)) += datum.c()[i] * f[i].quadratic.matrix();
    scale_gap -= datum.c()[i] * f[i].log_scale;
    out.lhs += datum.c()[i] * f[i].log_integral();
  }
  out.rhs = Dg;
  for (int j = 0; j < datum.m(); ++j) {
    const Matrix& b = datum.map(j);
    if (g[j].domain_dim() != b.rows()) throw DimensionMismatch("verify_functional_gaussian: g has the wrong dimension");
    dominance -= datum.d()[j] * b.transpose() * g[j].quadratic.matrix() * b;
    scale_gap += datum.d()[j] * g[j].log_scale;
    out.rhs += datum.d()[j] * g[j].log_integral();
  }
  out.dominance_margin = min_eigenvalue(SymMatrix(dominance));
  out.majorization_holds = scale_gap >= -1e-12 && out.dominance_margin >= -1e-10;
  out.inequality_holds = out.lhs <= out.rhs + std::log1p(1e-9);
  return out;
}

}  // namespace gausscouple
