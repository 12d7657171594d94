#include "gausscouple/oracles.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gausscouple/errors.hpp"

namespace gausscouple {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Normal scores are integrated over [-kScoreRange, kScoreRange]; the excluded mass is below 1e-17.
constexpr double kScoreRange = 8.5;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  if (p > 0.5) return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * (1.0 - p));
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double Density1D::truncated_pdf(double x) const {
  if (x < lo || x > hi) return 0.0;
  return pdf(x) / mass();
}

double Density1D::transform(double z) const { return std::clamp(from_normal(z), lo, hi); }

Density1D Density1D::widened(double fraction) const {
  Density1D out = *this;
  const double extra = 0.5 * fraction * (hi - lo);
  out.lo -= extra;
  out.hi += extra;
  return out;
}

Density1D Density1D::uniform(double a, double b) {
  if (!(b > a)) throw SchemaError("uniform density needs a < b");
  Density1D d;
  d.name = "uniform";
  d.lo = a;
  d.hi = b;
  d.compact = true;
  const double len = b - a;
  d.pdf = [a, b, len](double x) { return (x >= a && x <= b) ? 1.0 / len : 0.0; };
  d.cdf = [a, b, len](double x) { return x <= a ? 0.0 : (x >= b ? 1.0 : (x - a) / len); };
  d.to_normal = [a, len](double x) {
    const double u = (x - a) / len;
    return normal_quantile(u);
  };
  d.from_normal = [a, len](double z) {
    // 1 - Phi(z) = Phi(-z) keeps the upper tail accurate.
    return z <= 0.0 ? a + len * normal_cdf(z) : a + len - len * normal_cdf(-z);
  };
  return d;
}

Density1D Density1D::gaussian(double sigma, double mean) {
  if (!(sigma > 0.0)) throw SchemaError("gaussian density needs sigma > 0");
  Density1D d;
  d.name = "gaussian";
  d.lo = mean - 10.0 * sigma;
  d.hi = mean + 10.0 * sigma;
  d.compact = false;
  d.pdf = [sigma, mean](double x) { return normal_pdf((x - mean) / sigma) / sigma; };
  d.cdf = [sigma, mean](double x) { return normal_cdf((x - mean) / sigma); };
  d.to_normal = [sigma, mean](double x) { return (x - mean) / sigma; };
  d.from_normal = [sigma, mean](double z) { return mean + sigma * z; };
  return d;
}

Density1D Density1D::laplace(double scale, double mean) {
  if (!(scale > 0.0)) throw SchemaError("laplace density needs scale > 0");
  Density1D d;
  d.name = "laplace";
  const double half_width = scale * std::log(1e12);
  d.lo = mean - half_width;
  d.hi = mean + half_width;
  d.compact = false;
  d.pdf = [scale, mean](double x) { return std::exp(-std::abs(x - mean) / scale) / (2.0 * scale); };
  d.cdf = [scale, mean](double x) {
    const double y = (x - mean) / scale;
    return y < 0.0 ? 0.5 * std::exp(y) : 1.0 - 0.5 * std::exp(-y);
  };
  d.to_normal = [scale, mean](double x) {
    const double y = (x - mean) / scale;
    return y < 0.0 ? normal_quantile(0.5 * std::exp(y)) : -normal_quantile(0.5 * std::exp(-y));
  };
  d.from_normal = [scale, mean](double z) {
    return z < 0.0 ? mean + scale * std::log(2.0 * normal_cdf(z)) : mean - scale * std::log(2.0 * normal_cdf(-z));
  };
  return d;
}

double grid_max_coupling_2x2(double k1, double k2, double b1, double b2, double nu12, int grid, double d) {
  if (grid < 100) throw SchemaError("grid_max_coupling_2x2: grid must be >= 100");
  const double cmax = std::sqrt(k1 * k2);
  double best = -kInf;
  for (int g = 0; g < grid; ++g) {
    const double c = -cmax + 2.0 * cmax * g / (grid - 1);
    const double r2 = std::min(1.0, c * c / (k1 * k2));
    const double info = r2 >= 1.0 ? kInf : -0.5 * std::log1p(-r2);
    if (info > nu12) continue;
    const double var = b1 * b1 * k1 + b2 * b2 * k2 + 2.0 * b1 * b2 * c;
    if (var <= 0.0) continue;
    best = std::max(best, d * std::log(var));
  }
  return best;
}

namespace {

double trapezoid_entropy(const Density1D& p, int intervals) {
  const double h = (p.hi - p.lo) / intervals;
  const double m = p.mass();
  double acc = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double x = p.lo + h * i;
    const double v = p.pdf(x) / m;
    const double term = v > 0.0 ? -v * std::log(v) : 0.0;
    acc += (i == 0 || i == intervals) ? 0.5 * term : term;
  }
  return acc * h;
}

// Trapezoid values T_n, T_2n, ... combined by one Richardson step (4 T_2n - T_n) / 3, so
// kinks of the density on grid nodes (Laplace mode) still converge at fourth order.
double refined_entropy(const Density1D& p, const QuadratureOptions& opts) {
  int n = opts.initial_points;
  double coarse = trapezoid_entropy(p, n);
  double prev = std::numeric_limits<double>::quiet_NaN();
  while (n < opts.max_points) {
    n *= 2;
    const double fine = trapezoid_entropy(p, n);
    const double extrapolated = (4.0 * fine - coarse) / 3.0;
    if (std::abs(extrapolated - prev) < opts.tol) return extrapolated;
    prev = extrapolated;
    coarse = fine;
  }
  throw NoConvergence("entropy_quadrature: no convergence at " + std::to_string(n) + " points for " + p.name);
}

}  // namespace

double entropy_quadrature(const Density1D& p, const QuadratureOptions& opts) {
  const double h = refined_entropy(p, opts);
  if (!p.compact) {
    const double wide = refined_entropy(p.widened(0.5), opts);
    if (std::abs(wide - h) > opts.tail_tol) {
      throw UnstableTail("entropy_quadrature: widening the window of " + p.name + " moves the entropy by " +
                         std::to_string(std::abs(wide - h)));
    }
  }
  return h;
}

namespace {

// Entropy from CDF values on a uniform grid with spacing ds: -sum P log(P / ds).
double histogram_entropy(const std::vector<double>& cdf, double ds) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < cdf.size(); ++k) {
    const double pk = cdf[k + 1] - cdf[k];
    if (pk > 0.0) acc -= pk * std::log(pk / ds);
  }
  return acc;
}

// rho >= 0: X1 = T1(G), X2 = T2(rho G + s W) with s = sqrt(1 - rho^2). For each W = w the
// map g -> T1(g) + T2(rho g + s w) is nondecreasing, so P(X1 + X2 <= t | w) = Phi(g*_w(t)).
double sum_entropy_mixture(const Density1D& p1, const Density1D& p2, double rho, int ng, int nw, int ns) {
  const double sigma = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  const double dg = 2.0 * kScoreRange / (ng - 1);
  std::vector<double> g(ng), t1(ng), phi_g(ng);
  for (int l = 0; l < ng; ++l) {
    g[l] = -kScoreRange + dg * l;
    t1[l] = p1.transform(g[l]);
  }
  const int mixture = sigma > 0.0 ? nw : 1;
  std::vector<double> w(mixture), weight(mixture);
  if (mixture == 1) {
    w[0] = 0.0;
    weight[0] = 1.0;
  } else {
    const double dw = 2.0 * kScoreRange / (mixture - 1);
    double total = 0.0;
    for (int q = 0; q < mixture; ++q) {
      w[q] = -kScoreRange + dw * q;
      weight[q] = normal_pdf(w[q]) * ((q == 0 || q == mixture - 1) ? 0.5 : 1.0);
      total += weight[q];
    }
    for (double& x : weight) x /= total;
  }

  std::vector<std::vector<double>> table(mixture, std::vector<double>(ng));
  double smin = kInf, smax = -kInf;
  for (int q = 0; q < mixture; ++q) {
    for (int l = 0; l < ng; ++l) table[q][l] = t1[l] + p2.transform(rho * g[l] + sigma * w[q]);
    // Clamping can break monotonicity by rounding only; enforce it.
    for (int l = 1; l < ng; ++l) table[q][l] = std::max(table[q][l], table[q][l - 1]);
    smin = std::min(smin, table[q].front());
    smax = std::max(smax, table[q].back());
  }
  if (!(smax > smin)) throw NoConvergence("coupled_sum_entropy: degenerate sum support");

  const double ds = (smax - smin) / ns;
  std::vector<double> cdf(ns + 1, 0.0);
  for (int q = 0; q < mixture; ++q) {
    const std::vector<double>& m = table[q];
    int l = 0;
    for (int k = 0; k <= ns; ++k) {
      const double s = k == ns ? smax : smin + ds * k;
      while (l < ng && m[l] <= s) ++l;
      double prob;
      if (l == 0) {
        prob = 0.0;
      } else if (l == ng) {
        prob = 1.0;
      } else {
        const double span = m[l] - m[l - 1];
        const double frac = span > 0.0 ? (s - m[l - 1]) / span : 0.0;
        prob = normal_cdf(g[l - 1] + frac * dg);
      }
      cdf[k] += weight[q] * prob;
    }
  }
  return histogram_entropy(cdf, ds);
}

// rho < 0: condition on G instead, P(X1 + X2 <= t | g) = Phi((Phi^{-1}(F2(t - T1(g))) - rho g) / s).
double sum_entropy_conditional(const Density1D& p1, const Density1D& p2, double rho, int ng, int ns) {
  const double sigma = std::sqrt(1.0 - rho * rho);
  const double dg = 2.0 * kScoreRange / (ng - 1);
  std::vector<double> g(ng), t1(ng), weight(ng);
  double total = 0.0;
  for (int l = 0; l < ng; ++l) {
    g[l] = -kScoreRange + dg * l;
    t1[l] = p1.transform(g[l]);
    weight[l] = normal_pdf(g[l]) * ((l == 0 || l == ng - 1) ? 0.5 : 1.0);
    total += weight[l];
  }
  for (double& x : weight) x /= total;
  const double smin = p1.lo + p2.lo;
  const double smax = p1.hi + p2.hi;
  const double ds = (smax - smin) / ns;
  std::vector<double> cdf(ns + 1, 0.0);
  for (int k = 0; k <= ns; ++k) {
    const double s = smin + ds * k;
    double acc = 0.0;
    for (int l = 0; l < ng; ++l) {
      const double y = s - t1[l];
      double prob;
      if (y <= p2.lo) {
        prob = 0.0;
      } else if (y >= p2.hi) {
        prob = 1.0;
      } else {
        prob = normal_cdf((p2.to_normal(y) - rho * g[l]) / sigma);
      }
      acc += weight[l] * prob;
    }
    cdf[k] = acc;
  }
  return histogram_entropy(cdf, ds);
}

}  // namespace

double coupled_sum_entropy(const Density1D& p1, const Density1D& p2, const CopulaCoupling& coupling,
                           const SumEntropyOptions& opts) {
  const double rho = coupling.rho;
  if (!(rho >= -1.0 && rho <= 1.0)) throw SchemaError("coupled_sum_entropy: rho must lie in [-1, 1]");
  if (rho <= -1.0) throw SchemaError("coupled_sum_entropy: rho = -1 is not supported");
  auto level = [&](int scale) {
    const int ng = opts.score_points * scale;
    const int ns = opts.sum_points * scale;
    return rho >= 0.0 ? sum_entropy_mixture(p1, p2, rho, ng, opts.mixture_points * scale, ns)
                      : sum_entropy_conditional(p1, p2, rho, ng, ns);
  };
  // The histogram entropy converges at second order in the grid spacing; successive
  // levels are combined by one Richardson step.
  double coarse = level(1);
  double prev = std::numeric_limits<double>::quiet_NaN();
  int scale = 1;
  for (int it = 0; it < opts.max_doublings; ++it) {
    scale *= 2;
    const double fine = level(scale);
    const double extrapolated = (4.0 * fine - coarse) / 3.0;
    if (std::abs(extrapolated - prev) < opts.tol) return extrapolated;
    prev = extrapolated;
    coarse = fine;
  }
  if (std::isnan(prev)) return coarse;
  throw NoConvergence("coupled_sum_entropy: no convergence after " + std::to_string(opts.max_doublings) +
                      " doublings");
}

double copula_mutual_information(const Density1D& p1, const Density1D& p2, const CopulaCoupling& coupling,
                                 int points) {
  const double rho = coupling.rho;
  if (!(std::abs(rho) < 1.0)) throw SchemaError("copula_mutual_information: need |rho| < 1");
  const double h1 = (p1.hi - p1.lo) / points;
  const double h2 = (p2.hi - p2.lo) / points;
  std::vector<double> x1(points), d1(points), a(points), x2(points), d2(points), b(points);
  for (int i = 0; i < points; ++i) {
    x1[i] = p1.lo + h1 * (i + 0.5);
    d1[i] = p1.truncated_pdf(x1[i]) * h1;
    a[i] = p1.to_normal(x1[i]);
    x2[i] = p2.lo + h2 * (i + 0.5);
    d2[i] = p2.truncated_pdf(x2[i]) * h2;
    b[i] = p2.to_normal(x2[i]);
  }
  const double one_minus = 1.0 - rho * rho;
  const double log_norm = -0.5 * std::log(one_minus);
  double mi = 0.0;
  double mass = 0.0;
  for (int i = 0; i < points; ++i) {
    for (int j = 0; j < points; ++j) {
      const double q = (rho * rho * (a[i] * a[i] + b[j] * b[j]) - 2.0 * rho * a[i] * b[j]) / (2.0 * one_minus);
      const double log_c = log_norm - q;
      const double w = d1[i] * d2[j] * std::exp(log_c);
      mi += w * log_c;
      mass += w;
    }
  }
  return mi / mass;
}

SpotCheck comparison_spot_check(const Density1D& p1, const Density1D& p2, double zeta, int rho_grid,
                                double pass_tol, const SumEntropyOptions& opts) {
  if (!(zeta >= 0.0)) throw SchemaError("comparison_spot_check: zeta must be >= 0");
  if (rho_grid < 1) throw SchemaError("comparison_spot_check: rho_grid must be >= 1");
  SpotCheck out;
  out.rho_bar = std::isinf(zeta) ? 1.0 : std::sqrt(-std::expm1(-2.0 * zeta));
  const double e1 = entropy_quadrature(p1);
  const double e2 = entropy_quadrature(p2);
  const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
  const double s1 = std::sqrt(std::exp(2.0 * e1) / two_pi_e);
  const double s2 = std::sqrt(std::exp(2.0 * e2) / two_pi_e);
  out.rhs = 0.5 * std::log(two_pi_e * (s1 * s1 + s2 * s2 + 2.0 * out.rho_bar * s1 * s2));
  out.lhs_lower_bound = -kInf;
  for (int i = 0; i < rho_grid; ++i) {
    const double rho = rho_grid == 1 ? out.rho_bar : out.rho_bar * i / (rho_grid - 1);
    const double h = coupled_sum_entropy(p1, p2, {rho}, opts);
    if (h > out.lhs_lower_bound) {
      out.lhs_lower_bound = h;
      out.best_rho = rho;
    }
  }
  out.margin = out.lhs_lower_bound - out.rhs;
  out.status = out.margin >= -pass_tol ? SpotStatus::pass : SpotStatus::inconclusive;
  return out;
}

SymMatrix finite_difference_gradient(const std::function<double(const SymMatrix&)>& f, const SymMatrix& at,
                                     double h) {
  const int n = at.dim();
  Matrix g(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      Matrix e = Matrix::Zero(n, n);
      e(a, b) = 1.0;
      e(b, a) = 1.0;
      const double up = f(SymMatrix(at.matrix() + h * e));
      const double down = f(SymMatrix(at.matrix() - h * e));
      const double slope = (up - down) / (2.0 * h);
      // Off-diagonal perturbations move two entries at once.
      g(a, b) = a == b ? slope : 0.5 * slope;
      g(b, a) = g(a, b);
    }
  }
  return SymMatrix(g);
}

}  // namespace gausscouple
