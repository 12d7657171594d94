#include "gausscouple/frbl.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>

namespace gausscouple {

const char* to_string(ConstantStatus s) {
  switch (s) {
    case ConstantStatus::finite:
      return "finite";
    case ConstantStatus::infinite:
      return "infinite";
    case ConstantStatus::extremal_not_attained:
      return "extremal-not-attained";
  }
  return "unknown";
}

FEvaluation evaluate_F_full(const Datum& datum, const std::vector<double>& c, const std::vector<PdMatrix>& marginals,
                            const ConstraintFunction& nu, const SolverOptions& opts) {
  if (static_cast<int>(c.size()) != datum.k()) throw DimensionMismatch("evaluate_F: c has the wrong length");
  const CouplingSolution sol = max_coupling(datum, marginals, nu, opts);
  FEvaluation out;
  out.coupling_value = sol.value;
  out.value = sol.value;
  out.suboptimality_bound = sol.suboptimality_bound;
  out.converged = sol.converged;
  for (int i = 0; i < datum.k(); ++i) {
    out.value -= c[i] * log_det(marginals[i]);
    Matrix g = sol.marginal_gradient[i] - c[i] * marginals[i].inverse();
    g = 0.5 * (g + g.transpose());
    out.riemannian_gradient.push_back(marginals[i].matrix() * g * marginals[i].matrix());
    out.gradient.push_back(std::move(g));
  }
  return out;
}

double evaluate_F(const Datum& datum, const std::vector<double>& c, const std::vector<PdMatrix>& marginals,
                  const ConstraintFunction& nu, const SolverOptions& opts) {
  return evaluate_F_full(datum, c, marginals, nu, opts).value;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Newton steps allowed to one inner coupling solve; well-conditioned solves need about 100.
constexpr int kInnerNewtonCap = 500;

struct DescentSetup {
  const Datum* datum;
  std::vector<double> c;
  const ConstraintFunction* nu;
  SolverOptions opts;
  // When set, log det K_i is held at these values (trace-free steps).
  std::optional<std::vector<double>> fixed_log_det;
};

struct Point {
  std::vector<PdMatrix> k;
  FEvaluation eval;
  // Whitened gradient K^{1/2} G K^{1/2}, projected to trace zero when determinants are fixed.
  std::vector<Matrix> xi;
  double norm2 = 0.0;
};

struct DescentOutcome {
  Point point;
  ConstantStatus status = ConstantStatus::finite;
  int iterations = 0;
  double distance = 0.0;
  std::string reason;
};

Point make_point(const DescentSetup& s, std::vector<PdMatrix> k) {
  for (const PdMatrix& x : k) {
    // Keep iterates well inside the PdMatrix pivot floor so that rescaling them stays valid.
    const double min_pivot = x.cholesky().diagonal().minCoeff();
    if (min_pivot * min_pivot < 1e-10 * x.matrix().diagonal().maxCoeff())
      throw NotPositiveDefinite("descent: marginal covariance too ill-conditioned");
  }
  Point p;
  SolverOptions inner = s.opts;
  inner.max_iters = std::min(inner.max_iters, kInnerNewtonCap);
  p.eval = evaluate_F_full(*s.datum, s.c, k, *s.nu, inner);
  if (!p.eval.converged) throw NoConvergence("descent: inner coupling problem did not converge");
  for (std::size_t i = 0; i < k.size(); ++i) {
    const Matrix root = sqrt_pd(k[i]).matrix();
    Matrix xi = root * p.eval.gradient[i] * root;
    xi = 0.5 * (xi + xi.transpose());
    if (s.fixed_log_det) xi -= (xi.trace() / xi.rows()) * Matrix::Identity(xi.rows(), xi.rows());
    p.norm2 += xi.squaredNorm();
    p.xi.push_back(std::move(xi));
  }
  p.k = std::move(k);
  return p;
}

std::vector<PdMatrix> step_from(const DescentSetup& s, const Point& p, double alpha) {
  std::vector<PdMatrix> out;
  for (std::size_t i = 0; i < p.k.size(); ++i) {
    const Matrix root = sqrt_pd(p.k[i]).matrix();
    PdMatrix next = exp_map(p.k[i], SymMatrix(Matrix(-alpha * root * p.xi[i] * root)));
    if (s.fixed_log_det) {
      const double shift = ((*s.fixed_log_det)[i] - log_det(next)) / next.dim();
      next = PdMatrix(Matrix(std::exp(shift) * next.matrix()));
    }
    out.push_back(std::move(next));
  }
  return out;
}

double product_distance(const std::vector<PdMatrix>& a, const std::vector<PdMatrix>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = delta2(a[i], b[i]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

double inner(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += hs_inner(a[i], b[i]);
  return acc;
}

// Riemannian gradient descent on F with Barzilai-Borwein step lengths and an Armijo safeguard.
DescentOutcome descend(const DescentSetup& s, const std::vector<PdMatrix>& start) {
  const double grad_tol = 1e-2 * std::sqrt(s.opts.tol);
  const double step_cap = 4.0;
  DescentOutcome out;
  Point p = make_point(s, start);
  double alpha = 1.0;
  std::deque<double> recent;
  int it = 0;
  for (; it < s.opts.max_iters; ++it) {
    const double gn = std::sqrt(p.norm2);
    if (gn <= grad_tol) {
      out.reason = "gradient below tolerance";
      break;
    }
    double a = std::min(alpha, step_cap / gn);
    bool accepted = false;
    Point q;
    for (int tries = 0; tries < 60; ++tries) {
      try {
        q = make_point(s, step_from(s, p, a));
      } catch (const Error&) {
        a *= 0.5;
        continue;
      }
      if (q.eval.value <= p.eval.value - 1e-4 * a * p.norm2) {
        accepted = true;
        break;
      }
      a *= 0.5;
    }
    if (!accepted) {
      out.distance = product_distance(p.k, start);
      if (gn > 1e3 * grad_tol && out.distance > 0.2 * s.opts.divergence_radius) {
        out.status = ConstantStatus::extremal_not_attained;
        out.reason = "evaluation accuracy exhausted far from the start with a large gradient";
      } else {
        out.reason = "line search stalled at the evaluation accuracy";
      }
      break;
    }
    // Barzilai-Borwein: s = -a xi_p, y = xi_q - xi_p (whitened coordinates at each base point).
    std::vector<Matrix> y;
    for (std::size_t i = 0; i < p.xi.size(); ++i) y.push_back(q.xi[i] - p.xi[i]);
    const double sy = -a * inner(p.xi, y);
    const double ss = a * a * p.norm2;
    alpha = sy > 0.0 ? std::clamp(ss / sy, 1e-6, 1e8) : std::min(2.0 * a, 1e8);

    recent.push_back(p.eval.value - q.eval.value);
    if (recent.size() > 10) recent.pop_front();
    p = std::move(q);
    out.distance = product_distance(p.k, start);
    if (out.distance > s.opts.divergence_radius) {
      const double mean = std::accumulate(recent.begin(), recent.end(), 0.0) / recent.size();
      if (mean > s.opts.tol) {
        out.status = ConstantStatus::infinite;
        out.reason = "iterates left the divergence radius while F kept decreasing";
      } else {
        out.status = ConstantStatus::extremal_not_attained;
        out.reason = "iterates left the divergence radius with F stalled";
      }
      ++it;
      break;
    }
  }
  if (it >= s.opts.max_iters) {
    out.reason = "iteration cap reached";
    if (out.distance > 0.2 * s.opts.divergence_radius) out.status = ConstantStatus::extremal_not_attained;
  }
  out.distance = product_distance(p.k, start);
  out.iterations = it;
  out.point = std::move(p);
  return out;
}

std::vector<PdMatrix> identity_marginals(const Decomposition& dec) {
  std::vector<PdMatrix> k;
  for (int i = 0; i < dec.k(); ++i) k.push_back(PdMatrix::identity(dec.dim(i)));
  return k;
}

// Joint rescaling K_i -> a K_i with sum_i log det(a K_i) = 0.
std::vector<PdMatrix> normalize_jointly(const std::vector<PdMatrix>& k) {
  double total_ld = 0.0;
  int total_dim = 0;
  for (const PdMatrix& x : k) {
    total_ld += log_det(x);
    total_dim += x.dim();
  }
  const double a = std::exp(-total_ld / total_dim);
  std::vector<PdMatrix> out;
  for (const PdMatrix& x : k) out.emplace_back(Matrix(a * x.matrix()));
  return out;
}

ConstantReport compute_Dg_from(const Datum& datum, const std::vector<double>& c, const ConstraintFunction& nu,
                               const SolverOptions& opts, const std::vector<PdMatrix>* start) {
  const Datum dc = datum.with_c(c);
  nu.validate(dc.k());
  ConstantReport r;
  r.c = c;
  r.scaling = check_scaling(dc);
  if (!r.scaling) {
    r.status = ConstantStatus::infinite;
    r.value = kInf;
    r.inner_value = -kInf;
    r.reason = "scaling condition fails";
    return r;
  }
  r.dimension = check_dimension_condition(dc, opts.dimension_trials, opts.seed);
  if (r.dimension->verdict == Verdict::fail) {
    r.status = ConstantStatus::infinite;
    r.value = kInf;
    r.inner_value = -kInf;
    r.reason = "dimension condition fails on a tested subspace tuple";
    return r;
  }
  DescentSetup s{&dc, c, &nu, opts, std::nullopt};
  const std::vector<PdMatrix> init = start ? *start : identity_marginals(dc.decomposition());
  DescentOutcome o = descend(s, init);
  r.status = o.status;
  r.reason = o.reason;
  r.iterations = o.iterations;
  r.drift_distance = o.distance;
  r.gradient_norm = std::sqrt(o.point.norm2);
  r.certificate_gap = o.point.eval.suboptimality_bound + o.point.norm2;
  if (o.status == ConstantStatus::infinite) {
    r.value = kInf;
    r.inner_value = -kInf;
    r.diverging_direction = o.point.xi;
    r.witnesses = o.point.k;
    return r;
  }
  r.inner_value = o.point.eval.value;
  r.value = -0.5 * r.inner_value;
  r.witnesses = normalize_jointly(o.point.k);
  return r;
}

}  // namespace

ConstantReport compute_Dg(const Datum& datum, const std::vector<double>& c, const ConstraintFunction& nu,
                          const SolverOptions& opts) {
  return compute_Dg_from(datum, c, nu, opts, nullptr);
}

ConstantReport minimax_rhs(const Datum& datum, const SolverOptions& opts) {
  const double scale = datum.weighted_codomain_dim();
  std::vector<double> d = datum.d();
  for (double& x : d) x /= scale;
  const Datum dn = datum.with_d(d).with_c(std::vector<double>(datum.k(), 0.0));
  const Decomposition& dec = dn.decomposition();
  ConstraintFunction nu;
  ConstantReport r;
  r.d_scale = scale;
  r.c = dn.c();
  const std::vector<PdMatrix> start = identity_marginals(dec);
  bool all_scalar = true;
  for (int i = 0; i < dec.k(); ++i) all_scalar = all_scalar && dec.dim(i) == 1;
  if (all_scalar) {
    // det K_i = 1 pins every scalar block to 1.
    const CouplingSolution sol = max_coupling(dn, start, nu, opts);
    r.inner_value = sol.value;
    r.certificate_gap = sol.suboptimality_bound;
    r.witnesses = start;
  } else {
    DescentSetup s{&dn, dn.c(), &nu, opts, std::vector<double>(dec.k(), 0.0)};
    DescentOutcome o = descend(s, start);
    r.status = o.status;
    r.reason = o.reason;
    r.iterations = o.iterations;
    r.drift_distance = o.distance;
    r.gradient_norm = std::sqrt(o.point.norm2);
    r.certificate_gap = o.point.eval.suboptimality_bound + o.point.norm2;
    r.inner_value = o.point.eval.value;
    r.witnesses = o.point.k;
  }
  r.value = r.inner_value;
  return r;
}

namespace {

// Euclidean projection onto {c >= 0, sum_i w_i c_i = 1}: c_i = max(0, y_i - tau w_i).
std::vector<double> project_weighted_simplex(const std::vector<double>& y, const std::vector<double>& w) {
  auto mass = [&](double tau) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += w[i] * std::max(0.0, y[i] - tau * w[i]);
    return acc;
  };
  double lo = -1.0, hi = 1.0;
  while (mass(lo) < 1.0) lo *= 2.0;
  while (mass(hi) > 1.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > 1.0 ? lo : hi) = mid;
  }
  const double tau = 0.5 * (lo + hi);
  std::vector<double> c(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) c[i] = std::max(0.0, y[i] - tau * w[i]);
  // Remove the residual of the bisection exactly.
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += w[i] * c[i];
  for (double& x : c) x /= total;
  return c;
}

struct OuterEvaluator {
  const Datum& datum;  // normalized d
  SolverOptions opts;
  std::vector<PdMatrix> warm;
  int evaluations = 0;

  // phi(c) = -2 D_g(c) = inf F; -inf when D_g is infinite.
  ConstantReport operator()(const std::vector<double>& c) {
    ++evaluations;
    ConstantReport r = compute_Dg_from(datum, c, {}, opts, warm.empty() ? nullptr : &warm);
    if (r.status != ConstantStatus::infinite) warm = r.witnesses;
    return r;
  }
};

double phi_of(const ConstantReport& r) { return r.status == ConstantStatus::infinite ? -kInf : r.inner_value; }

}  // namespace

ConstantReport best_constant(const Datum& datum, const SolverOptions& opts) {
  const double scale = datum.weighted_codomain_dim();
  std::vector<double> d = datum.d();
  for (double& x : d) x /= scale;
  const Datum dn = datum.with_d(d);
  const Decomposition& dec = dn.decomposition();
  const int k = dec.k();
  std::vector<double> w(k);
  for (int i = 0; i < k; ++i) w[i] = dec.dim(i);

  OuterEvaluator eval{dn, opts, {}};
  std::vector<double> c(k, 1.0 / dec.total());
  ConstantReport current = eval(c);
  if (current.status == ConstantStatus::infinite) {
    // Look for a finite starting point among random simplex points.
    std::mt19937_64 rng(opts.seed);
    std::exponential_distribution<double> ex(1.0);
    for (int trial = 0; trial < 64 && current.status == ConstantStatus::infinite; ++trial) {
      std::vector<double> y(k);
      double tot = 0.0;
      for (int i = 0; i < k; ++i) {
        y[i] = ex(rng);
        tot += w[i] * y[i];
      }
      for (double& x : y) x /= tot;
      c = y;
      current = eval(c);
    }
  }
  if (current.status == ConstantStatus::infinite) {
    current.reason = "no exponent vector on the simplex gives a finite constant";
    current.d_scale = scale;
    return current;
  }

  std::vector<double> best_c = c;
  ConstantReport best = current;
  if (k > 1) {
    // Projected supergradient ascent on phi; a supergradient is -log det K_i*(c).
    double radius = 0.25 / dec.total();
    for (int t = 1; t <= opts.outer_iters; ++t) {
      std::vector<double> g(k);
      for (int i = 0; i < k; ++i) g[i] = -log_det(current.witnesses[i]);
      // Tangent part of g for the constraint sum_i w_i c_i = 1.
      const double ww = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
      const double gw = std::inner_product(g.begin(), g.end(), w.begin(), 0.0);
      double gnorm = 0.0;
      for (int i = 0; i < k; ++i) {
        g[i] -= gw / ww * w[i];
        gnorm += g[i] * g[i];
      }
      gnorm = std::sqrt(gnorm);
      if (gnorm < 1e-12) break;
      const double step = radius / std::sqrt(static_cast<double>(t)) / gnorm;
      std::vector<double> y(k);
      for (int i = 0; i < k; ++i) y[i] = c[i] + step * g[i];
      std::vector<double> next = project_weighted_simplex(y, w);
      double moved = 0.0;
      for (int i = 0; i < k; ++i) moved = std::max(moved, std::abs(next[i] - c[i]));
      if (moved < 1e-9) break;
      ConstantReport r = eval(next);
      if (r.status == ConstantStatus::infinite) {
        radius *= 0.5;
        continue;
      }
      c = next;
      current = r;
      if (phi_of(r) > phi_of(best)) {
        best = r;
        best_c = c;
      }
    }

    // Golden-section polish along coordinate pairs, c + tau (e_i / w_i - e_j / w_j).
    if (k <= 3) {
      const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
      for (int round = 0; round < (k == 2 ? 1 : 3); ++round) {
        for (int i = 0; i < k; ++i) {
          for (int j = i + 1; j < k; ++j) {
            const std::vector<double> base = best_c;
            auto at = [&](double tau) {
              std::vector<double> x = base;
              x[i] += tau / w[i];
              x[j] -= tau / w[j];
              x[i] = std::max(0.0, x[i]);
              x[j] = std::max(0.0, x[j]);
              return x;
            };
            double a = -base[i] * w[i];
            double b = base[j] * w[j];
            double x1 = b - golden * (b - a), x2 = a + golden * (b - a);
            ConstantReport r1 = eval(at(x1)), r2 = eval(at(x2));
            while (b - a > 1e-7) {
              if (phi_of(r1) < phi_of(r2)) {
                a = x1;
                x1 = x2;
                r1 = r2;
                x2 = a + golden * (b - a);
                r2 = eval(at(x2));
              } else {
                b = x2;
                x2 = x1;
                r2 = r1;
                x1 = b - golden * (b - a);
                r1 = eval(at(x1));
              }
            }
            const ConstantReport& pick = phi_of(r1) >= phi_of(r2) ? r1 : r2;
            if (phi_of(pick) > phi_of(best)) {
              best = pick;
              best_c = pick.c;
            }
          }
        }
      }
    }
  }

  const ConstantReport rhs = minimax_rhs(datum, opts);
  ConstantReport out = best;
  out.c = best_c;
  out.d_scale = scale;
  out.minimax_lhs = best.inner_value;
  out.minimax_rhs = rhs.inner_value;
  out.minimax_residual = out.minimax_lhs - out.minimax_rhs;
  // D_g(s c*, d, B) = s D_g(c*, d / s, B).
  out.value = scale * best.value;
  out.iterations = eval.evaluations;
  return out;
}

ComparisonResult comparison_gaussians(const Datum& datum, const std::vector<double>& entropies,
                                      const ConstraintFunction& nu, const SolverOptions& opts) {
  const Decomposition& dec = datum.decomposition();
  if (static_cast<int>(entropies.size()) != dec.k())
    throw DimensionMismatch("comparison_gaussians: need one entropy per block");
  nu.validate(dec.k());
  std::vector<double> targets(dec.k());
  std::vector<PdMatrix> start;
  for (int i = 0; i < dec.k(); ++i) {
    if (!std::isfinite(entropies[i])) throw SchemaError("comparison_gaussians: entropies must be finite");
    targets[i] = log_det_for_entropy(dec.dim(i), entropies[i]);
    start.emplace_back(Matrix(std::exp(targets[i] / dec.dim(i)) * Matrix::Identity(dec.dim(i), dec.dim(i))));
  }
  const Datum d0 = datum.with_c(std::vector<double>(dec.k(), 0.0));
  DescentSetup s{&d0, d0.c(), &nu, opts, targets};
  DescentOutcome o = descend(s, start);
  ComparisonResult out;
  out.Z_covariances = o.point.k;
  for (int i = 0; i < dec.k(); ++i) out.entropies.push_back(gaussian_entropy(dec.dim(i), log_det(o.point.k[i])));
  out.lhs_reference =
      0.5 * o.point.eval.coupling_value + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e) * datum.weighted_codomain_dim();
  out.status = o.status;
  out.gradient_norm = std::sqrt(o.point.norm2);
  out.iterations = o.iterations;
  return out;
}

}  // namespace gausscouple
