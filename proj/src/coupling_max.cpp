#include "gausscouple/coupling_max.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gausscouple {

CouplingCovariance::CouplingCovariance(Decomposition decomposition, SymMatrix matrix)
    : decomposition_(std::move(decomposition)), matrix_(std::move(matrix)) {
  if (matrix_.dim() != decomposition_.total()) {
    throw DimensionMismatch("CouplingCovariance: matrix is " + std::to_string(matrix_.dim()) +
                            "-dimensional, decomposition total is " + std::to_string(decomposition_.total()));
  }
}

double CouplingCovariance::min_eigenvalue() const { return gausscouple::min_eigenvalue(matrix_); }

namespace {

// Cholesky of a pushforward; SingularPushforward when a pivot collapses.
Eigen::LLT<Matrix> pushforward_factor(const Matrix& m, int j) {
  Eigen::LLT<Matrix> llt(m);
  const double scale = m.diagonal().maxCoeff();
  if (llt.info() != Eigen::Success || !(scale > 0.0) ||
      llt.matrixLLT().diagonal().minCoeff() <= std::sqrt(1e-14 * scale)) {
    throw SingularPushforward("B_" + std::to_string(j + 1) + " K B_" + std::to_string(j + 1) +
                              "^T is numerically singular");
  }
  return llt;
}

constexpr double kGradientGap = 1e-8;

double llt_log_det(const Eigen::LLT<Matrix>& llt) { return 2.0 * llt.matrixLLT().diagonal().array().log().sum(); }

Matrix llt_inverse(const Eigen::LLT<Matrix>& llt) {
  const Eigen::Index n = llt.matrixLLT().rows();
  Matrix inv = llt.solve(Matrix::Identity(n, n));
  return 0.5 * (inv + inv.transpose());
}

bool factor_ok(const Eigen::LLT<Matrix>& llt) {
  return llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all() &&
         llt.matrixLLT().diagonal().allFinite();
}

struct Pair {
  int r;
  int s;
};

// Derivatives of x -> log det M(x) when dM/dx_a = B (e_r e_s^T + e_s e_r^T) B^T and
// P = B^T M^{-1} B:  gradient 2 P_rs, Hessian -2 (P_vr P_su + P_ur P_sv).
void add_log_det_terms(const Matrix& p, double w, const std::vector<Pair>& pairs, Vector& g, Matrix& h) {
  const int nv = static_cast<int>(pairs.size());
  for (int a = 0; a < nv; ++a) {
    const int r = pairs[a].r, s = pairs[a].s;
    g(a) += 2.0 * w * p(r, s);
    for (int b = 0; b <= a; ++b) {
      const int u = pairs[b].r, v = pairs[b].s;
      const double hv = -2.0 * w * (p(v, r) * p(s, u) + p(u, r) * p(s, v));
      h(a, b) += hv;
      if (b != a) h(b, a) += hv;
    }
  }
}

struct Constraint {
  Subset subset;
  double bound;
  std::vector<int> coords;
  double marginal_log_det;
};

struct Evaluation {
  bool feasible = false;
  double f = 0.0;
  double log_det_k = 0.0;
  double log_slack = 0.0;  // sum_S log l_S
  std::vector<double> slack;
  Vector grad;
  Matrix hess;
  Matrix k;
  Matrix k_inv;
  Matrix r;  // sum_j d_j P_j
  std::vector<Matrix> ks_inv;
};

class CouplingBarrier {
 public:
  CouplingBarrier(const Datum& datum, const std::vector<PdMatrix>& marginals, const ConstraintFunction& nu)
      : datum_(datum) {
    const Decomposition& dec = datum.decomposition();
    base_ = dec.block_diagonal(marginals);
    for (const auto& [s, b] : nu.entries()) {
      if (b == 0.0) continue;
      double mld = 0.0;
      for (int i : s) mld += log_det(marginals[i]);
      constraints_.push_back({s, b, dec.coordinates(s), mld});
    }
    // Pairs inside a subset with nu(S) = 0 stay at zero (I_S = 0 iff K_S is block diagonal).
    const int k = dec.k();
    std::vector<std::vector<bool>> frozen(k, std::vector<bool>(k, false));
    for (const auto& [s, b] : nu.entries()) {
      if (b != 0.0) continue;
      for (int i : s)
        for (int j : s) frozen[i][j] = true;
    }
    for (int bi = 0; bi < k; ++bi) {
      for (int bj = bi + 1; bj < k; ++bj) {
        if (frozen[bi][bj]) continue;
        for (int a = 0; a < dec.dim(bi); ++a)
          for (int c = 0; c < dec.dim(bj); ++c) pairs_.push_back({dec.offset(bi) + a, dec.offset(bj) + c});
      }
    }
  }

  int variables() const { return static_cast<int>(pairs_.size()); }
  double theta() const { return datum_.decomposition().total() + static_cast<double>(constraints_.size()); }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  Matrix assemble(const Vector& x) const {
    Matrix k = base_;
    for (int a = 0; a < variables(); ++a) {
      k(pairs_[a].r, pairs_[a].s) += x(a);
      k(pairs_[a].s, pairs_[a].r) += x(a);
    }
    return k;
  }

  Evaluation evaluate(const Vector& x, double t, bool derivatives) const {
    Evaluation e;
    const int nv = variables();
    const int n = datum_.decomposition().total();
    e.k = assemble(x);
    Eigen::LLT<Matrix> kf(e.k);
    if (!factor_ok(kf)) return e;
    e.log_det_k = llt_log_det(kf);
    if (derivatives) {
      e.grad = Vector::Zero(nv);
      e.hess = Matrix::Zero(nv, nv);
      e.r = Matrix::Zero(n, n);
    }
    for (int j = 0; j < datum_.m(); ++j) {
      const Matrix& b = datum_.map(j);
      Eigen::LLT<Matrix> mf(b * e.k * b.transpose());
      if (!factor_ok(mf)) return e;
      e.f += datum_.d()[j] * llt_log_det(mf);
      if (derivatives) {
        Matrix p = b.transpose() * mf.solve(b);
        p = 0.5 * (p + p.transpose());
        add_log_det_terms(p, t * datum_.d()[j], pairs_, e.grad, e.hess);
        e.r += datum_.d()[j] * p;
      }
    }
    if (derivatives) {
      e.k_inv = llt_inverse(kf);
      add_log_det_terms(e.k_inv, 1.0, pairs_, e.grad, e.hess);
    }
    for (const Constraint& c : constraints_) {
      const int ns = static_cast<int>(c.coords.size());
      Matrix ks(ns, ns);
      for (int a = 0; a < ns; ++a)
        for (int b = 0; b < ns; ++b) ks(a, b) = e.k(c.coords[a], c.coords[b]);
      Eigen::LLT<Matrix> sf(ks);
      if (!factor_ok(sf)) return e;
      const double l = llt_log_det(sf) - c.marginal_log_det + 2.0 * c.bound;
      if (!(l > 0.0)) return e;
      e.slack.push_back(l);
      e.log_slack += std::log(l);
      if (derivatives) {
        Matrix q = Matrix::Zero(n, n);
        const Matrix inv = llt_inverse(sf);
        for (int a = 0; a < ns; ++a)
          for (int b = 0; b < ns; ++b) q(c.coords[a], c.coords[b]) = inv(a, b);
        Vector gl = Vector::Zero(nv);
        Matrix hl = Matrix::Zero(nv, nv);
        add_log_det_terms(q, 1.0, pairs_, gl, hl);
        e.grad += gl / l;
        e.hess += hl / l - gl * gl.transpose() / (l * l);
        e.ks_inv.push_back(q);
      }
    }
    e.feasible = true;
    return e;
  }

 private:
  const Datum& datum_;
  Matrix base_;
  std::vector<Pair> pairs_;
  std::vector<Constraint> constraints_;
};

// Barrier objective difference phi(b) - phi(a), evaluated term by term to limit cancellation.
double phi_increase(const Evaluation& a, const Evaluation& b, double t) {
  return t * (b.f - a.f) + (b.log_det_k - a.log_det_k) + (b.log_slack - a.log_slack);
}

}  // namespace

double objective_value(const Datum& datum, const Matrix& k) {
  double v = 0.0;
  for (int j = 0; j < datum.m(); ++j) {
    const Matrix& b = datum.map(j);
    v += datum.d()[j] * llt_log_det(pushforward_factor(b * k * b.transpose(), j));
  }
  return v;
}

SymMatrix objective_gradient(const Datum& datum, const Matrix& k) {
  const int n = datum.decomposition().total();
  if (k.rows() != n || k.cols() != n) throw DimensionMismatch("objective_gradient: covariance size mismatch");
  Matrix g = Matrix::Zero(n, n);
  for (int j = 0; j < datum.m(); ++j) {
    const Matrix& b = datum.map(j);
    const Eigen::LLT<Matrix> llt = pushforward_factor(b * k * b.transpose(), j);
    g += datum.d()[j] * b.transpose() * llt.solve(b);
  }
  return SymMatrix(g);
}

double independent_value(const Datum& datum, const std::vector<PdMatrix>& marginals) {
  return objective_value(datum, datum.decomposition().block_diagonal(marginals));
}

CouplingSolution max_coupling(const Datum& datum, const std::vector<PdMatrix>& marginals,
                              const ConstraintFunction& nu, const SolverOptions& opts) {
  const Decomposition& dec = datum.decomposition();
  dec.require_marginals(marginals);
  nu.validate(dec.k());
  require_surjective(datum);

  CouplingBarrier barrier(datum, marginals, nu);
  const int nv = barrier.variables();
  Vector x = Vector::Zero(nv);

  // Envelope gradient of the barrier optimum with respect to each K_i.
  auto envelope_gradient = [&](const Evaluation& ev, double tt) {
    const double mu = 1.0 / tt;
    const auto& cons = barrier.constraints();
    std::vector<Matrix> out;
    for (int i = 0; i < dec.k(); ++i) {
      Matrix g = dec.block(ev.r, i);
      if (nv > 0) {
        g += mu * dec.block(ev.k_inv, i);
        const Matrix ki_inv = marginals[i].inverse();
        for (std::size_t c = 0; c < cons.size(); ++c) {
          const Subset& sub = cons[c].subset;
          if (!std::binary_search(sub.begin(), sub.end(), i)) continue;
          g += (mu / ev.slack[c]) * (dec.block(ev.ks_inv[c], i) - ki_inv);
        }
      }
      out.push_back(0.5 * (g + g.transpose()));
    }
    return out;
  };

  CouplingSolution sol;
  double t = 1.0;
  int iterations = 0;
  bool converged = false;
  Evaluation e;
  // At a rank-deficient optimum mu K^{-1} loses about cond(K) * eps relative accuracy, and cond(K)
  // grows like 1/mu along the path, while the path itself moves the gradient by O(mu). The gradient
  // is therefore taken at the first centering point with gap <= kGradientGap.
  std::vector<Matrix> gradient;
  Evaluation dual_point;
  double dual_t = 0.0;
  for (;;) {
    // Newton centering for t f + log det K + sum_S log l_S.
    bool exhausted = false;
    double previous_decrement = std::numeric_limits<double>::infinity();
    for (;;) {
      e = barrier.evaluate(x, t, true);
      if (!e.feasible) throw NoConvergence("max_coupling: lost feasibility");
      if (nv == 0) break;
      Eigen::LDLT<Matrix> ldlt(-e.hess);
      const Vector dx = ldlt.solve(e.grad);
      const double decrement = e.grad.dot(dx);
      if (!std::isfinite(decrement) || decrement <= 2e-14) break;
      // Rounding floor: the decrement stopped shrinking inside the quadratic region.
      if (decrement < 0.1 && decrement >= 0.5 * previous_decrement) break;
      previous_decrement = decrement;
      double step = 1.0;
      bool accepted = false;
      while (step > 1e-16) {
        const Vector trial = x + step * dx;
        const Evaluation et = barrier.evaluate(trial, t, false);
        // Inside the quadratic region the full step is safe; the Armijo test cannot resolve it once t f is large.
        const bool quadratic = step == 1.0 && decrement < 0.1;
        if (et.feasible && (quadratic || phi_increase(e, et, t) >= 0.25 * step * decrement)) {
          x = trial;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      ++iterations;
      if (!accepted) break;
      if (iterations >= opts.max_iters) {
        exhausted = true;
        e = barrier.evaluate(x, t, true);
        break;
      }
    }
    sol.value_trace.push_back(e.f);
    if (exhausted) break;
    if (gradient.empty() && nv > 0 && barrier.theta() / t <= kGradientGap) {
      gradient = envelope_gradient(e, t);
      dual_point = e;
      dual_t = t;
    }
    if (nv == 0 || barrier.theta() / t <= opts.tol) {
      converged = true;
      break;
    }
    t *= 10.0;
  }

  if (gradient.empty()) {
    dual_point = e;
    dual_t = t;
  }
  sol.optimizer = CouplingCovariance(dec, SymMatrix(e.k));
  sol.value = e.f;
  sol.iterations = iterations;
  sol.converged = converged;
  sol.suboptimality_bound = nv == 0 ? 0.0 : barrier.theta() / t;

  const auto& cons = barrier.constraints();
  for (std::size_t c = 0; c < cons.size(); ++c) {
    const double lambda = 2.0 / (dual_t * dual_point.slack[c]);
    sol.multipliers[cons[c].subset] = lambda;
    if (0.5 * e.slack[c] <= 1e-5 * std::max(1.0, cons[c].bound)) sol.active_constraints.push_back(cons[c].subset);
  }
  for (const auto& [s, b] : nu.entries()) {
    if (b == 0.0) {
      // Structural constraint: report as active; its multiplier is not identified by the barrier.
      sol.multipliers[s] = 0.0;
      sol.active_constraints.push_back(s);
    }
  }

  const double max_diag = e.k.diagonal().maxCoeff();
  bool boundary = gausscouple::min_eigenvalue(SymMatrix(e.k)) <= 1e-6 * max_diag;
  for (std::size_t c = 0; c < cons.size(); ++c) boundary = boundary || 0.5 * e.slack[c] <= 1e-6;
  sol.boundary = boundary;

  sol.marginal_gradient = gradient.empty() ? envelope_gradient(e, t) : std::move(gradient);
  return sol;
}

CouplingCovariance project_feasible(const Decomposition& dec, const std::vector<PdMatrix>& marginals,
                                    const SymMatrix& m, int max_iters) {
  dec.require_marginals(marginals);
  if (m.dim() != dec.total()) throw DimensionMismatch("project_feasible: matrix size mismatch");
  const int n = dec.total();
  Matrix x = m.matrix();
  Matrix p = Matrix::Zero(n, n);
  Matrix q = Matrix::Zero(n, n);
  for (int it = 0; it < max_iters; ++it) {
    const Spectrum s = jacobi_eigen(SymMatrix(x + p));
    const Matrix y = spectral_apply(s, [](double v) { return std::max(v, 0.0); }).matrix();
    p = x + p - y;
    Matrix next = y + q;
    for (int i = 0; i < dec.k(); ++i) next.block(dec.offset(i), dec.offset(i), dec.dim(i), dec.dim(i)) = marginals[i].matrix();
    q = y + q - next;
    const double change = (next - x).norm();
    x = next;
    if (change < 1e-11) return CouplingCovariance(dec, SymMatrix(x));
  }
  throw NoConvergence("project_feasible: no convergence after " + std::to_string(max_iters) + " iterations");
}

}  // namespace gausscouple
