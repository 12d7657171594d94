#include "gausscouple/dual_cert.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gausscouple {

namespace {

Matrix diag_u(const Decomposition& dec, const std::vector<SymMatrix>& u) {
  Matrix out = Matrix::Zero(dec.total(), dec.total());
  for (int i = 0; i < dec.k(); ++i) out.block(dec.offset(i), dec.offset(i), dec.dim(i), dec.dim(i)) = u[i].matrix();
  return out;
}

Matrix pulled_back(const Datum& datum, const std::vector<Matrix>& v) {
  const int n = datum.decomposition().total();
  Matrix r = Matrix::Zero(n, n);
  for (int j = 0; j < datum.m(); ++j) r += datum.d()[j] * datum.map(j).transpose() * v[j] * datum.map(j);
  return 0.5 * (r + r.transpose());
}

bool factor_ok(const Eigen::LLT<Matrix>& llt) {
  return llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all() &&
         llt.matrixLLT().diagonal().allFinite();
}

double llt_log_det(const Eigen::LLT<Matrix>& llt) { return 2.0 * llt.matrixLLT().diagonal().array().log().sum(); }

// Symmetric basis element of a dim x dim space for the (a, b), a <= b, entry.
Matrix basis(int dim, int a, int b) {
  Matrix e = Matrix::Zero(dim, dim);
  e(a, b) = 1.0;
  e(b, a) = 1.0;
  return e;
}

struct Variable {
  bool is_u;
  int index;  // block i or map j
  Matrix local;  // basis element in the block or codomain
  Matrix slack_direction;  // d S / d y on E_0
  double linear;  // d <U_i, K_i> / d y
};

struct DualEvaluation {
  bool feasible = false;
  double linear = 0.0;     // sum_i <U_i, K_i>
  double log_det_v = 0.0;  // sum_j d_j log det V_j
  double log_det_s = 0.0;
  Vector grad;
  Matrix hess;
};

class DualBarrier {
 public:
  DualBarrier(const Datum& datum, const std::vector<PdMatrix>& marginals) : datum_(datum), marginals_(marginals) {
    const Decomposition& dec = datum.decomposition();
    const int n = dec.total();
    for (int i = 0; i < dec.k(); ++i) {
      for (int a = 0; a < dec.dim(i); ++a) {
        for (int b = a; b < dec.dim(i); ++b) {
          Matrix local = basis(dec.dim(i), a, b);
          Matrix dir = Matrix::Zero(n, n);
          dir.block(dec.offset(i), dec.offset(i), dec.dim(i), dec.dim(i)) = local;
          vars_.push_back({true, i, local, dir, (local.array() * marginals[i].matrix().array()).sum()});
        }
      }
    }
    for (int j = 0; j < datum.m(); ++j) {
      const int r = datum.codomain_dim(j);
      for (int a = 0; a < r; ++a) {
        for (int b = a; b < r; ++b) {
          Matrix local = basis(r, a, b);
          Matrix dir = -datum.d()[j] * datum.map(j).transpose() * local * datum.map(j);
          vars_.push_back({false, j, local, dir, 0.0});
        }
      }
    }
  }

  int variables() const { return static_cast<int>(vars_.size()); }

  void unpack(const Vector& y, std::vector<SymMatrix>& u, std::vector<Matrix>& v) const {
    const Decomposition& dec = datum_.decomposition();
    std::vector<Matrix> um(dec.k());
    for (int i = 0; i < dec.k(); ++i) um[i] = Matrix::Zero(dec.dim(i), dec.dim(i));
    v.assign(datum_.m(), Matrix());
    for (int j = 0; j < datum_.m(); ++j) v[j] = Matrix::Zero(datum_.codomain_dim(j), datum_.codomain_dim(j));
    for (int a = 0; a < variables(); ++a) {
      if (vars_[a].is_u) {
        um[vars_[a].index] += y(a) * vars_[a].local;
      } else {
        v[vars_[a].index] += y(a) * vars_[a].local;
      }
    }
    u.clear();
    for (auto& m : um) u.emplace_back(m);
  }

  Vector pack(const std::vector<SymMatrix>& u, const std::vector<Matrix>& v) const {
    Vector y(variables());
    const Decomposition& dec = datum_.decomposition();
    int at = 0;
    for (int i = 0; i < dec.k(); ++i)
      for (int a = 0; a < dec.dim(i); ++a)
        for (int b = a; b < dec.dim(i); ++b) y(at++) = u[i](a, b);
    for (int j = 0; j < datum_.m(); ++j)
      for (int a = 0; a < datum_.codomain_dim(j); ++a)
        for (int b = a; b < datum_.codomain_dim(j); ++b) y(at++) = v[j](a, b);
    return y;
  }

  DualEvaluation evaluate(const Vector& y, double t, bool derivatives) const {
    DualEvaluation e;
    std::vector<SymMatrix> u;
    std::vector<Matrix> v;
    unpack(y, u, v);
    const Decomposition& dec = datum_.decomposition();
    for (int i = 0; i < dec.k(); ++i) e.linear += (u[i].matrix().array() * marginals_[i].matrix().array()).sum();
    std::vector<Matrix> v_inv(datum_.m());
    for (int j = 0; j < datum_.m(); ++j) {
      Eigen::LLT<Matrix> vf(v[j]);
      if (!factor_ok(vf)) return e;
      e.log_det_v += datum_.d()[j] * llt_log_det(vf);
      if (derivatives) v_inv[j] = vf.solve(Matrix::Identity(v[j].rows(), v[j].rows()));
    }
    const Matrix s = diag_u(dec, u) - pulled_back(datum_, v);
    Eigen::LLT<Matrix> sf(s);
    if (!factor_ok(sf)) return e;
    e.log_det_s = llt_log_det(sf);
    e.feasible = true;
    if (!derivatives) return e;

    const int nv = variables();
    e.grad = Vector::Zero(nv);
    e.hess = Matrix::Zero(nv, nv);
    std::vector<Matrix> ws(nv);
    std::vector<Matrix> wv(nv);
    for (int a = 0; a < nv; ++a) {
      ws[a] = sf.solve(vars_[a].slack_direction);
      e.grad(a) = t * vars_[a].linear - ws[a].trace();
      if (!vars_[a].is_u) {
        const int j = vars_[a].index;
        wv[a] = v_inv[j] * vars_[a].local;
        e.grad(a) -= t * datum_.d()[j] * wv[a].trace();
      }
    }
    for (int a = 0; a < nv; ++a) {
      for (int b = 0; b <= a; ++b) {
        double h = (ws[a].array() * ws[b].transpose().array()).sum();
        if (!vars_[a].is_u && !vars_[b].is_u && vars_[a].index == vars_[b].index) {
          h += t * datum_.d()[vars_[a].index] * (wv[a].array() * wv[b].transpose().array()).sum();
        }
        e.hess(a, b) = h;
        e.hess(b, a) = h;
      }
    }
    return e;
  }

 private:
  const Datum& datum_;
  const std::vector<PdMatrix>& marginals_;
  std::vector<Variable> vars_;
};

// psi(b) - psi(a) for psi = t (linear - log det V) - log det S.
double psi_change(const DualEvaluation& a, const DualEvaluation& b, double t) {
  return t * ((b.linear - a.linear) - (b.log_det_v - a.log_det_v)) - (b.log_det_s - a.log_det_s);
}

}  // namespace

DualCertificate make_certificate(const Datum& datum, const std::vector<PdMatrix>& marginals,
                                 std::vector<SymMatrix> u, std::vector<PdMatrix> v) {
  const Decomposition& dec = datum.decomposition();
  dec.require_marginals(marginals);
  if (static_cast<int>(u.size()) != dec.k() || static_cast<int>(v.size()) != datum.m())
    throw DimensionMismatch("make_certificate: wrong number of U or V matrices");
  std::vector<Matrix> vm;
  DualCertificate cert;
  for (int i = 0; i < dec.k(); ++i) {
    if (u[i].dim() != dec.dim(i)) throw DimensionMismatch("make_certificate: U block size mismatch");
    cert.value += hs_inner(u[i].matrix(), marginals[i].matrix());
  }
  for (int j = 0; j < datum.m(); ++j) {
    if (v[j].dim() != datum.codomain_dim(j)) throw DimensionMismatch("make_certificate: V size mismatch");
    cert.value -= datum.d()[j] * log_det(v[j]);
    vm.push_back(v[j].matrix());
  }
  cert.slack = SymMatrix(diag_u(dec, u) - pulled_back(datum, vm));
  cert.U = std::move(u);
  cert.V = std::move(v);
  cert.converged = true;
  return cert;
}

DualCertificate feasible_certificate(const Datum& datum, const std::vector<PdMatrix>& marginals,
                                     const std::vector<PdMatrix>& v) {
  const Decomposition& dec = datum.decomposition();
  std::vector<Matrix> vm;
  for (const PdMatrix& x : v) vm.push_back(x.matrix());
  if (static_cast<int>(vm.size()) != datum.m()) throw DimensionMismatch("feasible_certificate: wrong number of V");
  const Matrix r = pulled_back(datum, vm);
  const Matrix bd = dec.block_diagonal_part(r);
  const double s = std::max(0.0, -min_eigenvalue(SymMatrix(bd - r))) + 1e-12;
  std::vector<SymMatrix> u;
  for (int i = 0; i < dec.k(); ++i) u.emplace_back(Matrix(dec.block(bd, i) + s * Matrix::Identity(dec.dim(i), dec.dim(i))));
  return make_certificate(datum, marginals, std::move(u), v);
}

DualCertificate solve_dual(const Datum& datum, const std::vector<PdMatrix>& marginals, const SolverOptions& opts) {
  const Decomposition& dec = datum.decomposition();
  dec.require_marginals(marginals);
  require_surjective(datum);
  const int n = dec.total();

  // Strictly feasible start: V_j = (B_j D B_j^T)^{-1} at the independent coupling D.
  const Matrix d = dec.block_diagonal(marginals);
  std::vector<Matrix> v0;
  for (int j = 0; j < datum.m(); ++j) {
    const Matrix& b = datum.map(j);
    v0.push_back(PdMatrix(Matrix(b * d * b.transpose())).inverse());
  }
  const Matrix r = pulled_back(datum, v0);
  const Matrix bd = dec.block_diagonal_part(r);
  const double margin = 0.1 * std::max(1e-3, r.diagonal().maxCoeff());
  const double s = std::max(0.0, -min_eigenvalue(SymMatrix(bd - r))) + margin;
  std::vector<SymMatrix> u0;
  for (int i = 0; i < dec.k(); ++i) u0.emplace_back(Matrix(dec.block(bd, i) + s * Matrix::Identity(dec.dim(i), dec.dim(i))));

  DualBarrier barrier(datum, marginals);
  Vector y = barrier.pack(u0, v0);
  const int nv = barrier.variables();
  const double theta = n;
  double t = 1.0;
  int iterations = 0;
  bool converged = false;
  bool exhausted = false;
  for (;;) {
    for (;;) {
      const DualEvaluation e = barrier.evaluate(y, t, true);
      if (!e.feasible) throw NoConvergence("solve_dual: lost feasibility");
      Eigen::LDLT<Matrix> ldlt(e.hess);
      const Vector dy = -ldlt.solve(e.grad);
      const double decrement = -e.grad.dot(dy);
      if (!std::isfinite(decrement) || decrement <= 2e-14) break;
      double step = 1.0;
      bool accepted = false;
      while (step > 1e-16) {
        const Vector trial = y + step * dy;
        const DualEvaluation et = barrier.evaluate(trial, t, false);
        if (et.feasible && psi_change(e, et, t) <= -0.25 * step * decrement) {
          y = trial;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      ++iterations;
      if (!accepted) break;
      if (iterations >= opts.max_iters) {
        exhausted = true;
        break;
      }
    }
    if (exhausted) break;
    if (theta / t <= opts.gap_tol) {
      converged = true;
      break;
    }
    t *= 10.0;
  }
  (void)nv;

  std::vector<SymMatrix> u;
  std::vector<Matrix> v;
  barrier.unpack(y, u, v);
  std::vector<PdMatrix> vp;
  for (const Matrix& m : v) vp.emplace_back(m);
  DualCertificate cert = make_certificate(datum, marginals, std::move(u), std::move(vp));
  cert.iterations = iterations;
  cert.converged = converged;
  cert.suboptimality_bound = theta / t;
  return cert;
}

double duality_gap(const Datum& datum, const CouplingSolution& primal, const DualCertificate& cert) {
  return cert.value - (primal.value + datum.weighted_codomain_dim());
}

double certificate_violation(const DualCertificate& cert) {
  double scale = 0.0;
  for (const SymMatrix& u : cert.U) scale = std::max(scale, u.matrix().diagonal().maxCoeff());
  const double lam = min_eigenvalue(cert.slack);
  return scale > 0.0 ? lam / scale : lam;
}

}  // namespace gausscouple
