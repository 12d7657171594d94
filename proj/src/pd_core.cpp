#include "gausscouple/pd_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gausscouple {

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimensionMismatch("SymMatrix: expected a non-empty square matrix, got " +
                            std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(int dim) { return SymMatrix(Matrix::Identity(dim, dim)); }
SymMatrix SymMatrix::zero(int dim) { return SymMatrix(Matrix::Zero(dim, dim)); }
SymMatrix SymMatrix::diagonal(const Vector& diag) { return SymMatrix(Matrix(diag.asDiagonal())); }

PdMatrix::PdMatrix(const SymMatrix& s) : base_(s) {
  const Matrix& a = base_.matrix();
  const int n = base_.dim();
  const double max_diag = a.diagonal().maxCoeff();
  if (!(max_diag > 0.0)) throw NotPositiveDefinite("PdMatrix: non-positive diagonal");
  const double pivot_floor = 1e-12 * max_diag;

  chol_ = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double pivot = a(j, j) - chol_.row(j).head(j).squaredNorm();
    if (!(pivot >= pivot_floor)) {
      throw NotPositiveDefinite("PdMatrix: Cholesky pivot " + std::to_string(pivot) +
                                " below tolerance at index " + std::to_string(j));
    }
    const double ljj = std::sqrt(pivot);
    chol_(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      chol_(i, j) = (a(i, j) - chol_.row(i).head(j).dot(chol_.row(j).head(j))) / ljj;
    }
  }
}

Matrix PdMatrix::inverse() const {
  const int n = dim();
  Matrix linv = chol_.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
  Matrix inv = linv.transpose() * linv;
  return 0.5 * (inv + inv.transpose());
}

Matrix Spectrum::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

Spectrum jacobi_eigen(const SymMatrix& s) {
  Matrix a = s.matrix();
  const int n = s.dim();
  Matrix v = Matrix::Identity(n, n);

  const double norm = a.norm();
  if (norm > 0.0) {
    const double threshold = 1e-13 * norm;
    auto off_norm = [&]() {
      double acc = 0.0;
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
          if (p != q) acc += a(p, q) * a(p, q);
      return std::sqrt(acc);
    };
    for (int sweep = 0; sweep < 100 && off_norm() >= threshold; ++sweep) {
      for (int p = 0; p < n - 1; ++p) {
        for (int q = p + 1; q < n; ++q) {
          const double apq = a(p, q);
          if (apq == 0.0) continue;
          const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
          const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
          const double c = 1.0 / std::sqrt(1.0 + t * t);
          const double sn = t * c;
          // A <- J^T A J with J the (p, q) rotation.
          for (int k = 0; k < n; ++k) {
            const double akp = a(k, p);
            const double akq = a(k, q);
            a(k, p) = c * akp - sn * akq;
            a(k, q) = sn * akp + c * akq;
          }
          for (int k = 0; k < n; ++k) {
            const double apk = a(p, k);
            const double aqk = a(q, k);
            a(p, k) = c * apk - sn * aqk;
            a(q, k) = sn * apk + c * aqk;
          }
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          for (int k = 0; k < n; ++k) {
            const double vkp = v(k, p);
            const double vkq = v(k, q);
            v(k, p) = c * vkp - sn * vkq;
            v(k, q) = sn * vkp + c * vkq;
          }
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) > a(y, y); });

  Spectrum out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.eigenvalues(i) = a(order[i], order[i]);
    out.eigenvectors.col(i) = v.col(order[i]);
  }
  return out;
}

SymMatrix spectral_apply(const Spectrum& s, const std::function<double(double)>& f) {
  Vector mapped = s.eigenvalues.unaryExpr(f);
  return SymMatrix(s.eigenvectors * mapped.asDiagonal() * s.eigenvectors.transpose());
}

double log_det(const PdMatrix& a) { return 2.0 * a.cholesky().diagonal().array().log().sum(); }

PdMatrix power_pd(const PdMatrix& a, double t) {
  return PdMatrix(spectral_apply(jacobi_eigen(a.sym()), [t](double x) { return std::pow(x, t); }));
}

PdMatrix sqrt_pd(const PdMatrix& a) {
  return PdMatrix(spectral_apply(jacobi_eigen(a.sym()), [](double x) { return std::sqrt(x); }));
}

PdMatrix inv_sqrt_pd(const PdMatrix& a) {
  return PdMatrix(spectral_apply(jacobi_eigen(a.sym()), [](double x) { return 1.0 / std::sqrt(x); }));
}

PdMatrix expm_sym(const SymMatrix& a) {
  return PdMatrix(spectral_apply(jacobi_eigen(a), [](double x) { return std::exp(x); }));
}

SymMatrix logm_pd(const PdMatrix& a) {
  return spectral_apply(jacobi_eigen(a.sym()), [](double x) { return std::log(x); });
}

namespace {

void require_same_dim(const PdMatrix& a, const PdMatrix& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch(std::string(what) + ": dimension mismatch " + std::to_string(a.dim()) +
                            " vs " + std::to_string(b.dim()));
  }
}

// Spectral square root and inverse square root from a single decomposition.
struct RootPair {
  Matrix root;
  Matrix inv_root;
};

RootPair roots(const PdMatrix& a) {
  const Spectrum s = jacobi_eigen(a.sym());
  return {spectral_apply(s, [](double x) { return std::sqrt(x); }).matrix(),
          spectral_apply(s, [](double x) { return 1.0 / std::sqrt(x); }).matrix()};
}

}  // namespace

PdMatrix geometric_mean(const PdMatrix& a, const PdMatrix& b, double t) {
  require_same_dim(a, b, "geometric_mean");
  const RootPair r = roots(a);
  const SymMatrix inner(r.inv_root * b.matrix() * r.inv_root);
  const SymMatrix powered = spectral_apply(jacobi_eigen(inner), [t](double x) { return std::pow(x, t); });
  return PdMatrix(SymMatrix(r.root * powered.matrix() * r.root));
}

Vector relative_eigenvalues(const PdMatrix& a, const PdMatrix& b) {
  require_same_dim(a, b, "relative_eigenvalues");
  const auto l = a.cholesky().triangularView<Eigen::Lower>();
  Matrix x = l.solve(b.matrix());
  Matrix y = l.solve(x.transpose());
  return jacobi_eigen(SymMatrix(y)).eigenvalues;
}

double delta2(const PdMatrix& a, const PdMatrix& b) {
  require_same_dim(a, b, "delta2");
  // Lexicographic order on the entries fixes which argument is factored.
  const Matrix& ma = a.matrix();
  const Matrix& mb = b.matrix();
  bool swap = false;
  for (Eigen::Index i = 0; i < ma.size(); ++i) {
    if (ma.data()[i] != mb.data()[i]) {
      swap = ma.data()[i] > mb.data()[i];
      break;
    }
  }
  const Vector ev = swap ? relative_eigenvalues(b, a) : relative_eigenvalues(a, b);
  return std::sqrt(ev.array().log().square().sum());
}

PdMatrix exp_map(const PdMatrix& base, const SymMatrix& tangent) {
  if (base.dim() != tangent.dim()) throw DimensionMismatch("exp_map: dimension mismatch");
  const RootPair r = roots(base);
  const SymMatrix inner(r.inv_root * tangent.matrix() * r.inv_root);
  const PdMatrix e = expm_sym(inner);
  return PdMatrix(SymMatrix(r.root * e.matrix() * r.root));
}

SymMatrix log_map(const PdMatrix& base, const PdMatrix& point) {
  require_same_dim(base, point, "log_map");
  const RootPair r = roots(base);
  const PdMatrix inner(SymMatrix(r.inv_root * point.matrix() * r.inv_root));
  return SymMatrix(r.root * logm_pd(inner).matrix() * r.root);
}

double hs_inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

double min_eigenvalue(const SymMatrix& a) { return jacobi_eigen(a).eigenvalues.minCoeff(); }

}  // namespace gausscouple
