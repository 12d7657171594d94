#pragma once

// Dense symmetric / positive-definite matrix kernel.
//
// Everything here operates on small dense matrices (a few dozen rows at
// most). Spectral functions go through a cyclic Jacobi eigensolver so that
// results are deterministic and accurate to working precision.

#include <Eigen/Dense>

#include <functional>

#include "gausscouple/errors.hpp"

namespace gausscouple {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Symmetric matrix, stored in full. The constructor symmetrizes (M + M^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(int dim);
  static SymMatrix zero(int dim);
  static SymMatrix diagonal(const Vector& diag);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  SymMatrix operator+(const SymMatrix& o) const { return SymMatrix(m_ + o.m_); }
  SymMatrix operator-(const SymMatrix& o) const { return SymMatrix(m_ - o.m_); }
  SymMatrix operator*(double s) const { return SymMatrix(m_ * s); }

 private:
  Matrix m_;
};

// Symmetric positive definite matrix with its Cholesky factor cached.
// Construction fails (NotPositiveDefinite) when a Cholesky pivot drops below
// 1e-12 times the largest diagonal entry. No jitter is ever added.
class PdMatrix {
 public:
  PdMatrix() = default;
  explicit PdMatrix(const SymMatrix& s);
  explicit PdMatrix(const Matrix& m) : PdMatrix(SymMatrix(m)) {}

  static PdMatrix identity(int dim) { return PdMatrix(SymMatrix::identity(dim)); }

  int dim() const { return base_.dim(); }
  const SymMatrix& sym() const { return base_; }
  const Matrix& matrix() const { return base_.matrix(); }
  const Matrix& cholesky() const { return chol_; }

  // A^{-1} computed from the cached factor.
  Matrix inverse() const;

 private:
  SymMatrix base_;
  Matrix chol_;
};

// Eigen-decomposition of a symmetric matrix: eigenvalues sorted descending,
// eigenvectors stored as orthonormal columns in the same order.
struct Spectrum {
  Vector eigenvalues;
  Matrix eigenvectors;

  Matrix reconstruct() const;
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm is below
// 1e-13 * ||A||_F.
Spectrum jacobi_eigen(const SymMatrix& a);

// V f(Lambda) V^T for a scalar function applied to the spectrum.
SymMatrix spectral_apply(const Spectrum& s, const std::function<double(double)>& f);

double log_det(const PdMatrix& a);
PdMatrix sqrt_pd(const PdMatrix& a);
PdMatrix inv_sqrt_pd(const PdMatrix& a);
PdMatrix power_pd(const PdMatrix& a, double t);

// Matrix exponential of a symmetric matrix, matrix logarithm of a PD matrix.
PdMatrix expm_sym(const SymMatrix& a);
SymMatrix logm_pd(const PdMatrix& a);

// A #_t B = A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}.
PdMatrix geometric_mean(const PdMatrix& a, const PdMatrix& b, double t = 0.5);

// Eigenvalues of A^{-1} B (via the congruence L^{-1} B L^{-T}), descending.
Vector relative_eigenvalues(const PdMatrix& a, const PdMatrix& b);

// Affine-invariant distance (sum_i log^2 lambda_i(A^{-1} B))^{1/2}.
// Exactly symmetric: arguments are put in a canonical order before evaluation.
double delta2(const PdMatrix& a, const PdMatrix& b);

// base^{1/2} expm(base^{-1/2} T base^{-1/2}) base^{1/2}.
PdMatrix exp_map(const PdMatrix& base, const SymMatrix& tangent);
// Inverse of exp_map: base^{1/2} logm(base^{-1/2} B base^{-1/2}) base^{1/2}.
SymMatrix log_map(const PdMatrix& base, const PdMatrix& point);

double hs_inner(const Matrix& a, const Matrix& b);
double min_eigenvalue(const SymMatrix& a);

}  // namespace gausscouple
