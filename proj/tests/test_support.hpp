#pragma once

#include <cmath>
#include <random>

#include "gausscouple/pd_core.hpp"

namespace gctest {

using gausscouple::Matrix;
using gausscouple::PdMatrix;
using gausscouple::SymMatrix;

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// G G^T / n + floor * I, moderately conditioned.
inline PdMatrix random_pd(std::mt19937_64& rng, int n, double floor = 0.2) {
  Matrix g = random_matrix(rng, n, n);
  return PdMatrix(Matrix(g * g.transpose() / n + floor * Matrix::Identity(n, n)));
}

inline Matrix random_psd(std::mt19937_64& rng, int n, double scale = 0.5) {
  Matrix g = random_matrix(rng, n, n);
  return scale * g * g.transpose() / n;
}

inline double rel_frob(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace gctest

#include "gausscouple/datum.hpp"

namespace gctest {

// Random datum with k <= max_k blocks of dimension <= max_dim and m <= max_m maps.
// Every map is surjective (codomain dimension at most the total dimension, Gaussian entries).
inline gausscouple::Datum random_datum(std::mt19937_64& rng, int max_k = 3, int max_dim = 3, int max_m = 3) {
  std::uniform_int_distribution<int> kd(1, max_k), dd(1, max_dim), md(1, max_m);
  std::uniform_real_distribution<double> w(0.2, 1.0);
  const int k = kd(rng);
  std::vector<int> dims(k);
  int total = 0;
  for (int& x : dims) total += (x = dd(rng));
  const int m = md(rng);
  std::vector<Matrix> maps;
  std::vector<double> d;
  std::uniform_int_distribution<int> rows(1, total);
  for (int j = 0; j < m; ++j) {
    maps.push_back(random_matrix(rng, rows(rng), total));
    d.push_back(w(rng));
  }
  return gausscouple::Datum(gausscouple::Decomposition(dims), std::vector<double>(k, 0.0), d, maps);
}

inline std::vector<PdMatrix> random_marginals(std::mt19937_64& rng, const gausscouple::Decomposition& dec) {
  std::vector<PdMatrix> out;
  for (int i = 0; i < dec.k(); ++i) out.push_back(random_pd(rng, dec.dim(i)));
  return out;
}

}  // namespace gctest
