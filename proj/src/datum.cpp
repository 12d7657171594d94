#include "gausscouple/datum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace gausscouple {

Decomposition::Decomposition(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw DimensionMismatch("Decomposition: need at least one block");
  offsets_.reserve(dims_.size());
  for (int d : dims_) {
    if (d < 1) throw DimensionMismatch("Decomposition: block dimensions must be >= 1");
    offsets_.push_back(total_);
    total_ += d;
  }
}

Matrix Decomposition::block(const Matrix& m, int i) const { return sub_block(m, i, i); }

Matrix Decomposition::sub_block(const Matrix& m, int i, int j) const {
  return m.block(offset(i), offset(j), dim(i), dim(j));
}

std::vector<int> Decomposition::coordinates(const std::vector<int>& subset) const {
  std::vector<int> idx;
  for (int b : subset)
    for (int a = 0; a < dim(b); ++a) idx.push_back(offset(b) + a);
  return idx;
}

Matrix Decomposition::principal(const Matrix& m, const std::vector<int>& subset) const {
  const std::vector<int> idx = coordinates(subset);
  const int n = static_cast<int>(idx.size());
  Matrix out(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) out(r, c) = m(idx[r], idx[c]);
  return out;
}

Matrix Decomposition::block_diagonal(const std::vector<PdMatrix>& blocks) const {
  require_marginals(blocks);
  Matrix out = Matrix::Zero(total_, total_);
  for (int i = 0; i < k(); ++i) out.block(offset(i), offset(i), dim(i), dim(i)) = blocks[i].matrix();
  return out;
}

Matrix Decomposition::block_diagonal_part(const Matrix& m) const {
  Matrix out = Matrix::Zero(total_, total_);
  for (int i = 0; i < k(); ++i)
    out.block(offset(i), offset(i), dim(i), dim(i)) = m.block(offset(i), offset(i), dim(i), dim(i));
  return out;
}

void Decomposition::require_marginals(const std::vector<PdMatrix>& marginals) const {
  if (static_cast<int>(marginals.size()) != k()) {
    throw DimensionMismatch("expected " + std::to_string(k()) + " marginals, got " +
                            std::to_string(marginals.size()));
  }
  for (int i = 0; i < k(); ++i) {
    if (marginals[i].dim() != dim(i)) {
      throw DimensionMismatch("marginal " + std::to_string(i) + " has dimension " +
                              std::to_string(marginals[i].dim()) + ", block has " + std::to_string(dim(i)));
    }
  }
}

ConstraintFunction ConstraintFunction::zero(int k) {
  ConstraintFunction nu;
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    Subset s;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) s.push_back(i);
    if (s.size() >= 2) nu.entries_[s] = 0.0;
  }
  return nu;
}

ConstraintFunction ConstraintFunction::pair(double bound) {
  ConstraintFunction nu;
  nu.set({0, 1}, bound);
  return nu;
}

void ConstraintFunction::set(Subset s, double bound) {
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end())
    throw SchemaError("constraint subset has repeated indices");
  if (s.size() < 2) throw SchemaError("constraint subsets need at least two blocks");
  if (s.front() < 0) throw SchemaError("constraint subset index out of range");
  if (std::isnan(bound) || bound < 0.0) throw SchemaError("constraint bounds must be >= 0");
  if (std::isinf(bound)) {
    entries_.erase(s);
    return;
  }
  entries_[s] = bound;
}

std::optional<double> ConstraintFunction::bound(const Subset& s) const {
  auto it = entries_.find(s);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ConstraintFunction::validate(int k) const {
  for (const auto& [s, b] : entries_) {
    if (s.back() >= k) {
      throw SchemaError("constraint subset refers to block " + std::to_string(s.back() + 1) +
                        " but there are only " + std::to_string(k) + " blocks");
    }
  }
}

Datum::Datum(Decomposition decomposition, std::vector<double> c, std::vector<double> d,
             std::vector<Matrix> maps)
    : decomposition_(std::move(decomposition)), c_(std::move(c)), d_(std::move(d)), maps_(std::move(maps)) {
  if (static_cast<int>(c_.size()) != decomposition_.k())
    throw DimensionMismatch("datum: c has " + std::to_string(c_.size()) + " entries, expected " +
                            std::to_string(decomposition_.k()));
  if (maps_.empty()) throw DimensionMismatch("datum: need at least one map");
  if (d_.size() != maps_.size())
    throw DimensionMismatch("datum: d has " + std::to_string(d_.size()) + " entries but there are " +
                            std::to_string(maps_.size()) + " maps");
  for (double ci : c_)
    if (!(ci >= 0.0) || !std::isfinite(ci)) throw SchemaError("datum: c entries must be finite and >= 0");
  for (double dj : d_)
    if (!(dj > 0.0) || !std::isfinite(dj)) throw SchemaError("datum: d entries must be finite and > 0");
  for (std::size_t j = 0; j < maps_.size(); ++j) {
    if (maps_[j].cols() != decomposition_.total() || maps_[j].rows() < 1) {
      throw DimensionMismatch("datum: map " + std::to_string(j) + " is " + std::to_string(maps_[j].rows()) +
                              "x" + std::to_string(maps_[j].cols()) + ", expected columns " +
                              std::to_string(decomposition_.total()));
    }
  }
}

double Datum::weighted_codomain_dim() const {
  double s = 0.0;
  for (int j = 0; j < m(); ++j) s += d_[j] * codomain_dim(j);
  return s;
}

double Datum::weighted_domain_dim() const {
  double s = 0.0;
  for (int i = 0; i < k(); ++i) s += c_[i] * decomposition_.dim(i);
  return s;
}

Datum Datum::with_c(std::vector<double> c) const { return Datum(decomposition_, std::move(c), d_, maps_); }
Datum Datum::with_d(std::vector<double> d) const { return Datum(decomposition_, c_, std::move(d), maps_); }

bool check_scaling(const Datum& datum) {
  const double rhs = datum.weighted_codomain_dim();
  return std::abs(datum.weighted_domain_dim() - rhs) <= 1e-9 * rhs;
}

namespace {

// Singular values above 1e-9 * scale.
int rank_at_scale(const Matrix& m, double scale) {
  if (m.size() == 0 || !(scale > 0.0)) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  const double tol = 1e-9 * scale;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return rank;
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

}  // namespace

int numerical_rank(const Matrix& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double tol = 1e-9 * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return rank;
}

void require_surjective(const Datum& datum) {
  for (int j = 0; j < datum.m(); ++j) {
    const int r = numerical_rank(datum.map(j));
    if (r < datum.codomain_dim(j)) throw NonSurjectiveMap(j, r, datum.codomain_dim(j));
  }
}

namespace {

// Orthonormal basis of the null space of m (columns).
Matrix null_space(const Matrix& m) {
  const int n = static_cast<int>(m.cols());
  if (m.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const int r = numerical_rank(m);
  return svd.matrixV().rightCols(n - r);
}

struct TupleEvaluation {
  double lhs;
  double rhs;
};

TupleEvaluation evaluate_tuple(const Datum& datum, const std::vector<Matrix>& bases) {
  const Decomposition& dec = datum.decomposition();
  int cols = 0;
  double lhs = 0.0;
  for (int i = 0; i < dec.k(); ++i) {
    cols += static_cast<int>(bases[i].cols());
    lhs += datum.c()[i] * static_cast<double>(bases[i].cols());
  }
  // Embed T = (+)_i T_i into E_0.
  Matrix t = Matrix::Zero(dec.total(), cols);
  int at = 0;
  for (int i = 0; i < dec.k(); ++i) {
    t.block(dec.offset(i), at, dec.dim(i), bases[i].cols()) = bases[i];
    at += static_cast<int>(bases[i].cols());
  }
  double rhs = 0.0;
  if (cols > 0) {
    // T has orthonormal columns, so dim(B_j T) is measured on the scale of B_j itself.
    for (int j = 0; j < datum.m(); ++j)
      rhs += datum.d()[j] * rank_at_scale(datum.map(j) * t, operator_norm(datum.map(j)));
  }
  return {lhs, rhs};
}

std::vector<Subspace> as_witness(const std::vector<Matrix>& bases) {
  std::vector<Subspace> w;
  for (std::size_t i = 0; i < bases.size(); ++i) w.push_back({static_cast<int>(i), bases[i]});
  return w;
}

bool violates(const TupleEvaluation& e) { return e.lhs > e.rhs + 1e-9 * std::max(1.0, std::abs(e.rhs)); }

}  // namespace

DimensionCheck check_dimension_condition(const Datum& datum, int trials, std::uint64_t seed) {
  const Decomposition& dec = datum.decomposition();
  DimensionCheck out;
  auto record = [&](const std::vector<Matrix>& bases, WitnessKind kind) {
    const TupleEvaluation e = evaluate_tuple(datum, bases);
    ++out.tuples_checked;
    if (violates(e)) {
      out.verdict = Verdict::fail;
      out.witness = as_witness(bases);
      out.witness_kind = kind;
      out.lhs = e.lhs;
      out.rhs = e.rhs;
      return true;
    }
    return false;
  };

  // Coordinate-aligned tuples: one bit per coordinate of E_0.
  const int total = dec.total();
  if (total > 24) throw DimensionMismatch("check_dimension_condition: total dimension too large to enumerate");
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << total); ++mask) {
    std::vector<Matrix> bases(dec.k());
    for (int i = 0; i < dec.k(); ++i) {
      std::vector<int> cols;
      for (int a = 0; a < dec.dim(i); ++a)
        if (mask & (std::uint64_t{1} << (dec.offset(i) + a))) cols.push_back(a);
      bases[i] = Matrix::Zero(dec.dim(i), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t q = 0; q < cols.size(); ++q) bases[i](cols[q], static_cast<Eigen::Index>(q)) = 1.0;
    }
    if (record(bases, WitnessKind::coordinate)) return out;
  }

  // Tuples built from {0, E_i, E_i cap ker B_j} for each map j.
  for (int j = 0; j < datum.m(); ++j) {
    std::vector<Matrix> kernels(dec.k());
    for (int i = 0; i < dec.k(); ++i) {
      kernels[i] = null_space(datum.map(j).middleCols(dec.offset(i), dec.dim(i)));
    }
    std::uint64_t combos = 1;
    for (int i = 0; i < dec.k(); ++i) combos *= 3;
    for (std::uint64_t code = 1; code < combos; ++code) {
      std::vector<Matrix> bases(dec.k());
      std::uint64_t rest = code;
      bool has_kernel = false;
      for (int i = 0; i < dec.k(); ++i) {
        const int choice = static_cast<int>(rest % 3);
        rest /= 3;
        if (choice == 0) bases[i] = Matrix::Zero(dec.dim(i), 0);
        if (choice == 1) bases[i] = Matrix::Identity(dec.dim(i), dec.dim(i));
        if (choice == 2) {
          bases[i] = kernels[i];
          has_kernel = has_kernel || kernels[i].cols() > 0;
        }
      }
      if (!has_kernel) continue;
      if (record(bases, WitnessKind::kernel)) return out;
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<Matrix> bases(dec.k());
    for (int i = 0; i < dec.k(); ++i) {
      std::uniform_int_distribution<int> pick(0, dec.dim(i));
      const int r = pick(rng);
      Matrix g(dec.dim(i), std::max(r, 1));
      for (Eigen::Index a = 0; a < g.size(); ++a) g.data()[a] = normal(rng);
      Eigen::HouseholderQR<Matrix> qr(g);
      Matrix q = qr.householderQ() * Matrix::Identity(dec.dim(i), dec.dim(i));
      bases[i] = q.leftCols(r);
    }
    if (record(bases, WitnessKind::random)) return out;
  }
  return out;
}

double s_correlation_gaussian(const Decomposition& dec, const Matrix& k, const Subset& s) {
  if (s.size() <= 1) return 0.0;
  if (k.rows() != dec.total() || k.cols() != dec.total())
    throw DimensionMismatch("s_correlation_gaussian: covariance size does not match decomposition");
  double sum_blocks = 0.0;
  for (int i : s) {
    Eigen::LLT<Matrix> llt(dec.block(k, i));
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("s_correlation_gaussian: singular marginal block");
    sum_blocks += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  const Matrix ks = dec.principal(k, s);
  Eigen::LLT<Matrix> llt(ks);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Vector diag = llt.matrixLLT().diagonal();
  if ((diag.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
  const double ld = 2.0 * diag.array().log().sum();
  return 0.5 * (sum_blocks - ld);
}

double gaussian_entropy(int n, double log_det_cov) {
  return 0.5 * (n * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det_cov);
}

double log_det_for_entropy(int n, double entropy) {
  return 2.0 * entropy - n * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

}  // namespace gausscouple
