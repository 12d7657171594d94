#pragma once

// Block decomposition E_0 = E_1 (+) ... (+) E_k, the datum (c, d, B), the
// constraint function nu on subsets of blocks, and the finiteness checks
// (scaling condition and dimension condition).

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "gausscouple/pd_core.hpp"

namespace gausscouple {

class Decomposition {
 public:
  Decomposition() = default;
  explicit Decomposition(std::vector<int> dims);

  int k() const { return static_cast<int>(dims_.size()); }
  int total() const { return total_; }
  int dim(int block) const { return dims_.at(block); }
  int offset(int block) const { return offsets_.at(block); }
  const std::vector<int>& dims() const { return dims_; }

  // Principal sub-block of an E_0 matrix for block i, and for a subset S.
  Matrix block(const Matrix& m, int i) const;
  Matrix sub_block(const Matrix& m, int i, int j) const;
  Matrix principal(const Matrix& m, const std::vector<int>& subset) const;
  // Coordinates of E_0 covered by the blocks in `subset`, in block order.
  std::vector<int> coordinates(const std::vector<int>& subset) const;

  // blockdiag(K_1, ..., K_k)
  Matrix block_diagonal(const std::vector<PdMatrix>& blocks) const;
  Matrix block_diagonal_part(const Matrix& m) const;

  void require_marginals(const std::vector<PdMatrix>& marginals) const;

 private:
  std::vector<int> dims_;
  std::vector<int> offsets_;
  int total_ = 0;
};

// A subset S of {0, ..., k-1}, sorted and duplicate free.
using Subset = std::vector<int>;

// nu: subsets with |S| >= 2 -> bound in [0, inf). Absent subsets mean +inf,
// so the unconstrained case is the empty map.
class ConstraintFunction {
 public:
  ConstraintFunction() = default;

  static ConstraintFunction unconstrained() { return {}; }
  // nu == 0 on every subset with at least two blocks (independent coupling).
  static ConstraintFunction zero(int k);
  // Single bound on S = {0, 1}.
  static ConstraintFunction pair(double bound);

  // Throws on invalid subsets; a non-finite bound removes the entry.
  void set(Subset s, double bound);
  std::optional<double> bound(const Subset& s) const;

  bool empty() const { return entries_.empty(); }
  const std::map<Subset, double>& entries() const { return entries_; }
  void validate(int k) const;

 private:
  std::map<Subset, double> entries_;
};

class Datum {
 public:
  Datum() = default;
  Datum(Decomposition decomposition, std::vector<double> c, std::vector<double> d,
        std::vector<Matrix> maps);

  const Decomposition& decomposition() const { return decomposition_; }
  int k() const { return decomposition_.k(); }
  int m() const { return static_cast<int>(maps_.size()); }
  const std::vector<double>& c() const { return c_; }
  const std::vector<double>& d() const { return d_; }
  const std::vector<Matrix>& maps() const { return maps_; }
  const Matrix& map(int j) const { return maps_.at(j); }
  int codomain_dim(int j) const { return static_cast<int>(maps_.at(j).rows()); }

  // sum_j d_j dim(E^j)
  double weighted_codomain_dim() const;
  // sum_i c_i dim(E_i)
  double weighted_domain_dim() const;

  Datum with_c(std::vector<double> c) const;
  Datum with_d(std::vector<double> d) const;

 private:
  Decomposition decomposition_;
  std::vector<double> c_;
  std::vector<double> d_;
  std::vector<Matrix> maps_;
};

// Subspace T_i of block E_i given by orthonormal columns (possibly zero columns).
struct Subspace {
  int block_index = 0;
  Matrix basis;

  int dim() const { return static_cast<int>(basis.cols()); }
};

enum class Verdict { pass, fail };

// How a violating tuple was found.
enum class WitnessKind { coordinate, kernel, random };

struct DimensionCheck {
  Verdict verdict = Verdict::pass;
  std::optional<std::vector<Subspace>> witness;
  std::optional<WitnessKind> witness_kind;
  // lhs/rhs of the violated inequality, when failing.
  double lhs = 0.0;
  double rhs = 0.0;
  // Number of subspace tuples examined. A pass certifies only these tuples.
  std::int64_t tuples_checked = 0;
};

bool check_scaling(const Datum& datum);

// Evaluates sum_i c_i dim T_i <= sum_j d_j dim(B_j T) over every
// coordinate-aligned tuple, every tuple built from E_i and E_i cap ker(B_j),
// and `trials` random orthonormal tuples.
DimensionCheck check_dimension_condition(const Datum& datum, int trials, std::uint64_t seed);

// Numerical rank at tolerance 1e-9 times the largest singular value.
int numerical_rank(const Matrix& m);

void require_surjective(const Datum& datum);

// I_S for the Gaussian coupling N(0, K):
// 1/2 (sum_{i in S} log det K_i - log det K_S). Zero for |S| <= 1; +inf when K_S is singular.
double s_correlation_gaussian(const Decomposition& decomposition, const Matrix& k, const Subset& s);

// Entropy of N(0, K) in nats and its inverse on det K.
double gaussian_entropy(int n, double log_det_cov);
double log_det_for_entropy(int n, double entropy);

}  // namespace gausscouple
