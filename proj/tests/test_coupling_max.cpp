#include "doctest.h"

#include <cmath>
#include <random>

#include "gausscouple/coupling_max.hpp"
#include "gausscouple/oracles.hpp"
#include "test_support.hpp"

using namespace gausscouple;

namespace {

Datum scalar_sum(double d = 1.0) {
  Matrix b(1, 2);
  b << 1, 1;
  return Datum(Decomposition({1, 1}), {0.5, 0.5}, {d}, {b});
}

std::vector<PdMatrix> scalars(double a, double b) {
  return {PdMatrix(Matrix::Constant(1, 1, a)), PdMatrix(Matrix::Constant(1, 1, b))};
}

}  // namespace

TEST_CASE("scalar-sum examples") {
  const Datum datum = scalar_sum();
  const auto k = scalars(1.0, 4.0);
  const CouplingSolution free = max_coupling(datum, k, {});
  CHECK(free.value == doctest::Approx(std::log(9.0)).epsilon(1e-8));
  CHECK(free.optimizer.matrix()(0, 1) == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(free.boundary);

  const double nu = 0.5 * std::log(2.0);
  const CouplingSolution con = max_coupling(datum, k, ConstraintFunction::pair(nu));
  CHECK(con.value == doctest::Approx(std::log(5.0 + 2.0 * std::sqrt(2.0))).epsilon(1e-8));
  CHECK(std::abs(con.value - grid_max_coupling_2x2(1.0, 4.0, 1.0, 1.0, nu, 200001)) < 1e-4);
  REQUIRE(con.active_constraints.size() == 1);
  // KKT: d/dc log(5 + 2c) = lambda dI/dc at c = sqrt(2), I = -1/2 log(1 - c^2/4).
  const double c = std::sqrt(2.0);
  const double lambda = (2.0 / (5.0 + 2.0 * c)) / (c / (4.0 - c * c));
  CHECK(con.multipliers.at(Subset{0, 1}) == doctest::Approx(lambda).epsilon(1e-6));

  const CouplingSolution zero = max_coupling(datum, k, ConstraintFunction::zero(2));
  CHECK(zero.value == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("errors") {
  Matrix b(2, 2);
  b << 1, 1, 2, 2;
  const Datum bad(Decomposition({1, 1}), {0.5, 0.5}, {1.0}, {b});
  CHECK_THROWS_AS(max_coupling(bad, scalars(1, 1), {}), NonSurjectiveMap);
  CHECK_THROWS_AS(max_coupling(scalar_sum(), {PdMatrix::identity(2), PdMatrix::identity(1)}, {}), DimensionMismatch);
  ConstraintFunction nu;
  CHECK_THROWS_AS(nu.set({0}, 1.0), SchemaError);
}

TEST_CASE("agreement with the 2x2 grid oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.2, 3.0), coef(-2.0, 2.0), bound(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    const double k1 = u(rng), k2 = u(rng), b1 = coef(rng), b2 = coef(rng), nu = bound(rng), d = u(rng);
    Matrix b(1, 2);
    b << b1, b2;
    const Datum datum(Decomposition({1, 1}), {0.5, 0.5}, {d}, {b});
    const double solver = max_coupling(datum, scalars(k1, k2), ConstraintFunction::pair(nu)).value;
    const double oracle = grid_max_coupling_2x2(k1, k2, b1, b2, nu, 400001, d);
    CHECK(solver >= oracle - 1e-9);
    CHECK(solver - oracle < 1e-4);
  }
}

TEST_CASE("properties on random data") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 25; ++t) {
    const Datum datum = gctest::random_datum(rng);
    const auto k = gctest::random_marginals(rng, datum.decomposition());
    const CouplingSolution free = max_coupling(datum, k, {});
    REQUIRE(free.converged);
    // Feasibility of the optimizer.
    for (int i = 0; i < datum.k(); ++i) CHECK(gctest::rel_frob(free.optimizer.block(i), k[i].matrix()) < 1e-10);
    CHECK(free.optimizer.min_eigenvalue() >= -1e-12);
    // Monotone centering path.
    for (std::size_t s = 1; s < free.value_trace.size(); ++s)
      CHECK(free.value_trace[s] >= free.value_trace[s - 1] - 1e-10);
    // Independence lower bound and nested constraints.
    const double indep = independent_value(datum, k);
    CHECK(free.value >= indep - 1e-9);
    if (datum.k() >= 2) {
      ConstraintFunction nu;
      std::uniform_real_distribution<double> bound(0.05, 1.0);
      for (int i = 0; i < datum.k(); ++i)
        for (int j = i + 1; j < datum.k(); ++j) nu.set({i, j}, bound(rng));
      const CouplingSolution con = max_coupling(datum, k, nu);
      CHECK(con.value <= free.value + 1e-7);
      CHECK(con.value >= indep - 1e-9);
      CHECK(max_coupling(datum, k, ConstraintFunction::zero(datum.k())).value ==
            doctest::Approx(indep).epsilon(1e-10));
      for (const auto& [s, bnd] : nu.entries())
        CHECK(s_correlation_gaussian(datum.decomposition(), con.optimizer.matrix(), s) <= bnd + 1e-8);
    }
    // Scale equivariance: K_i -> a K_i shifts the value by a sum_j d_j dim E^j log a.
    const double a = 2.5;
    std::vector<PdMatrix> scaled;
    for (const PdMatrix& x : k) scaled.emplace_back(Matrix(a * x.matrix()));
    CHECK(max_coupling(datum, scaled, {}).value ==
          doctest::Approx(free.value + datum.weighted_codomain_dim() * std::log(a)).epsilon(1e-8));
  }
}

TEST_CASE("marginal gradient against finite differences") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    const Datum datum = gctest::random_datum(rng, 2, 2, 2);
    const auto k = gctest::random_marginals(rng, datum.decomposition());
    ConstraintFunction nu;
    if (datum.k() == 2) nu.set({0, 1}, 0.2);
    const CouplingSolution base = max_coupling(datum, k, nu);
    for (int i = 0; i < datum.k(); ++i) {
      auto f = [&](const SymMatrix& x) {
        auto kk = k;
        kk[i] = PdMatrix(x);
        return max_coupling(datum, kk, nu).value;
      };
      const SymMatrix fd = finite_difference_gradient(f, k[i].sym(), 1e-4);
      CHECK(gctest::rel_frob(base.marginal_gradient[i], fd.matrix()) < 1e-5);
    }
  }
}

TEST_CASE("objective gradient against finite differences") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Datum datum = gctest::random_datum(rng);
    const int n = datum.decomposition().total();
    const PdMatrix k = gctest::random_pd(rng, n, 0.5);
    const SymMatrix fd =
        finite_difference_gradient([&](const SymMatrix& x) { return objective_value(datum, x.matrix()); }, k.sym(), 1e-5);
    CHECK(gctest::rel_frob(objective_gradient(datum, k.matrix()).matrix(), fd.matrix()) < 1e-6);
  }
}

TEST_CASE("project_feasible") {
  const Decomposition dec({1, 1});
  Matrix m(2, 2);
  m << 1, 3, 3, 4;
  const CouplingCovariance p = project_feasible(dec, scalars(1.0, 4.0), SymMatrix(m));
  CHECK(p.matrix()(0, 0) == doctest::Approx(1.0));
  CHECK(p.matrix()(1, 1) == doctest::Approx(4.0));
  CHECK(p.matrix()(0, 1) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(p.min_eigenvalue() >= -1e-9);
}

TEST_CASE("determinism") {
  std::mt19937_64 rng(9);
  const Datum datum = gctest::random_datum(rng);
  const auto k = gctest::random_marginals(rng, datum.decomposition());
  const CouplingSolution a = max_coupling(datum, k, {});
  const CouplingSolution b = max_coupling(datum, k, {});
  CHECK(a.value == b.value);
  CHECK(a.optimizer.matrix() == b.optimizer.matrix());
}
