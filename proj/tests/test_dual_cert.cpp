#include "doctest.h"

#include <cmath>
#include <random>

#include "gausscouple/dual_cert.hpp"
#include "test_support.hpp"

using namespace gausscouple;

TEST_CASE("scalar-sum certificate") {
  Matrix b(1, 2);
  b << 1, 1;
  const Datum datum(Decomposition({1, 1}), {0.5, 0.5}, {1.0}, {b});
  const std::vector<PdMatrix> k = {PdMatrix::identity(1), PdMatrix::identity(1)};
  const DualCertificate cert = solve_dual(datum, k);
  CHECK(cert.converged);
  CHECK(cert.value == doctest::Approx(1.0 + std::log(4.0)).epsilon(1e-8));
  CHECK(cert.U[0](0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(cert.V[0].matrix()(0, 0) == doctest::Approx(0.25).epsilon(1e-6));
  const CouplingSolution primal = max_coupling(datum, k, {});
  CHECK(std::abs(duality_gap(datum, primal, cert)) < 1e-6);
}

TEST_CASE("strong duality on random data") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const Datum datum = gctest::random_datum(rng);
    const auto k = gctest::random_marginals(rng, datum.decomposition());
    const CouplingSolution primal = max_coupling(datum, k, {});
    const DualCertificate cert = solve_dual(datum, k);
    CHECK(cert.converged);
    CHECK(std::abs(duality_gap(datum, primal, cert)) < 1e-6);
    CHECK(certificate_violation(cert) >= -1e-10);
    // Complementary slackness: <slack, K*> = 0 at the optimum.
    CHECK(std::abs(hs_inner(cert.slack.matrix(), primal.optimizer.matrix())) < 1e-6);
  }
}

TEST_CASE("weak duality for arbitrary feasible certificates") {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 40; ++t) {
    const Datum datum = gctest::random_datum(rng);
    const auto k = gctest::random_marginals(rng, datum.decomposition());
    std::vector<PdMatrix> v;
    for (int j = 0; j < datum.m(); ++j) v.push_back(gctest::random_pd(rng, datum.codomain_dim(j), 0.05));
    const DualCertificate cert = feasible_certificate(datum, k, v);
    CHECK(certificate_violation(cert) >= -1e-12);
    const CouplingSolution primal = max_coupling(datum, k, {});
    CHECK(duality_gap(datum, primal, cert) >= -1e-8);
  }
}

TEST_CASE("make_certificate value") {
  Matrix b(1, 2);
  b << 1, 1;
  const Datum datum(Decomposition({1, 1}), {0.5, 0.5}, {1.0}, {b});
  const std::vector<PdMatrix> k = {PdMatrix::identity(1), PdMatrix(Matrix::Constant(1, 1, 4.0))};
  const DualCertificate cert = make_certificate(datum, k, {SymMatrix::identity(1), SymMatrix::identity(1)},
                                                {PdMatrix(Matrix::Constant(1, 1, 0.5))});
  CHECK(cert.value == doctest::Approx(5.0 - std::log(0.5)));
  CHECK(cert.slack(0, 1) == doctest::Approx(-0.5));
}
