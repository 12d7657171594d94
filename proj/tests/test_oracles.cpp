#include "doctest.h"

#include <cmath>
#include <numbers>

#include "gausscouple/oracles.hpp"
#include "test_support.hpp"

using namespace gausscouple;

namespace {

const double kTwoPiE = 2.0 * std::numbers::pi * std::numbers::e;

double trapezoid_mass(const Density1D& p, int points) {
  const double h = (p.hi - p.lo) / points;
  double acc = 0.5 * (p.truncated_pdf(p.lo) + p.truncated_pdf(p.hi));
  for (int i = 1; i < points; ++i) acc += p.truncated_pdf(p.lo + i * h);
  return acc * h;
}

}  // namespace

TEST_CASE("normal cdf and quantile") {
  for (double z : {-30.0, -8.0, -1.0, 0.0, 0.5, 3.0}) {
    const double p = normal_cdf(z);
    CHECK(normal_quantile(p) == doctest::Approx(z).epsilon(1e-10));
  }
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
}

TEST_CASE("densities integrate to one") {
  for (const Density1D& p : {Density1D::uniform(0.0, 1.0), Density1D::uniform(-1.0, 2.0), Density1D::gaussian(1.0),
                             Density1D::gaussian(2.0, 1.0), Density1D::laplace(1.0), Density1D::laplace(0.5, -1.0)}) {
    // One Richardson step removes the O(h^2) error of the Laplace kink.
    const double mass = (4.0 * trapezoid_mass(p, 1 << 16) - trapezoid_mass(p, 1 << 15)) / 3.0;
    CHECK(std::abs(mass - 1.0) < 1e-8);
    for (double z : {-3.0, -0.2, 0.0, 1.7})
      if (!p.compact) CHECK(p.to_normal(p.from_normal(z)) == doctest::Approx(z).epsilon(1e-9));
  }
}

TEST_CASE("grid coupling oracle") {
  CHECK(grid_max_coupling_2x2(1, 4, 1, 1, INFINITY, 1001) == doctest::Approx(std::log(9.0)).epsilon(1e-12));
  CHECK(grid_max_coupling_2x2(1, 4, 1, 1, 0.0, 1001) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  CHECK(std::abs(grid_max_coupling_2x2(1, 4, 1, 1, 0.5 * std::log(2.0), 100001) -
                 std::log(5.0 + 2.0 * std::sqrt(2.0))) < 1e-4);
  CHECK_THROWS(grid_max_coupling_2x2(1, 4, 1, 1, 0.0, 50));
}

TEST_CASE("entropy quadrature") {
  CHECK(std::abs(entropy_quadrature(Density1D::uniform(0.0, 1.0))) < 1e-12);
  CHECK(entropy_quadrature(Density1D::uniform(0.0, 3.0)) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(std::abs(entropy_quadrature(Density1D::gaussian(1.0)) - 0.5 * std::log(kTwoPiE)) < 1e-7);
  CHECK(std::abs(entropy_quadrature(Density1D::gaussian(3.0)) - 0.5 * std::log(kTwoPiE * 9.0)) < 1e-7);
  CHECK(std::abs(entropy_quadrature(Density1D::laplace(1.0)) - (1.0 + std::log(2.0))) < 1e-6);
  CHECK(std::abs(entropy_quadrature(Density1D::laplace(2.0)) - (1.0 + std::log(4.0))) < 1e-6);
}

TEST_CASE("quadrature convergence under refinement") {
  for (const Density1D& p : {Density1D::gaussian(1.0), Density1D::laplace(1.0)}) {
    QuadratureOptions coarse, fine;
    fine.initial_points = 2 * coarse.initial_points;
    CHECK(std::abs(entropy_quadrature(p, coarse) - entropy_quadrature(p, fine)) < 1e-6);
  }
}

TEST_CASE("truncation sensitivity") {
  Density1D narrow = Density1D::gaussian(1.0);
  narrow.lo = -3.0;
  narrow.hi = 3.0;
  CHECK_THROWS_AS(entropy_quadrature(narrow), UnstableTail);
}

TEST_CASE("coupled sum entropy, Gaussian marginals") {
  const Density1D p1 = Density1D::gaussian(1.0), p2 = Density1D::gaussian(2.0);
  for (double rho : {-0.5, 0.0, 0.3, 0.9}) {
    const double exact = 0.5 * std::log(kTwoPiE * (1.0 + 4.0 + 4.0 * rho));
    CHECK(std::abs(coupled_sum_entropy(p1, p2, {rho}) - exact) < 1e-6);
  }
}

TEST_CASE("coupled sum entropy, uniform marginals") {
  const Density1D u = Density1D::uniform(0.0, 1.0);
  CHECK(std::abs(coupled_sum_entropy(u, u, {0.0}) - 0.5) < 1e-6);
  CHECK(std::abs(coupled_sum_entropy(u, u, {1.0}) - std::log(2.0)) < 1e-6);
  const double near = coupled_sum_entropy(u, u, {0.999});
  CHECK(near < std::log(2.0) + 1e-6);
  CHECK(std::abs(near - std::log(2.0)) < 0.05);
}

TEST_CASE("copula mutual information identity") {
  const Density1D u = Density1D::uniform(0.0, 1.0), l = Density1D::laplace(1.0), g = Density1D::gaussian(1.0);
  for (double rho : {0.3, 0.7}) {
    const double exact = -0.5 * std::log1p(-rho * rho);
    CHECK(std::abs(copula_mutual_information(u, l, {rho}) - exact) < 1e-4);
    CHECK(std::abs(copula_mutual_information(g, u, {rho}) - exact) < 1e-4);
  }
}

TEST_CASE("comparison spot checks") {
  const SpotCheck gauss = comparison_spot_check(Density1D::gaussian(1.0), Density1D::gaussian(1.0), 0.5, 3);
  CHECK(std::abs(gauss.margin) < 1e-6);
  CHECK(gauss.best_rho == doctest::Approx(gauss.rho_bar));
  CHECK(gauss.status == SpotStatus::pass);
  const Density1D u = Density1D::uniform(0.0, 1.0);
  const SpotCheck uni = comparison_spot_check(u, u, 0.0, 1);
  CHECK(uni.margin > 1e-3);
  CHECK(uni.status == SpotStatus::pass);
}

TEST_CASE("finite difference gradient of log det") {
  auto ld = [](const SymMatrix& x) { return log_det(PdMatrix(x)); };
  CHECK(gctest::rel_frob(finite_difference_gradient(ld, SymMatrix::identity(3), 1e-5).matrix(),
                         Matrix::Identity(3, 3)) < 1e-6);
  std::mt19937_64 rng(4);
  const PdMatrix a = gctest::random_pd(rng, 4);
  CHECK(gctest::rel_frob(finite_difference_gradient(ld, a.sym(), 1e-5).matrix(), a.inverse()) < 1e-6);
}
