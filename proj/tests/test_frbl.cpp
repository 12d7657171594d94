#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "gausscouple/frbl.hpp"
#include "gausscouple/oracles.hpp"
#include "test_support.hpp"

using namespace gausscouple;

namespace {

double h2(double l) { return -l * std::log(l) - (1.0 - l) * std::log1p(-l); }

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

Datum scalar_sum(double d = 1.0) { return Datum(Decomposition({1, 1}), {0.5, 0.5}, {d}, {row({1, 1})}); }

PdMatrix scalar(double x) { return PdMatrix(Matrix::Constant(1, 1, x)); }

// inf over K1 = s, K2 = 1 of max_c log(s + 1 + 2c) - lambda log s, by grids over log s and c.
double unconstrained_epi_oracle(double lambda) {
  double best = INFINITY;
  for (int a = 0; a <= 4000; ++a) {
    const double s = std::exp(-8.0 + 16.0 * a / 4000.0);
    best = std::min(best, grid_max_coupling_2x2(s, 1.0, 1.0, 1.0, INFINITY, 2001) - lambda * std::log(s));
  }
  return best;
}

// Random datum with c on the scaling hyperplane that passes the dimension checker.
std::optional<Datum> random_feasible(std::mt19937_64& rng) {
  const Datum base = gctest::random_datum(rng, 3, 2, 2);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> c(base.k());
  double weighted = 0.0;
  for (int i = 0; i < base.k(); ++i) weighted += (c[i] = u(rng)) * base.decomposition().dim(i);
  for (double& x : c) x *= base.weighted_codomain_dim() / weighted;
  const Datum datum = base.with_c(c);
  if (check_dimension_condition(datum, 16, 1).verdict == Verdict::fail) return std::nullopt;
  return datum;
}

}  // namespace

TEST_CASE("evaluate_F examples") {
  const Datum datum = scalar_sum();
  CHECK(evaluate_F(datum, {0.5, 0.5}, {scalar(1), scalar(1)}) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
  CHECK(evaluate_F(datum, {0.0, 0.0}, {scalar(2), scalar(3)}) ==
        doctest::Approx(2.0 * std::log(std::sqrt(2.0) + std::sqrt(3.0))).epsilon(1e-9));
  CHECK(evaluate_F(datum, {0.3, 0.7}, {scalar(2), scalar(3)}) ==
        doctest::Approx(2.0 * std::log(std::sqrt(2.0) + std::sqrt(3.0)) - 0.3 * std::log(2.0) - 0.7 * std::log(3.0))
            .epsilon(1e-9));
}

TEST_CASE("entropy power constants of the scalar sum") {
  const Datum datum = scalar_sum();
  for (int a = 1; a <= 9; a += 2) {
    const double l = a / 10.0;
    const ConstantReport indep = compute_Dg(datum, {l, 1 - l}, ConstraintFunction::zero(2));
    CHECK(indep.status == ConstantStatus::finite);
    CHECK(std::abs(indep.value + 0.5 * h2(l)) < 1e-7);
    const ConstantReport free = compute_Dg(datum, {l, 1 - l});
    CHECK(free.status == ConstantStatus::finite);
    CHECK(std::abs(free.value + h2(l)) < 1e-7);
    CHECK(std::abs(free.value + 0.5 * unconstrained_epi_oracle(l)) < 1e-4);
  }
}

TEST_CASE("witnesses reproduce the reported value") {
  const Datum datum = scalar_sum();
  const ConstantReport r = compute_Dg(datum, {0.3, 0.7}, ConstraintFunction::pair(0.2));
  REQUIRE(r.status == ConstantStatus::finite);
  double ld = 0.0;
  for (const PdMatrix& k : r.witnesses) ld += log_det(k);
  CHECK(std::abs(ld) < 1e-12);
  const double f = evaluate_F(datum, r.c, r.witnesses, ConstraintFunction::pair(0.2));
  CHECK(std::abs(-0.5 * f - r.value) <= r.certificate_gap + 1e-9);
}

TEST_CASE("infeasible data are infinite") {
  const Datum proj(Decomposition({1, 1}), {0.5, 0.5}, {1.0}, {row({1, 0})});
  const ConstantReport r = compute_Dg(proj, {0.5, 0.5});
  CHECK(r.status == ConstantStatus::infinite);
  CHECK(std::isinf(r.value));
  REQUIRE(r.dimension.has_value());
  CHECK(r.dimension->witness_kind == WitnessKind::coordinate);
  const ConstantReport s = compute_Dg(scalar_sum(), {0.6, 0.6});
  CHECK(s.status == ConstantStatus::infinite);
  CHECK_FALSE(s.scaling);
}

TEST_CASE("infimum approached but not attained") {
  const Datum datum(Decomposition({1, 1}), {0.5, 0.5}, {0.5, 0.5}, {row({1, 0}), row({1, 1})});
  const ConstantReport r = compute_Dg(datum, {0.5, 0.5});
  CHECK(r.status != ConstantStatus::infinite);
  CHECK(std::abs(r.value) < 1e-3);
  CHECK(r.drift_distance > 1.0);
}

TEST_CASE("best constant") {
  SUBCASE("scalar sum") {
    const ConstantReport r = best_constant(scalar_sum(0.5));
    CHECK(r.c[0] == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(std::abs(r.minimax_residual) < 1e-4);
    // Normalized data: -2 D_g(1/2, 1/2) = 2 h_2(1/2) at d = 1, undone by the factor 1/2.
    CHECK(r.value == doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-7));
    CHECK(r.d_scale == doctest::Approx(0.5));
  }
  SUBCASE("identity") {
    const Datum id(Decomposition({3}), {1.0 / 3}, {1.0 / 3}, {Matrix::Identity(3, 3)});
    const ConstantReport r = best_constant(id);
    CHECK(std::abs(r.value) < 1e-9);
    CHECK(r.c[0] == doctest::Approx(1.0 / 3));
  }
  SUBCASE("Zamir-Feder type") {
    Matrix b(2, 3);
    b << 1, 0, 1, 0, 1, 1;
    const Datum zf(Decomposition({1, 1, 1}), {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.5}, {b});
    const ConstantReport r = best_constant(zf);
    CHECK(std::abs(r.minimax_residual) < 1e-4);
    double total = 0.0;
    for (double x : r.c) {
      CHECK(x >= 0.0);
      total += x;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("comparison Gaussians") {
  const Datum datum = scalar_sum();
  const double h = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  const ComparisonResult indep = comparison_gaussians(datum, {h, h}, ConstraintFunction::zero(2));
  CHECK(indep.lhs_reference == doctest::Approx(0.5 * std::log(4.0 * std::numbers::pi * std::numbers::e)));
  CHECK(indep.Z_covariances[0].matrix()(0, 0) == doctest::Approx(1.0));
  const ComparisonResult dep = comparison_gaussians(datum, {h, h}, ConstraintFunction::pair(0.5 * std::log(4.0 / 3.0)));
  CHECK(dep.lhs_reference == doctest::Approx(0.5 * std::log(6.0 * std::numbers::pi * std::numbers::e)).epsilon(1e-8));

  Matrix b1(1, 3), b2(1, 3);
  b1 << 1, 0, 1;
  b2 << 0, 1, 1;
  const Datum mixed(Decomposition({2, 1}), {0.5, 1.0}, {1.0, 1.0}, {b1, b2});
  const ComparisonResult r = comparison_gaussians(mixed, {1.3, 0.4}, ConstraintFunction::pair(0.3));
  CHECK(r.status == ConstantStatus::finite);
  CHECK(gaussian_entropy(2, log_det(r.Z_covariances[0])) == doctest::Approx(1.3).epsilon(1e-9));
  CHECK(std::abs(r.entropies[0] - 1.3) < 1e-9);
  CHECK(std::abs(r.entropies[1] - 0.4) < 1e-9);
}

TEST_CASE("Riemannian gradient along det-preserving tangents") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 5; ++t) {
    const Datum datum = gctest::random_datum(rng, 2, 3, 2);
    const auto k = gctest::random_marginals(rng, datum.decomposition());
    std::vector<double> c(datum.k(), 0.3);
    const FEvaluation e = evaluate_F_full(datum, c, k);
    for (int i = 0; i < datum.k(); ++i) {
      const int n = k[i].dim();
      Matrix x = gctest::random_matrix(rng, n, n);
      x = 0.5 * (x + x.transpose());
      x -= x.trace() / n * Matrix::Identity(n, n);
      const Matrix root = sqrt_pd(k[i]).matrix();
      const SymMatrix tangent(Matrix(root * x * root));
      auto along = [&](double s) {
        auto kk = k;
        kk[i] = exp_map(k[i], tangent * s);
        return evaluate_F(datum, c, kk);
      };
      const double h = 1e-4;
      const double fd = (along(h) - along(-h)) / (2.0 * h);
      // <K G K, T>_K = tr(G T)
      const Matrix kinv = k[i].inverse();
      const double analytic = hs_inner(kinv * e.riemannian_gradient[i] * kinv, tangent.matrix());
      CHECK(std::abs(fd - analytic) <= 1e-5 * std::max(1.0, std::abs(analytic)));
    }
  }
}

TEST_CASE("geodesic convexity of F") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 20; ++t) {
    const Datum datum = gctest::random_datum(rng, 3, 2, 3);
    const auto k0 = gctest::random_marginals(rng, datum.decomposition());
    const auto k1 = gctest::random_marginals(rng, datum.decomposition());
    std::vector<PdMatrix> mid;
    for (int i = 0; i < datum.k(); ++i) mid.push_back(geometric_mean(k0[i], k1[i]));
    std::vector<double> c(datum.k(), 0.4);
    ConstraintFunction nu;
    if (datum.k() >= 2) nu.set({0, 1}, 0.3);
    const double fm = evaluate_F(datum, c, mid, nu);
    CHECK(fm <= 0.5 * evaluate_F(datum, c, k0, nu) + 0.5 * evaluate_F(datum, c, k1, nu) + 1e-6);
  }
}

TEST_CASE("convexity in c, ordering in nu and the log k sandwich") {
  std::mt19937_64 rng(51);
  int checked = 0;
  for (int t = 0; t < 40 && checked < 8; ++t) {
    const auto datum = random_feasible(rng);
    if (!datum || datum->k() < 2) continue;
    const ConstantReport base = compute_Dg(*datum, datum->c());
    if (base.status != ConstantStatus::finite) continue;
    ++checked;

    // Another point of the scaling hyperplane, and the midpoint.
    std::vector<double> c1 = datum->c();
    const int n0 = datum->decomposition().dim(0), n1 = datum->decomposition().dim(1);
    const double shift = 0.3 * std::min(c1[0] * n0, c1[1] * n1);
    c1[0] -= shift / n0;
    c1[1] += shift / n1;
    const ConstantReport other = compute_Dg(*datum, c1);
    if (other.status == ConstantStatus::finite) {
      std::vector<double> cm(c1.size());
      for (std::size_t i = 0; i < cm.size(); ++i) cm[i] = 0.5 * (c1[i] + datum->c()[i]);
      const ConstantReport mid = compute_Dg(*datum, cm);
      CHECK(mid.value <= 0.5 * base.value + 0.5 * other.value + 1e-6);
    }

    ConstraintFunction nu;
    nu.set({0, 1}, 0.25);
    const ConstantReport partial = compute_Dg(*datum, datum->c(), nu);
    const ConstantReport zero = compute_Dg(*datum, datum->c(), ConstraintFunction::zero(datum->k()));
    CHECK(base.value <= partial.value + 1e-6);
    CHECK(partial.value <= zero.value + 1e-6);
    CHECK(zero.value <= base.value + std::log(datum->k()) * datum->weighted_codomain_dim() + 1e-6);
  }
  CHECK(checked >= 4);
}

TEST_CASE("comparison soundness on Gaussian inputs") {
  std::mt19937_64 rng(61);
  int checked = 0;
  for (int t = 0; t < 40 && checked < 6; ++t) {
    const auto datum = random_feasible(rng);
    if (!datum || compute_Dg(*datum, datum->c()).status != ConstantStatus::finite) continue;
    ++checked;
    const auto k = gctest::random_marginals(rng, datum->decomposition());
    std::vector<double> h;
    for (const PdMatrix& x : k) h.push_back(gaussian_entropy(x.dim(), log_det(x)));
    ConstraintFunction nu;
    if (datum->k() >= 2) nu.set({0, 1}, 0.2);
    const ComparisonResult cmp = comparison_gaussians(*datum, h, nu);
    const double lhs = 0.5 * max_coupling(*datum, k, nu).value +
                       0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e) * datum->weighted_codomain_dim();
    CHECK(lhs >= cmp.lhs_reference - 1e-6);
  }
  CHECK(checked >= 3);
}
