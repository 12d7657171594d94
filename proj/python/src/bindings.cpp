#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gausscouple/dual_cert.hpp"
#include "gausscouple/frbl.hpp"
#include "gausscouple/inequalities.hpp"
#include "gausscouple/oracles.hpp"

namespace py = pybind11;
using namespace gausscouple;

namespace {

std::vector<PdMatrix> to_pd(const std::vector<Matrix>& ms) {
  std::vector<PdMatrix> out;
  for (const Matrix& m : ms) out.emplace_back(m);
  return out;
}

std::vector<Matrix> to_dense(const std::vector<PdMatrix>& ms) {
  std::vector<Matrix> out;
  for (const PdMatrix& m : ms) out.push_back(m.matrix());
  return out;
}

// Python dict {(i, j, ...): bound} with 0-based block indices.
ConstraintFunction to_nu(const std::optional<std::map<Subset, double>>& nu) {
  ConstraintFunction out;
  if (nu)
    for (const auto& [s, b] : *nu) out.set(s, b);
  return out;
}

py::dict dimension_dict(const DimensionCheck& c) {
  py::dict d;
  d["verdict"] = c.verdict == Verdict::pass ? "pass" : "fail";
  d["tuples_checked"] = c.tuples_checked;
  d["lhs"] = c.lhs;
  d["rhs"] = c.rhs;
  if (c.witness_kind) {
    const char* kinds[] = {"coordinate", "kernel", "random"};
    d["witness_kind"] = kinds[static_cast<int>(*c.witness_kind)];
  }
  if (c.witness) {
    py::list w;
    for (const Subspace& s : *c.witness) w.append(py::make_tuple(s.block_index, s.basis));
    d["witness"] = w;
  }
  return d;
}

py::dict constant_dict(const ConstantReport& r) {
  py::dict d;
  d["status"] = to_string(r.status);
  d["value"] = r.value;
  d["inner_value"] = r.inner_value;
  d["c"] = r.c;
  d["witnesses"] = to_dense(r.witnesses);
  d["certificate_gap"] = r.certificate_gap;
  d["gradient_norm"] = r.gradient_norm;
  d["drift_distance"] = r.drift_distance;
  d["iterations"] = r.iterations;
  d["reason"] = r.reason;
  d["scaling"] = r.scaling;
  if (r.dimension) d["dimension"] = dimension_dict(*r.dimension);
  d["d_scale"] = r.d_scale;
  d["minimax_lhs"] = r.minimax_lhs;
  d["minimax_rhs"] = r.minimax_rhs;
  d["minimax_residual"] = r.minimax_residual;
  return d;
}

SolverOptions options(double tol, int max_iters, std::uint64_t seed) {
  SolverOptions o;
  o.tol = tol;
  o.max_iters = max_iters;
  o.seed = seed;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaussian couplings, Brascamp-Lieb type constants and entropy bounds";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", base.ptr());
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base.ptr());
  py::register_exception<NonSurjectiveMap>(m, "NonSurjectiveMap", base.ptr());
  py::register_exception<SingularPushforward>(m, "SingularPushforward", base.ptr());
  py::register_exception<NoConvergence>(m, "NoConvergence", base.ptr());
  py::register_exception<UnstableTail>(m, "UnstableTail", base.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());

  m.def("log_det", [](const Matrix& a) { return log_det(PdMatrix(a)); }, py::arg("a"));
  m.def(
      "geometric_mean", [](const Matrix& a, const Matrix& b, double t) {
        return geometric_mean(PdMatrix(a), PdMatrix(b), t).matrix();
      },
      py::arg("a"), py::arg("b"), py::arg("t") = 0.5);
  m.def("delta2", [](const Matrix& a, const Matrix& b) { return delta2(PdMatrix(a), PdMatrix(b)); });

  py::class_<Datum>(m, "Datum")
      .def(py::init([](const std::vector<int>& dims, const std::vector<double>& c, const std::vector<double>& d,
                       const std::vector<Matrix>& maps) { return Datum(Decomposition(dims), c, d, maps); }),
           py::arg("dims"), py::arg("c"), py::arg("d"), py::arg("maps"))
      .def_property_readonly("dims", [](const Datum& x) { return x.decomposition().dims(); })
      .def_property_readonly("c", &Datum::c)
      .def_property_readonly("d", &Datum::d)
      .def_property_readonly("maps", &Datum::maps)
      .def("with_c", &Datum::with_c);

  m.def("check_scaling", &check_scaling);
  m.def(
      "check_dimension_condition",
      [](const Datum& d, int trials, std::uint64_t seed) { return dimension_dict(check_dimension_condition(d, trials, seed)); },
      py::arg("datum"), py::arg("trials") = 16, py::arg("seed") = 0);

  m.def(
      "max_coupling",
      [](const Datum& datum, const std::vector<Matrix>& marginals, const std::optional<std::map<Subset, double>>& nu,
         double tol, int max_iters) {
        const CouplingSolution s = max_coupling(datum, to_pd(marginals), to_nu(nu), options(tol, max_iters, 0));
        py::dict d;
        d["value"] = s.value;
        d["optimizer"] = s.optimizer.matrix();
        py::dict multipliers;
        for (const auto& [subset, lambda] : s.multipliers) multipliers[py::tuple(py::cast(subset))] = lambda;
        d["multipliers"] = multipliers;
        d["active_constraints"] = s.active_constraints;
        d["iterations"] = s.iterations;
        d["converged"] = s.converged;
        d["suboptimality_bound"] = s.suboptimality_bound;
        d["boundary"] = s.boundary;
        d["marginal_gradient"] = s.marginal_gradient;
        return d;
      },
      py::arg("datum"), py::arg("marginals"), py::arg("nu") = py::none(), py::arg("tol") = 1e-8,
      py::arg("max_iters") = 10000);

  m.def(
      "certify",
      [](const Datum& datum, const std::vector<Matrix>& marginals, double tol) {
        const auto k = to_pd(marginals);
        const SolverOptions o = options(tol, 10000, 0);
        const CouplingSolution primal = max_coupling(datum, k, {}, o);
        const DualCertificate cert = solve_dual(datum, k, o);
        py::dict d;
        d["primal_value"] = primal.value;
        d["dual_value"] = cert.value;
        d["gap"] = duality_gap(datum, primal, cert);
        d["violation"] = certificate_violation(cert);
        return d;
      },
      py::arg("datum"), py::arg("marginals"), py::arg("tol") = 1e-8);

  m.def(
      "evaluate_F",
      [](const Datum& datum, const std::vector<double>& c, const std::vector<Matrix>& marginals,
         const std::optional<std::map<Subset, double>>& nu) { return evaluate_F(datum, c, to_pd(marginals), to_nu(nu)); },
      py::arg("datum"), py::arg("c"), py::arg("marginals"), py::arg("nu") = py::none());

  m.def(
      "compute_Dg",
      [](const Datum& datum, const std::optional<std::vector<double>>& c,
         const std::optional<std::map<Subset, double>>& nu, double tol, std::uint64_t seed) {
        return constant_dict(compute_Dg(datum, c.value_or(datum.c()), to_nu(nu), options(tol, 10000, seed)));
      },
      py::arg("datum"), py::arg("c") = py::none(), py::arg("nu") = py::none(), py::arg("tol") = 1e-8,
      py::arg("seed") = 0);

  m.def(
      "best_constant",
      [](const Datum& datum, double tol, std::uint64_t seed) {
        return constant_dict(best_constant(datum, options(tol, 10000, seed)));
      },
      py::arg("datum"), py::arg("tol") = 1e-8, py::arg("seed") = 0);

  m.def("entropy_power", [](int n, double h) { return EntropyPower::from_entropy(n, h).N; }, py::arg("n"),
        py::arg("h"));
  m.def(
      "dep_epi_bound",
      [](double n1, double n2, double zeta, int n) {
        return dep_epi_bound(EntropyPower::from_power(n, n1), EntropyPower::from_power(n, n2), zeta);
      },
      py::arg("N1"), py::arg("N2"), py::arg("zeta"), py::arg("n") = 1);
  m.def("game_value_gaussian", [](int n, double P, double N, double zeta) {
    return game_value_gaussian(GameSpec{n, P, N, zeta});
  }, py::arg("n"), py::arg("P"), py::arg("N"), py::arg("zeta"));
  m.def(
      "saddle_deviation_test",
      [](int n, double P, double N, double zeta, int trials, std::uint64_t seed) {
        const SaddleReport r = saddle_deviation_test(GameSpec{n, P, N, zeta}, trials, seed);
        py::dict d;
        d["saddle_value"] = r.saddle_value;
        d["isotropic_payoff"] = r.isotropic_payoff;
        d["max_signal_payoff"] = r.max_signal_payoff;
        d["min_noise_payoff"] = r.min_noise_payoff;
        d["worst_violation"] = r.worst_violation;
        d["trials"] = r.trials;
        return d;
      },
      py::arg("n"), py::arg("P"), py::arg("N"), py::arg("zeta"), py::arg("trials") = 50, py::arg("seed") = 0);

  py::class_<Density1D>(m, "Density1D")
      .def_static("uniform", &Density1D::uniform, py::arg("a"), py::arg("b"))
      .def_static("gaussian", &Density1D::gaussian, py::arg("sigma"), py::arg("mean") = 0.0)
      .def_static("laplace", &Density1D::laplace, py::arg("scale"), py::arg("mean") = 0.0)
      .def_readonly("name", &Density1D::name);
  m.def("entropy_quadrature", [](const Density1D& p) { return entropy_quadrature(p); });
  m.def(
      "coupled_sum_entropy",
      [](const Density1D& p1, const Density1D& p2, double rho) { return coupled_sum_entropy(p1, p2, {rho}); },
      py::arg("p1"), py::arg("p2"), py::arg("rho"));
}
