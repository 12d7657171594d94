// gausscouple: command-line front end. JSON reports on stdout, messages on stderr.
//
// Exit codes: 0 success, 1 a reported check failed, 2 bad input or flags,
// 3 non-surjective map, 4 no convergence.
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gausscouple/dual_cert.hpp"
#include "gausscouple/frbl.hpp"
#include "gausscouple/inequalities.hpp"
#include "gausscouple/oracles.hpp"
#include "io.hpp"

using namespace gausscouple;
using gctool::json;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

enum Exit { kOk = 0, kFail = 1, kUsage = 2, kNonSurjective = 3, kNoConvergence = 4 };

struct Outcome {
  json result = json::object();
  json diagnostics = json::object();
  int exit_code = kOk;
};

struct Common {
  double tol = 1e-8;
  int max_iters = 10000;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool verbose = false;

  std::uint64_t resolved_seed() const {
    if (seed) return *seed;
    if (const char* env = std::getenv("GAUSSCOUPLE_SEED")) {
      try {
        return std::stoull(env);
      } catch (const std::exception&) {
        throw gctool::InputError("GAUSSCOUPLE_SEED: expected a nonnegative integer");
      }
    }
    return 0;
  }

  SolverOptions solver() const {
    SolverOptions o;
    o.tol = tol;
    o.max_iters = max_iters;
    o.seed = resolved_seed();
    return o;
  }
};

void log(const Common& common, const std::string& message) {
  if (common.verbose) std::cerr << "gausscouple: " << message << '\n';
}

// Runs f(0..n-1) on up to `jobs` threads; results come back in index order.
std::vector<json> parallel_map(int n, int jobs, const std::function<json(int)>& f) {
  std::vector<json> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min(jobs, n));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

double parse_real_flag(const std::string& text, const std::string& flag) {
  if (text == "inf") return kInf;
  try {
    std::size_t used = 0;
    const double x = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(x)) throw std::invalid_argument(text);
    return x;
  } catch (const std::exception&) {
    throw gctool::InputError(flag + ": expected a finite real or \"inf\", got \"" + text + "\"");
  }
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::string s = text;
  for (char& ch : s)
    if (ch == ',') ch = ' ';
  std::istringstream in(s);
  std::vector<double> out;
  std::string item;
  while (in >> item) out.push_back(parse_real_flag(item, flag));
  if (out.empty()) throw gctool::InputError(flag + ": expected a list of reals");
  return out;
}

json witness_json(const DimensionCheck& check) {
  json out = {{"lhs", gctool::real(check.lhs)}, {"rhs", gctool::real(check.rhs)}};
  if (check.witness_kind) {
    const char* kinds[] = {"coordinate", "kernel", "random"};
    out["kind"] = kinds[static_cast<int>(*check.witness_kind)];
  }
  json subspaces = json::array();
  if (check.witness) {
    for (const Subspace& s : *check.witness) {
      subspaces.push_back({{"block", s.block_index + 1}, {"dim", s.dim()}, {"basis", gctool::matrix(s.basis)}});
    }
  }
  out["subspaces"] = subspaces;
  return out;
}

json dimension_json(const DimensionCheck& check) {
  json out = {{"verdict", check.verdict == Verdict::pass ? "pass" : "fail"},
              {"tuples_checked", check.tuples_checked}};
  if (check.verdict == Verdict::fail) out["witness"] = witness_json(check);
  return out;
}

json multipliers_json(const std::map<Subset, double>& m) {
  json out = json::array();
  for (const auto& [s, v] : m) out.push_back({{"subset", gctool::subset_1based(s)}, {"lambda", gctool::real(v)}});
  return out;
}

json subsets_json(const std::vector<Subset>& list) {
  json out = json::array();
  for (const Subset& s : list) out.push_back(gctool::subset_1based(s));
  return out;
}

// --- feasibility -------------------------------------------------------------

Outcome cmd_feasibility(const gctool::DatumFile& in, int trials, const Common& common) {
  Outcome o;
  const bool scaling = check_scaling(in.datum);
  const DimensionCheck dim = check_dimension_condition(in.datum, trials, common.resolved_seed());
  o.result = {{"scaling", scaling},
              {"dimension", dim.verdict == Verdict::pass ? "pass" : "fail"},
              {"tuples_checked", dim.tuples_checked}};
  if (dim.verdict == Verdict::fail) o.result["witness"] = witness_json(dim);
  o.diagnostics = {{"random_trials", trials}, {"seed", common.resolved_seed()}};
  o.exit_code = scaling && dim.verdict == Verdict::pass ? kOk : kFail;
  return o;
}

// --- max-coupling ------------------------------------------------------------

Outcome cmd_max_coupling(const gctool::DatumFile& in, const std::vector<PdMatrix>& marginals, bool certify,
                         const Common& common) {
  Outcome o;
  if (static_cast<int>(marginals.size()) != in.datum.k()) {
    throw gctool::InputError("marginals: expected " + std::to_string(in.datum.k()) + " blocks, got " +
                             std::to_string(marginals.size()));
  }
  for (int i = 0; i < in.datum.k(); ++i) {
    if (marginals[i].dim() != in.datum.decomposition().dim(i)) {
      throw gctool::InputError("marginals[" + std::to_string(i) + "].dim: expected " +
                               std::to_string(in.datum.decomposition().dim(i)));
    }
  }
  const SolverOptions opts = common.solver();
  const CouplingSolution sol = max_coupling(in.datum, marginals, in.nu, opts);
  o.result = {{"value", gctool::real(sol.value)},
              {"optimizer", gctool::matrix(sol.optimizer.matrix())},
              {"multipliers", multipliers_json(sol.multipliers)},
              {"active_constraints", subsets_json(sol.active_constraints)},
              {"boundary", sol.boundary}};
  o.diagnostics = {{"iterations", sol.iterations},
                   {"converged", sol.converged},
                   {"suboptimality_bound", gctool::real(sol.suboptimality_bound)}};
  if (certify) {
    if (!in.nu.empty()) throw gctool::InputError("--certify: dual certificates cover the unconstrained problem only");
    const DualCertificate cert = solve_dual(in.datum, marginals, opts);
    const double gap = duality_gap(in.datum, sol, cert);
    o.result["dual_value"] = gctool::real(cert.value);
    o.result["dual_gap"] = gctool::real(gap);
    o.diagnostics["dual_iterations"] = cert.iterations;
    o.diagnostics["dual_converged"] = cert.converged;
    o.diagnostics["certificate_violation"] = gctool::real(certificate_violation(cert));
    if (!(std::abs(gap) < 1e-6)) o.exit_code = kFail;
  }
  if (!sol.converged) o.exit_code = kNoConvergence;
  return o;
}

// --- constant ----------------------------------------------------------------

json report_json(const ConstantReport& r) {
  json out = {{"status", to_string(r.status)},
              {"value", gctool::real(r.value)},
              {"inner_value", gctool::real(r.inner_value)},
              {"c", gctool::reals(r.c)},
              {"scaling", r.scaling}};
  json witnesses = json::array();
  for (const PdMatrix& k : r.witnesses) witnesses.push_back(gctool::matrix(k.matrix()));
  out["witnesses"] = witnesses;
  if (r.dimension) out["dimension"] = dimension_json(*r.dimension);
  if (!r.diverging_direction.empty()) {
    json dir = json::array();
    for (const Matrix& m : r.diverging_direction) dir.push_back(gctool::matrix(m));
    out["diverging_direction"] = dir;
  }
  return out;
}

Outcome cmd_constant(const gctool::DatumFile& in, const std::optional<std::string>& c_text, bool best_c,
                     bool nu_from_datum, const Common& common) {
  Outcome o;
  const SolverOptions opts = common.solver();
  ConstantReport r;
  if (best_c) {
    if (c_text) throw gctool::InputError("--best-c and --c are mutually exclusive");
    if (nu_from_datum) throw gctool::InputError("--best-c: the minimax identity is computed without nu");
    r = best_constant(in.datum, opts);
  } else {
    std::vector<double> c = in.datum.c();
    if (c_text) {
      c = parse_list(*c_text, "--c");
      if (static_cast<int>(c.size()) != in.datum.k()) {
        throw gctool::InputError("--c: expected " + std::to_string(in.datum.k()) + " exponents");
      }
    }
    r = compute_Dg(in.datum, c, nu_from_datum ? in.nu : ConstraintFunction{}, opts);
  }
  o.result = report_json(r);
  o.diagnostics = {{"iterations", r.iterations},
                   {"certificate_gap", gctool::real(r.certificate_gap)},
                   {"gradient_norm", gctool::real(r.gradient_norm)},
                   {"drift_distance", gctool::real(r.drift_distance)},
                   {"reason", r.reason}};
  if (best_c) {
    o.result["c_star"] = gctool::reals(r.c);
    o.result["d_scale"] = gctool::real(r.d_scale);
    o.result["minimax_lhs"] = gctool::real(r.minimax_lhs);
    o.result["minimax_rhs"] = gctool::real(r.minimax_rhs);
    o.result["minimax_residual"] = gctool::real(r.minimax_residual);
    if (!(std::abs(r.minimax_residual) <= 1e-4)) o.exit_code = kFail;
  }
  return o;
}

// --- depepi / saddle ---------------------------------------------------------

Outcome cmd_depepi(int n, double h1, double h2, double zeta) {
  if (n < 1) throw gctool::InputError("--n: expected a positive integer");
  if (!(zeta >= 0.0)) throw gctool::InputError("--zeta: expected a nonnegative value");
  Outcome o;
  const EntropyPower p1 = EntropyPower::from_entropy(n, h1), p2 = EntropyPower::from_entropy(n, h2);
  const double bound = dep_epi_bound(p1, p2, zeta);
  o.result = {{"n", n},
              {"zeta", gctool::real(zeta)},
              {"N1", gctool::real(p1.N)},
              {"N2", gctool::real(p2.N)},
              {"correlation_factor", gctool::real(correlation_factor(zeta, n))},
              {"bound", gctool::real(bound)},
              {"entropy_bound", gctool::real(0.5 * n * std::log(bound))}};
  return o;
}

Outcome cmd_saddle(const GameSpec& spec, int trials, const Common& common) {
  Outcome o;
  spec.validate();
  const double value = game_value_gaussian(spec);
  o.result = {{"n", spec.n},
              {"P", spec.P},
              {"N", spec.N_noise},
              {"zeta", gctool::real(spec.zeta)},
              {"value", gctool::real(value)}};
  if (trials > 0) {
    const SaddleReport r = saddle_deviation_test(spec, trials, common.resolved_seed(), common.solver());
    o.result["isotropic_payoff"] = gctool::real(r.isotropic_payoff);
    o.result["max_signal_payoff"] = gctool::real(r.max_signal_payoff);
    o.result["min_noise_payoff"] = gctool::real(r.min_noise_payoff);
    o.result["worst_violation"] = gctool::real(r.worst_violation);
    o.diagnostics = {{"trials", r.trials}, {"seed", common.resolved_seed()}};
    if (!(r.worst_violation <= 1e-6)) o.exit_code = kFail;
  }
  return o;
}

// --- verify ------------------------------------------------------------------

json row_status(json row, bool pass, bool inconclusive = false) {
  row["status"] = pass ? "PASS" : (inconclusive ? "INCONCLUSIVE" : "FAIL");
  return row;
}

PdMatrix random_pd(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  return PdMatrix(Matrix(g * g.transpose() / n + 0.2 * Matrix::Identity(n, n)));
}

double h2(double l) { return -l * std::log(l) - (1.0 - l) * std::log1p(-l); }

std::vector<json> profile_epi(const Common& common) {
  Matrix b(1, 2);
  b << 1, 1;
  const Datum datum(Decomposition({1, 1}), {0.5, 0.5}, {1.0}, {b});
  const SolverOptions opts = common.solver();
  return parallel_map(9, common.jobs, [&](int a) {
    const double l = (a + 1) / 10.0;
    const double indep = compute_Dg(datum, {l, 1 - l}, ConstraintFunction::zero(2), opts).value;
    const double free = compute_Dg(datum, {l, 1 - l}, {}, opts).value;
    const double e1 = std::abs(indep + 0.5 * h2(l)), e2 = std::abs(free + h2(l));
    return row_status({{"lambda", l},
                       {"independent", gctool::real(indep)},
                       {"independent_expected", -0.5 * h2(l)},
                       {"unconstrained", gctool::real(free)},
                       {"unconstrained_expected", -h2(l)},
                       {"error", gctool::real(std::max(e1, e2))}},
                      e1 <= 1e-5 && e2 <= 1e-5);
  });
}

std::vector<json> profile_bm(const Common& common) {
  const std::vector<std::pair<double, double>> lengths = {{1.0, 1.0}, {1.0, 2.0}, {0.5, 3.0}};
  return parallel_map(static_cast<int>(lengths.size()), common.jobs, [&](int i) {
    const auto [a, b] = lengths[i];
    const BrunnMinkowskiCheck r = brunn_minkowski_check(a, b);
    const bool pass = r.copula_lower_bound <= r.rhs_upper * (1.0 + 1e-6) && r.copula_lower_bound >= r.lhs * (1.0 - 1e-6);
    return row_status({{"len1", a},
                       {"len2", b},
                       {"volume_sum", r.lhs},
                       {"entropy_power_upper", r.rhs_upper},
                       {"copula_lower_bound", r.copula_lower_bound},
                       {"best_rho", r.best_rho}},
                      pass);
  });
}

std::vector<json> profile_depepi_grid(const Common& common) {
  const std::vector<double> zetas = {0.0, 0.05, 0.2, 0.5, 1.0, 3.0, kInf};
  std::mt19937_64 rng(common.resolved_seed());
  std::vector<std::pair<PdMatrix, PdMatrix>> pairs;
  for (int n = 1; n <= 3; ++n) {
    const PdMatrix k1 = random_pd(rng, n);
    pairs.emplace_back(k1, PdMatrix(Matrix(1.7 * k1.matrix())));
    pairs.emplace_back(k1, random_pd(rng, n));
  }
  SolverOptions opts = common.solver();
  opts.tol = std::min(opts.tol, 1e-11);
  const int rows = static_cast<int>(pairs.size() * zetas.size());
  return parallel_map(rows, common.jobs, [&](int r) {
    const auto& [k1, k2] = pairs[r / zetas.size()];
    const bool proportional = (r / zetas.size()) % 2 == 0;
    const double zeta = zetas[r % zetas.size()];
    const int n = k1.dim();
    Matrix b(n, 2 * n);
    b << Matrix::Identity(n, n), Matrix::Identity(n, n);
    const Datum datum(Decomposition({n, n}), {0.5, 0.5}, {1.0}, {b});
    ConstraintFunction nu;
    nu.set({0, 1}, zeta);
    const double v = max_coupling(datum, {k1, k2}, nu, opts).value;
    const double bound = dep_epi_bound(EntropyPower::of_gaussian(k1), EntropyPower::of_gaussian(k2), zeta);
    const double solver_power = 2.0 * std::numbers::pi * std::numbers::e * std::exp(v / n);
    const double excess = v - n * std::log(bound / (2.0 * std::numbers::pi * std::numbers::e));
    return row_status({{"n", n},
                       {"proportional", proportional},
                       {"zeta", gctool::real(zeta)},
                       {"solver_power", gctool::real(solver_power)},
                       {"bound", gctool::real(bound)},
                       {"log_excess", gctool::real(excess)}},
                      proportional ? std::abs(excess) <= 1e-6 : excess >= -1e-9);
  });
}

std::vector<json> profile_saddle_grid(int trials, const Common& common) {
  std::vector<GameSpec> specs;
  for (int n = 1; n <= 3; ++n)
    for (double zeta : {0.0, 0.5, kInf}) specs.push_back(GameSpec{n, 1.0 + 0.5 * (n - 1), 1.0, zeta});
  const SolverOptions opts = common.solver();
  return parallel_map(static_cast<int>(specs.size()), common.jobs, [&](int i) {
    const GameSpec& s = specs[i];
    const SaddleReport r = saddle_deviation_test(s, trials, common.resolved_seed() + i, opts);
    return row_status({{"n", s.n},
                       {"P", s.P},
                       {"N", s.N_noise},
                       {"zeta", gctool::real(s.zeta)},
                       {"value", gctool::real(r.saddle_value)},
                       {"worst_violation", gctool::real(r.worst_violation)},
                       {"trials", r.trials}},
                      r.worst_violation <= 1e-6);
  });
}

std::vector<json> profile_comparison(int rho_grid, const Common& common) {
  const Density1D u = Density1D::uniform(0.0, 1.0), l = Density1D::laplace(1.0);
  const std::vector<std::pair<const Density1D*, const Density1D*>> pairs = {{&u, &u}, {&l, &l}, {&u, &l}};
  const std::vector<double> zetas = {0.0, 0.1, 0.5, 1.0, 10.0};
  SumEntropyOptions quad;
  quad.tol = 1e-6;
  quad.max_doublings = 6;
  const int rows = static_cast<int>(pairs.size() * zetas.size());
  return parallel_map(rows, common.jobs, [&](int r) {
    const auto [p1, p2] = pairs[r / zetas.size()];
    const double zeta = zetas[r % zetas.size()];
    log(common, "spot check " + p1->name + " + " + p2->name + ", zeta " + std::to_string(zeta));
    const SpotCheck s = comparison_spot_check(*p1, *p2, zeta, rho_grid, 1e-3, quad);
    return row_status({{"law1", p1->name},
                       {"law2", p2->name},
                       {"zeta", zeta},
                       {"lhs_lower_bound", gctool::real(s.lhs_lower_bound)},
                       {"rhs", gctool::real(s.rhs)},
                       {"margin", gctool::real(s.margin)},
                       {"best_rho", s.best_rho},
                       {"rho_bar", s.rho_bar}},
                      s.status == SpotStatus::pass, s.status == SpotStatus::inconclusive);
  });
}

Outcome cmd_verify(const std::string& profile, int trials, int rho_grid, const Common& common) {
  std::vector<json> rows;
  if (profile == "epi") rows = profile_epi(common);
  else if (profile == "bm") rows = profile_bm(common);
  else if (profile == "depepi-grid") rows = profile_depepi_grid(common);
  else if (profile == "saddle-grid") rows = profile_saddle_grid(trials, common);
  else if (profile == "comparison-nongaussian") rows = profile_comparison(rho_grid, common);
  else throw gctool::InputError("--profile: unknown profile \"" + profile + "\"");
  int passed = 0, failed = 0, inconclusive = 0;
  for (const json& r : rows) {
    const std::string s = r["status"];
    passed += s == "PASS";
    failed += s == "FAIL";
    inconclusive += s == "INCONCLUSIVE";
  }
  Outcome o;
  o.result = {{"profile", profile}, {"rows", rows}};
  o.diagnostics = {{"passed", passed}, {"failed", failed}, {"inconclusive", inconclusive}};
  o.exit_code = failed == 0 ? kOk : kFail;
  return o;
}

json envelope(const std::string& command, const json& inputs) {
  return {{"command", command}, {"version", GAUSSCOUPLE_VERSION}, {"input_digest", gctool::digest(inputs)}};
}

void emit(json report) { std::cout << gctool::dump(report) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian couplings, Brascamp-Lieb type constants and entropy bounds"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  auto add_solver_flags = [&](CLI::App* sub) {
    sub->add_option("--tol", common.tol, "Target accuracy of objective values")->check(CLI::PositiveNumber);
    sub->add_option("--max-iters", common.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Random seed (fallback: GAUSSCOUPLE_SEED, then 0)");
  };
  app.add_option("--jobs", common.jobs, "Worker threads for independent evaluations")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", common.verbose, "Progress messages on stderr");

  std::string datum_path, marginals_path;
  int trials = 16;
  auto* feas = app.add_subcommand("feasibility", "Scaling and dimension conditions of a datum");
  feas->add_option("datum", datum_path, "Datum JSON file")->required();
  feas->add_option("--trials", trials, "Random subspace tuples")->check(CLI::NonNegativeNumber);
  add_seed(feas);

  bool certify = false;
  auto* mc = app.add_subcommand("max-coupling", "Maximize sum_j d_j log det(B_j K B_j^T) over couplings");
  mc->add_option("datum", datum_path, "Datum JSON file")->required();
  mc->add_option("marginals", marginals_path, "Marginals JSON file")->required();
  mc->add_flag("--certify", certify, "Solve the dual and report the duality gap");
  add_solver_flags(mc);
  add_seed(mc);

  std::optional<std::string> c_text;
  bool best_c = false, nu_from_datum = false;
  auto* cst = app.add_subcommand("constant", "Gaussian Brascamp-Lieb type constant D_g");
  cst->add_option("datum", datum_path, "Datum JSON file")->required();
  cst->add_option("--c", c_text, "Exponents c, comma separated (default: from the datum)");
  cst->add_flag("--best-c", best_c, "Optimize c over the scaling simplex (minimax identity)");
  cst->add_flag("--nu-from-datum", nu_from_datum, "Apply the datum's correlation constraints");
  add_solver_flags(cst);
  add_seed(cst);

  int n = 1;
  std::string h1_text, h2_text, zeta_text = "0";
  auto* dep = app.add_subcommand("depepi", "Dependent entropy power bound");
  dep->add_option("--n", n, "Dimension")->required();
  dep->add_option("--h1", h1_text, "Entropy of X1 (nats)")->required();
  dep->add_option("--h2", h2_text, "Entropy of X2 (nats)")->required();
  dep->add_option("--zeta", zeta_text, "Mutual information budget (real or inf)");

  std::string p_text = "1", noise_text = "1";
  int saddle_trials = 50;
  auto* sad = app.add_subcommand("saddle", "Value of the constrained additive-noise game");
  sad->add_option("--n", n, "Dimension");
  sad->add_option("--P", p_text, "Signal power budget");
  sad->add_option("--N", noise_text, "Noise power budget");
  sad->add_option("--zeta", zeta_text, "Mutual information budget (real or inf)");
  sad->add_option("--trials", saddle_trials, "Random deviations per player (0 disables)")
      ->check(CLI::NonNegativeNumber);
  add_solver_flags(sad);
  add_seed(sad);

  std::string profile;
  int rho_grid = 3, verify_trials = 20;
  auto* ver = app.add_subcommand("verify", "Run an oracle verification profile");
  ver->add_option("--profile", profile, "epi | bm | depepi-grid | saddle-grid | comparison-nongaussian")
      ->required()
      ->check(CLI::IsMember({"epi", "bm", "depepi-grid", "saddle-grid", "comparison-nongaussian"}));
  ver->add_option("--rho-grid", rho_grid, "Copula correlations per spot check")->check(CLI::PositiveNumber);
  ver->add_option("--trials", verify_trials, "Deviations per player in saddle-grid")->check(CLI::PositiveNumber);
  add_solver_flags(ver);
  add_seed(ver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  json inputs = {{"command", command}};
  try {
    Outcome o;
    json flags = json::object();
    if (command == "feasibility") {
      const json raw = gctool::read_json_file(datum_path);
      const auto in = gctool::parse_datum(raw, datum_path);
      flags = {{"trials", trials}, {"seed", common.resolved_seed()}};
      inputs["datum"] = raw;
      inputs["flags"] = flags;
      o = cmd_feasibility(in, trials, common);
    } else if (command == "max-coupling") {
      const json raw = gctool::read_json_file(datum_path);
      const json raw_m = gctool::read_json_file(marginals_path);
      const auto in = gctool::parse_datum(raw, datum_path);
      const auto marginals = gctool::parse_marginals(raw_m, marginals_path);
      inputs["datum"] = raw;
      inputs["marginals"] = raw_m;
      inputs["flags"] = {{"tol", common.tol}, {"max_iters", common.max_iters}, {"certify", certify},
                         {"seed", common.resolved_seed()}};
      o = cmd_max_coupling(in, marginals, certify, common);
    } else if (command == "constant") {
      const json raw = gctool::read_json_file(datum_path);
      const auto in = gctool::parse_datum(raw, datum_path);
      inputs["datum"] = raw;
      inputs["flags"] = {{"tol", common.tol},       {"max_iters", common.max_iters},
                         {"best_c", best_c},        {"nu_from_datum", nu_from_datum},
                         {"c", c_text.value_or("")}, {"seed", common.resolved_seed()}};
      o = cmd_constant(in, c_text, best_c, nu_from_datum, common);
    } else if (command == "depepi") {
      const double h1 = parse_real_flag(h1_text, "--h1"), h2v = parse_real_flag(h2_text, "--h2");
      const double zeta = parse_real_flag(zeta_text, "--zeta");
      inputs["flags"] = {{"n", n}, {"h1", h1}, {"h2", h2v}, {"zeta", gctool::real(zeta)}};
      o = cmd_depepi(n, h1, h2v, zeta);
    } else if (command == "saddle") {
      GameSpec spec{n, parse_real_flag(p_text, "--P"), parse_real_flag(noise_text, "--N"),
                    parse_real_flag(zeta_text, "--zeta")};
      try {
        spec.validate();
      } catch (const SchemaError& e) {
        throw gctool::InputError(e.what());
      }
      inputs["flags"] = {{"n", n},           {"P", spec.P}, {"N", spec.N_noise}, {"zeta", gctool::real(spec.zeta)},
                         {"trials", saddle_trials}, {"tol", common.tol}, {"seed", common.resolved_seed()}};
      o = cmd_saddle(spec, saddle_trials, common);
    } else {
      inputs["flags"] = {{"profile", profile},   {"rho_grid", rho_grid}, {"trials", verify_trials},
                         {"tol", common.tol},     {"seed", common.resolved_seed()}};
      o = cmd_verify(profile, verify_trials, rho_grid, common);
    }
    json report = envelope(command, inputs);
    report["result"] = o.result;
    report["diagnostics"] = o.diagnostics;
    emit(report);
    return o.exit_code;
  } catch (const gctool::InputError& e) {
    std::cerr << "gausscouple " << command << ": " << e.what() << '\n';
    return kUsage;
  } catch (const NonSurjectiveMap& e) {
    std::cerr << "gausscouple " << command << ": " << e.what() << '\n';
    json report = envelope(command, inputs);
    report["error"] = {{"type", "NonSurjectiveMap"}, {"message", e.what()}};
    emit(report);
    return kNonSurjective;
  } catch (const NoConvergence& e) {
    std::cerr << "gausscouple " << command << ": " << e.what() << '\n';
    json report = envelope(command, inputs);
    report["error"] = {{"type", "NoConvergence"}, {"message", e.what()}};
    emit(report);
    return kNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "gausscouple " << command << ": " << e.what() << '\n';
    return kUsage;
  }
}
