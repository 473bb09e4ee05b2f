// dpx: diagonal preconditioning toolbox.
//
// File formats: matrices use the plain text "<rows> <cols>" format (vectors
// are n x 1 matrices), structured results are JSON, sweeps are CSV.  All
// randomness flows from --seed (default 0); the same config and seed always
// reproduce byte-identical outputs.  Output files are written atomically.
// Design-matrix scalings follow the column convention X -> X diag(d)^{-1/2}.
// Exit codes: 0 success, 1 domain error, 2 I/O or usage error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpx/errors.hpp"
#include "dpx/linalg.hpp"
#include "dpx/matrix_io.hpp"
#include "dpx/optimal.hpp"
#include "dpx/precondition.hpp"
#include "dpx/randomlab.hpp"
#include "dpx/solvers.hpp"

using json = nlohmann::ordered_json;

namespace {

dpx::Vector read_vector_file(const std::string& path) {
  dpx::Matrix m = dpx::read_matrix_file(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw dpx::IoError(path + ": expected a vector (n x 1 or 1 x n matrix)");
}

json vector_to_json(const dpx::Vector& v) {
  json out = json::array();
  for (long i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json trace_to_json(const std::vector<std::pair<double, double>>& trace) {
  json out = json::array();
  for (const auto& [kappa, pot] : trace) out.push_back({kappa, pot});
  return out;
}

json opt_result_to_json(const dpx::OptResult& r, double kappa_before) {
  json out;
  out["kappa_before"] = kappa_before;
  out["kappa_after"] = r.kappa_achieved;
  out["kappa_certified"] = r.kappa_certified;
  out["d"] = vector_to_json(r.d_opt.vec());
  out["outer_iterations"] = r.outer_iterations;
  out["trace"] = trace_to_json(r.trace);
  return out;
}

void emit(const json& report, const std::string& out_path) {
  std::string text = report.dump(2);
  text.push_back('\n');
  std::cout << text;
  if (!out_path.empty()) dpx::atomic_write_file(out_path, text);
}

dpx::CovKind parse_cov_kind(const std::string& name) {
  if (name == "spd_random") return dpx::CovKind::spd_random;
  if (name == "dominant") return dpx::CovKind::dominant_corr_with_scales;
  if (name == "identity") return dpx::CovKind::identity;
  if (name == "strong_corr") return dpx::CovKind::strong_corr;
  throw dpx::DomainError(dpx::ErrorKind::InvalidSpec,
                         "unknown covariance kind '" + name + "'");
}

dpx::IterMethod parse_iter_method(const std::string& name) {
  if (name == "jacobi") return dpx::IterMethod::jacobi;
  if (name == "gauss_seidel") return dpx::IterMethod::gauss_seidel;
  if (name == "kaczmarz_cyclic") return dpx::IterMethod::kaczmarz_cyclic;
  if (name == "kaczmarz_random") return dpx::IterMethod::kaczmarz_random;
  if (name == "steepest_descent") return dpx::IterMethod::steepest_descent;
  if (name == "cg") return dpx::IterMethod::cg;
  throw dpx::DomainError(dpx::ErrorKind::InvalidSpec,
                         "unknown solver method '" + name + "'");
}

dpx::StrategyKind parse_strategy(const std::string& name) {
  if (name == "none") return dpx::StrategyKind::none;
  if (name == "fixed" || name == "fixed_colstats")
    return dpx::StrategyKind::fixed_colstats;
  if (name == "optimal") return dpx::StrategyKind::optimal;
  if (name == "batchnorm") return dpx::StrategyKind::batchnorm;
  if (name == "adaptive" || name == "adaptive_optimal")
    return dpx::StrategyKind::adaptive_optimal;
  throw dpx::DomainError(dpx::ErrorKind::InvalidSpec,
                         "unknown strategy '" + name + "'");
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ------------------------------------------------------------------ gen

struct GenArgs {
  std::string kind = "spd_random";
  int p = 3;
  double target_cond = 10;
  double alpha = 2;
  uint64_t seed = 0;
  std::string out;
  std::string rhs_out;
};

int run_gen(const GenArgs& a) {
  dpx::CovSpec spec;
  spec.p = a.p;
  spec.kind = parse_cov_kind(a.kind);
  spec.target_cond = a.target_cond;
  spec.alpha = a.alpha;
  spec.seed = a.seed;
  dpx::SymMatrix Sigma = dpx::gen_cov(spec);
  dpx::write_matrix_file(a.out, Sigma.mat());

  json report;
  report["command"] = "gen";
  report["config"] = {{"kind", a.kind},          {"p", a.p},
                      {"target_cond", a.target_cond}, {"alpha", a.alpha},
                      {"seed", a.seed},          {"out", a.out},
                      {"rhs_out", a.rhs_out}};
  report["kappa"] = dpx::cond_2(Sigma).kappa;
  if (!a.rhs_out.empty()) {
    dpx::Rng rng(dpx::derive_seed(a.seed, 7));
    dpx::Vector b(a.p);
    for (int i = 0; i < a.p; ++i) b[i] = rng.normal();
    dpx::write_matrix_file(a.rhs_out, dpx::Matrix(b));
  }
  emit(report, "");
  return 0;
}

// ----------------------------------------------------------------- cond

int run_cond(const std::string& input) {
  dpx::Matrix m = dpx::read_matrix_file(input);
  json report;
  report["command"] = "cond";
  report["config"] = {{"input", input}};
  report["rows"] = m.rows();
  report["cols"] = m.cols();
  if (m.rows() == m.cols()) {
    dpx::CondReport c = dpx::cond_2(dpx::SymMatrix(m));
    report["kappa"] = c.kappa;
    report["max"] = c.lambda_max;
    report["min"] = c.lambda_min;
  } else {
    dpx::CondReport c = dpx::cond_rect(m);
    report["kappa"] = c.kappa;
    report["max"] = c.lambda_max;
    report["min"] = c.lambda_min;
  }
  emit(report, "");
  return 0;
}

// -------------------------------------------------------------- precond

struct PrecondArgs {
  std::string input;
  std::string method = "jacobi";
  std::string out;
  double beta = 0.05;
  double eps = 1e-3;
  int max_outer = 10000;
  double p_norm = 2;
  int sink_max_iter = 10000;
  double sink_tol = 1e-10;
};

int run_precond(const PrecondArgs& a) {
  dpx::Matrix m = dpx::read_matrix_file(a.input);
  json report;
  report["command"] = "precond";
  report["config"] = {{"input", a.input},   {"method", a.method},
                      {"beta", a.beta},     {"eps", a.eps},
                      {"max_outer", a.max_outer}, {"p_norm", a.p_norm},
                      {"out", a.out}};

  if (a.method == "jacobi") {
    dpx::SymMatrix M(m);
    dpx::DiagScaling d = dpx::jacobi_precond(M);
    report["d"] = vector_to_json(d.vec());
    report["kappa_before"] = dpx::cond_2(M).kappa;
    report["kappa_after"] = dpx::cond_2(dpx::scale_sym(M, d)).kappa;
  } else if (a.method == "sinkhorn") {
    dpx::EquilibrationResult eq =
        dpx::sinkhorn_equilibrate(m, a.p_norm, a.sink_max_iter, a.sink_tol);
    report["d_row"] = vector_to_json(eq.d_row.vec());
    report["d_col"] = vector_to_json(eq.d_col.vec());
    report["iterations"] = eq.iterations;
    report["converged"] = eq.converged;
  } else if (a.method == "colstats-variance" || a.method == "colstats-norm2") {
    dpx::ColStatsMode mode = a.method == "colstats-variance"
                                 ? dpx::ColStatsMode::variance
                                 : dpx::ColStatsMode::norm2;
    dpx::DiagScaling d = dpx::col_stats_precond(m, mode);
    report["d"] = vector_to_json(d.vec());
    report["kappa_before"] = dpx::cond_rect(m).kappa;
    report["kappa_after"] =
        dpx::cond_rect(dpx::apply_scaling(m, d)).kappa;
  } else if (a.method == "optimal-ipm" || a.method == "optimal-bisect") {
    dpx::SymMatrix M(m);
    double before = dpx::cond_2(M).kappa;
    dpx::IpmConfig cfg;
    cfg.beta = a.beta;
    cfg.eps = a.eps;
    cfg.max_outer = a.max_outer;
    dpx::OptResult r = a.method == "optimal-ipm"
                           ? dpx::ipm_optimize(M, cfg)
                           : dpx::bisect_optimize(M, a.eps, cfg);
    report.update(opt_result_to_json(r, before));
  } else {
    throw dpx::DomainError(dpx::ErrorKind::InvalidSpec,
                           "unknown precond method '" + a.method + "'");
  }
  emit(report, a.out);
  return 0;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  std::string input;
  std::string rhs;
  std::string method = "cg";
  std::string out;
  double tol = 1e-8;
  long max_iter = 100000;
  uint64_t seed = 0;
};

int run_solve(const SolveArgs& a) {
  dpx::Matrix A = dpx::read_matrix_file(a.input);
  dpx::Vector b = read_vector_file(a.rhs);
  dpx::IterOptions opts;
  opts.tol = a.tol;
  opts.max_iter = a.max_iter;
  opts.seed = a.seed;
  auto [x, trace] = dpx::iterative_solve(A, b, parse_iter_method(a.method),
                                         opts);
  if (!a.out.empty()) dpx::write_matrix_file(a.out, dpx::Matrix(x));

  json report;
  report["command"] = "solve";
  report["config"] = {{"input", a.input}, {"rhs", a.rhs},
                      {"method", a.method}, {"tol", a.tol},
                      {"max_iter", a.max_iter}, {"seed", a.seed},
                      {"out", a.out}};
  report["iterations"] = trace.iterations;
  report["converged"] = trace.converged;
  report["final_rel_error"] = trace.final_rel_error;
  emit(report, "");
  return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  int n = 1000;
  int p = 20;
  double target_cond = 300;
  std::string strategies = "none,fixed,optimal,batchnorm";
  int seeds = 5;
  uint64_t base_seed = 0;
  bool sgd = false;
  double batch_frac = 0.15;
  double tol = 0.01;
  long max_iter = 200000;
  int refresh_every = 100;
  std::string out;
};

int run_bench_cmd(const BenchArgs& a) {
  dpx::BenchSpec spec;
  spec.n = a.n;
  spec.p = a.p;
  spec.target_cond = a.target_cond;
  for (const std::string& s : split_csv(a.strategies)) {
    spec.strategies.push_back(parse_strategy(s));
  }
  spec.seeds = a.seeds;
  spec.base_seed = a.base_seed;
  spec.sgd = a.sgd;
  spec.batch_frac = a.batch_frac;
  spec.tol = a.tol;
  spec.max_iter = a.max_iter;
  spec.refresh_every = a.refresh_every;

  std::vector<dpx::BenchRow> rows = dpx::run_bench(spec);
  std::ostringstream csv;
  dpx::write_bench_csv(csv, rows);
  dpx::atomic_write_file(a.out, csv.str());

  json report;
  report["command"] = "bench";
  report["config"] = {{"n", a.n},
                      {"p", a.p},
                      {"target_cond", a.target_cond},
                      {"strategies", a.strategies},
                      {"seeds", a.seeds},
                      {"base_seed", a.base_seed},
                      {"sgd", a.sgd},
                      {"batch_frac", a.batch_frac},
                      {"tol", a.tol},
                      {"max_iter", a.max_iter},
                      {"refresh_every", a.refresh_every},
                      {"out", a.out}};
  report["rows"] = rows.size();
  emit(report, "");
  return 0;
}

// -------------------------------------------------------- concentration

struct ConcArgs {
  int p = 20;
  std::string kind = "spd_random";
  double target_cond = 100;
  double alpha = 2;
  std::string ns = "2000,8000";
  int trials = 50;
  uint64_t seed = 0;
  std::string out;
};

int run_concentration(const ConcArgs& a) {
  dpx::CovSpec spec;
  spec.p = a.p;
  spec.kind = parse_cov_kind(a.kind);
  spec.target_cond = a.target_cond;
  spec.alpha = a.alpha;
  spec.seed = dpx::derive_seed(a.seed, 1);
  dpx::SymMatrix Sigma = dpx::gen_cov(spec);

  std::vector<int> ns;
  for (const std::string& s : split_csv(a.ns)) ns.push_back(std::stoi(s));
  std::vector<dpx::SweepRow> rows =
      dpx::concentration_sweep(Sigma, ns, a.trials, dpx::derive_seed(a.seed, 2));
  std::ostringstream csv;
  dpx::write_sweep_csv(csv, rows);
  dpx::atomic_write_file(a.out, csv.str());

  json report;
  report["command"] = "concentration";
  report["config"] = {{"p", a.p},       {"kind", a.kind},
                      {"target_cond", a.target_cond}, {"alpha", a.alpha},
                      {"ns", a.ns},     {"trials", a.trials},
                      {"seed", a.seed}, {"out", a.out}};
  json jrows = json::array();
  for (const auto& r : rows) {
    jrows.push_back(
        {{"n", r.n}, {"median_gap", r.median_gap}, {"q90_gap", r.q90_gap}});
  }
  report["rows"] = jrows;
  emit(report, "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dpx: diagonal preconditioning toolbox"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* cgen = app.add_subcommand("gen", "Generate a covariance matrix");
  cgen->add_option("--kind", gen.kind,
                   "spd_random | dominant | identity | strong_corr");
  cgen->add_option("--p", gen.p, "dimension");
  cgen->add_option("--target-cond", gen.target_cond, "target condition number");
  cgen->add_option("--alpha", gen.alpha, "dominance factor");
  cgen->add_option("--seed", gen.seed, "random seed (default 0)");
  cgen->add_option("--out", gen.out, "output matrix file")->required();
  cgen->add_option("--rhs-out", gen.rhs_out,
                   "also write a standard normal right-hand side vector");

  std::string cond_input;
  CLI::App* ccond =
      app.add_subcommand("cond", "Condition number of a matrix file");
  ccond->add_option("--input", cond_input, "matrix file")->required();

  PrecondArgs pre;
  CLI::App* cpre =
      app.add_subcommand("precond", "Compute a diagonal preconditioner");
  cpre->add_option("--input", pre.input, "matrix file")->required();
  cpre->add_option("--method", pre.method,
                   "jacobi | sinkhorn | colstats-variance | colstats-norm2 | "
                   "optimal-ipm | optimal-bisect");
  cpre->add_option("--out", pre.out, "write the JSON report here too");
  cpre->add_option("--beta", pre.beta, "interior point kappa step");
  cpre->add_option("--eps", pre.eps, "relative kappa tolerance");
  cpre->add_option("--max-outer", pre.max_outer, "outer iteration cap");
  cpre->add_option("--p-norm", pre.p_norm, "Sinkhorn row/column norm");
  cpre->add_option("--sink-max-iter", pre.sink_max_iter,
                   "Sinkhorn sweep cap");
  cpre->add_option("--sink-tol", pre.sink_tol, "Sinkhorn norm tolerance");

  SolveArgs sol;
  CLI::App* csol = app.add_subcommand("solve", "Iterative linear solve");
  csol->add_option("--input", sol.input, "system matrix file")->required();
  csol->add_option("--rhs", sol.rhs, "right-hand side vector file")->required();
  csol->add_option("--method", sol.method,
                   "jacobi | gauss_seidel | kaczmarz_cyclic | kaczmarz_random "
                   "| steepest_descent | cg");
  csol->add_option("--tol", sol.tol, "relative residual tolerance");
  csol->add_option("--max-iter", sol.max_iter, "iteration cap");
  csol->add_option("--seed", sol.seed, "random seed (default 0)");
  csol->add_option("--out", sol.out, "write the solution vector here");

  BenchArgs ben;
  CLI::App* cben =
      app.add_subcommand("bench", "Preconditioning strategy benchmark");
  cben->add_option("--n", ben.n, "rows");
  cben->add_option("--p", ben.p, "columns");
  cben->add_option("--target-cond", ben.target_cond,
                   "population condition number");
  cben->add_option("--strategies", ben.strategies,
                   "comma list: none,fixed,optimal,batchnorm,adaptive");
  cben->add_option("--seeds", ben.seeds, "number of seeded repetitions");
  cben->add_option("--base-seed", ben.base_seed, "first seed (default 0)");
  cben->add_flag("--sgd", ben.sgd, "minibatch instead of full gradient");
  cben->add_option("--batch-frac", ben.batch_frac, "minibatch fraction");
  cben->add_option("--tol", ben.tol, "relative parameter error target");
  cben->add_option("--max-iter", ben.max_iter, "iteration cap");
  cben->add_option("--refresh-every", ben.refresh_every,
                   "adaptive scaling refresh cadence");
  cben->add_option("--out", ben.out, "output CSV path")->required();

  ConcArgs conc;
  CLI::App* cconc = app.add_subcommand(
      "concentration", "Sample-size sweep of condition-number gaps");
  cconc->add_option("--p", conc.p, "dimension");
  cconc->add_option("--kind", conc.kind,
                    "spd_random | dominant | identity | strong_corr");
  cconc->add_option("--target-cond", conc.target_cond,
                    "population condition number");
  cconc->add_option("--alpha", conc.alpha, "dominance factor");
  cconc->add_option("--ns", conc.ns, "comma list of sample sizes");
  cconc->add_option("--trials", conc.trials, "trials per sample size");
  cconc->add_option("--seed", conc.seed, "random seed (default 0)");
  cconc->add_option("--out", conc.out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
    if (cgen->parsed()) return run_gen(gen);
    if (ccond->parsed()) return run_cond(cond_input);
    if (cpre->parsed()) return run_precond(pre);
    if (csol->parsed()) return run_solve(sol);
    if (cben->parsed()) return run_bench_cmd(ben);
    if (cconc->parsed()) return run_concentration(conc);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const dpx::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const dpx::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
