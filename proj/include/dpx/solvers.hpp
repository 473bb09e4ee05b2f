#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpx/linalg.hpp"
#include "dpx/optimal.hpp"

namespace dpx {

enum class IterMethod {
  jacobi,
  gauss_seidel,
  kaczmarz_cyclic,
  kaczmarz_random,
  steepest_descent,
  cg,
};

enum class StrategyKind {
  none,
  fixed_colstats,
  optimal,
  batchnorm,
  adaptive_optimal,
};

struct PrecondStrategy {
  StrategyKind kind = StrategyKind::none;
  int refresh_every = 100;  // adaptive_optimal recompute cadence
};

std::string strategy_name(StrategyKind k);

// Common convergence log.  What residual_history records depends on the
// operation: linear solvers log relative residuals ||Ax-b||/||b||, the
// least-squares drivers log relative parameter error against the direct
// solution, and the logistic driver logs gradient norms.
struct SolveTrace {
  long iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;
  double final_rel_error = 0;
};

struct IterOptions {
  double tol = 1e-8;
  long max_iter = 100000;
  uint64_t seed = 0;  // used by kaczmarz_random only
};

// Classical iterative linear solvers from x0 = 0.  jacobi / gauss_seidel
// require SPD or strictly diagonally dominant A; steepest_descent / cg
// require SPD.  One Kaczmarz iteration is a single row projection.
std::pair<Vector, SolveTrace> iterative_solve(const Matrix& A,
                                              const Vector& b,
                                              IterMethod method,
                                              const IterOptions& opts = {});

struct LsqResult {
  Vector theta;  // coefficients in the original (unscaled) coordinates
  SolveTrace trace;
  double kappa_effective = 0;  // cond of the design the solver actually saw
  Vector d_used;               // final diagonal scaling (ones for none)
};

// Full-gradient descent on (1/n)||X theta - y||^2 with exact-quadratic
// initial step plus Armijo backtracking.  Converged when the back-mapped
// coefficients are within tol (relative) of the direct least-squares
// solution.  batchnorm alternates exact theta- and d-solves instead of
// gradient steps; adaptive_optimal sees the full design and thus reduces to
// the optimal strategy.
LsqResult gd_least_squares(const Matrix& X, const Vector& y,
                           const PrecondStrategy& strategy, double tol = 0.01,
                           long max_iter = 200000, const IpmConfig& cfg = {});

// Minibatch variant: each iteration samples ceil(batch_frac * n) rows
// without replacement and steps on the batch objective.  batch_frac = 1
// reproduces gd_least_squares exactly.  adaptive_optimal accumulates the
// deduplicated stream of visited rows and refreshes its scaling every
// refresh_every iterations.
LsqResult sgd_least_squares(const Matrix& X, const Vector& y,
                            const PrecondStrategy& strategy,
                            double batch_frac, double tol = 0.01,
                            long max_iter = 200000, uint64_t seed = 0,
                            const IpmConfig& cfg = {});

// One sweep of alternating exact minimization for y ~ X diag(d) theta:
// solve for theta at fixed d, then for d at fixed theta (entries clamped to
// >= 1e-12).  theta is the incoming iterate; the exact theta-solve replaces
// it entirely, so only its size is validated.  A zero theta-solve keeps d
// unchanged.
std::pair<Vector, DiagScaling> batchnorm_step(const Matrix& X,
                                              const Vector& y,
                                              const Vector& theta,
                                              const DiagScaling& d);

struct AdaptiveUpdate {
  Matrix buffer;                 // deduplicated rows seen so far
  std::optional<DiagScaling> d;  // present once the buffer has full rank
};

// Fold a new batch of rows into the cumulative design (rows deduplicated by
// exact byte equality) and recompute the optimal scaling when the buffer
// has full column rank.
AdaptiveUpdate adaptive_optimal_update(const Matrix& buffer,
                                       const Matrix& new_batch,
                                       const IpmConfig& cfg = {});

struct LogisticResult {
  Matrix Theta;  // p x K coefficients in original coordinates
  SolveTrace trace;
  double log_gap;   // ln(f(Theta) - f(Theta*)) against a 1e-8 gradient run
  double accuracy;  // training accuracy at exit
  double kappa_effective = 0;
};

// Full-batch gradient descent for K-class multinomial logistic regression
// with Armijo backtracking; stops at ||grad||_F <= grad_tol.  Supported
// strategies: none, fixed_colstats, optimal.
LogisticResult multinomial_logistic_gd(const Matrix& X,
                                       const std::vector<int>& labels, int K,
                                       const PrecondStrategy& strategy,
                                       double grad_tol = 1e-3,
                                       long max_iter = 100000,
                                       const IpmConfig& cfg = {});

enum class LossKind { quadratic, logistic_plus_quadratic };

// Scalar loss f_i(z) = z^2/2 (+ a*log(1+e^z)); lambda_mod and L_mod bound
// f'' from below and above.
struct ScalarLossSpec {
  LossKind kind = LossKind::quadratic;
  double a = 0;
  double lambda_mod = 1;
  double L_mod = 1;

  static ScalarLossSpec quadratic() { return {LossKind::quadratic, 0, 1, 1}; }
  static ScalarLossSpec logistic_plus_quadratic(double a);
};

struct HessianCheck {
  double lhs;  // cond of the Hessian with rows x_i replaced by D x_i
  double rhs;  // (L/lambda)^2 * cond(H(X,w)) * cond(DX'XD) / cond(X'X)
  double kappa_gram;
  double kappa_gram_scaled;
};

// Verifies the conditioning bound for losses built from a scalar f: the
// Hessian of the rescaled problem is bounded by the Gram-ratio product.
// Requires cond(DX'XD) <= cond(X'X) for the supplied diagonal d (else
// HypothesisFailed); d multiplies rows directly (D = diag(d)).
HessianCheck hessian_cond_check(const ScalarLossSpec& loss, const Matrix& X,
                                const Vector& w, const Vector& d);

struct BenchRow {
  std::string strategy;
  int n = 0;
  int p = 0;
  uint64_t seed = 0;
  double kappa_effective = 0;
  long iterations = 0;
  bool converged = false;
};

struct BenchSpec {
  int n = 1000;
  int p = 20;
  double target_cond = 300;
  std::vector<StrategyKind> strategies;
  int seeds = 5;
  uint64_t base_seed = 0;
  bool sgd = false;
  double batch_frac = 0.15;
  double tol = 0.01;
  long max_iter = 200000;
  int refresh_every = 100;
  IpmConfig ipm;
};

// Seeded strategy comparison on synthetic regression problems.
std::vector<BenchRow> run_bench(const BenchSpec& spec);

// CSV with header strategy,n,p,seed,kappa_effective,iterations,converged.
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace dpx
