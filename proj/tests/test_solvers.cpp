#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "dpx/errors.hpp"
#include "dpx/linalg.hpp"
#include "dpx/precondition.hpp"
#include "dpx/randomlab.hpp"
#include "dpx/solvers.hpp"

using namespace dpx;

namespace {

Matrix random_matrix(long n, long p, uint64_t seed) {
  Rng rng(seed);
  Matrix X(n, p);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < p; ++j) X(i, j) = rng.normal();
  }
  return X;
}

Matrix spd_matrix(int p, uint64_t seed, double shift) {
  Matrix B = random_matrix(p, p, seed);
  return B * B.transpose() + shift * Matrix::Identity(p, p);
}

// Design with diagonal population covariance: columns scaled by a
// log-spread factor so plain GD is slow and the optimal scaling trivial.
Matrix diag_cov_design(long n, long p, double spread, uint64_t seed) {
  Matrix X = random_matrix(n, p, seed);
  for (long j = 0; j < p; ++j) {
    X.col(j) *= std::pow(spread, double(j) / double(std::max(p - 1, 1L)));
  }
  return X;
}

double lsq_objective(const Matrix& X, const Vector& y, const Vector& theta) {
  return (X * theta - y).squaredNorm() / double(X.rows());
}

double median_of_vec(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// Independent multinomial cross-entropy and gradient for oracle checks.
double multinomial_loss(const Matrix& X, const std::vector<int>& labels,
                        const Matrix& Theta) {
  const long n = X.rows();
  Matrix Z = X * Theta;
  double f = 0;
  for (long i = 0; i < n; ++i) {
    double mx = Z.row(i).maxCoeff();
    double lse = 0;
    for (long k = 0; k < Z.cols(); ++k) lse += std::exp(Z(i, k) - mx);
    f += mx + std::log(lse) - Z(i, labels[size_t(i)]);
  }
  return f / double(n);
}

Matrix multinomial_grad(const Matrix& X, const std::vector<int>& labels,
                        const Matrix& Theta) {
  const long n = X.rows();
  const long K = Theta.cols();
  Matrix Z = X * Theta;
  Matrix P(n, K);
  for (long i = 0; i < n; ++i) {
    double mx = Z.row(i).maxCoeff();
    double sum = 0;
    for (long k = 0; k < K; ++k) {
      P(i, k) = std::exp(Z(i, k) - mx);
      sum += P(i, k);
    }
    P.row(i) /= sum;
    P(i, labels[size_t(i)]) -= 1.0;
  }
  return X.transpose() * P / double(n);
}

// Two-class blobs with a deterministic sprinkle of flipped labels so the
// optimum exists (data not linearly separable).
void make_blobs(long n, Matrix& X, std::vector<int>& labels, uint64_t seed) {
  Rng rng(seed);
  X.resize(n, 2);
  labels.resize(size_t(n));
  for (long i = 0; i < n; ++i) {
    int c = i % 2;
    double cx = c == 0 ? -1.5 : 1.5;
    X(i, 0) = cx + rng.normal();
    X(i, 1) = cx + rng.normal();
    labels[size_t(i)] = c;
  }
  for (long i = 0; i < n; i += 37) labels[size_t(i)] = 1 - labels[size_t(i)];
}

}  // namespace

// ---------------------------------------------------------------- linear --

TEST_CASE("jacobi solves the identity in one iteration") {
  Vector b(2);
  b << 2, 3;
  auto [x, tr] = iterative_solve(Matrix::Identity(2, 2), b,
                                 IterMethod::jacobi);
  CHECK(tr.converged);
  CHECK(tr.iterations == 1);
  CHECK((x - b).norm() == 0.0);
  CHECK(tr.residual_history.size() == 1);
}

TEST_CASE("a zero right-hand side needs no iterations") {
  auto [x, tr] = iterative_solve(Matrix::Identity(3, 3), Vector::Zero(3),
                                 IterMethod::cg);
  CHECK(tr.converged);
  CHECK(tr.iterations == 0);
  CHECK(tr.residual_history.empty());
  CHECK(x.norm() == 0.0);
}

TEST_CASE("all methods solve the 2x2 textbook system") {
  Matrix A(2, 2);
  A << 2, 1, 1, 2;
  Vector b(2);
  b << 3, 3;
  Vector expect(2);
  expect << 1, 1;
  for (IterMethod m :
       {IterMethod::jacobi, IterMethod::gauss_seidel,
        IterMethod::kaczmarz_cyclic, IterMethod::kaczmarz_random,
        IterMethod::steepest_descent, IterMethod::cg}) {
    IterOptions opts;
    opts.tol = 1e-10;
    auto [x, tr] = iterative_solve(A, b, m, opts);
    CHECK(tr.converged);
    CHECK((x - expect).norm() < 1e-8);
    CHECK(tr.residual_history.size() == size_t(tr.iterations));
    CHECK(tr.final_rel_error <= opts.tol);
  }
}

TEST_CASE("gauss_seidel needs no more iterations than jacobi") {
  Matrix A = spd_matrix(6, 5, 8.0);  // comfortably diagonally heavy
  Vector b = random_matrix(6, 1, 6).col(0);
  IterOptions opts;
  opts.tol = 1e-10;
  auto [xj, tj] = iterative_solve(A, b, IterMethod::jacobi, opts);
  auto [xg, tg] = iterative_solve(A, b, IterMethod::gauss_seidel, opts);
  CHECK(tj.converged);
  CHECK(tg.converged);
  CHECK(tg.iterations <= tj.iterations);
}

TEST_CASE("method preconditions are enforced") {
  Matrix bad(2, 2);
  bad << 1, 2, 3, 1;  // neither SPD nor diagonally dominant
  Vector b = Vector::Ones(2);
  for (IterMethod m : {IterMethod::jacobi, IterMethod::gauss_seidel}) {
    try {
      iterative_solve(bad, b, m);
      CHECK(false);
    } catch (const DomainError& e) {
      CHECK(e.kind() == ErrorKind::InvalidMethodForMatrix);
    }
  }
  Matrix indef(2, 2);
  indef << 1, 2, 2, 1;  // symmetric, eigenvalues 3 and -1
  for (IterMethod m : {IterMethod::steepest_descent, IterMethod::cg}) {
    try {
      iterative_solve(indef, b, m);
      CHECK(false);
    } catch (const DomainError& e) {
      CHECK(e.kind() == ErrorKind::InvalidMethodForMatrix);
    }
  }
}

TEST_CASE("cyclic kaczmarz finishes orthogonal rows in one sweep") {
  Matrix A(2, 2);
  A << 3, 4, 4, -3;
  Vector xstar(2);
  xstar << 1, 1;
  Vector b = A * xstar;
  IterOptions opts;
  opts.tol = 1e-12;
  auto [x, tr] = iterative_solve(A, b, IterMethod::kaczmarz_cyclic, opts);
  CHECK(tr.converged);
  CHECK(tr.iterations == 2);  // one projection per row
  CHECK((x - xstar).norm() < 1e-10);
}

TEST_CASE("kaczmarz refuses zero rows") {
  Matrix A(2, 2);
  A << 1, 1, 0, 0;
  try {
    iterative_solve(A, Vector::Ones(2), IterMethod::kaczmarz_cyclic);
    CHECK(false);
  } catch (const DomainError& e) {
    CHECK(e.kind() == ErrorKind::DegenerateMatrix);
  }
}

TEST_CASE("randomized kaczmarz is seeded") {
  Matrix A = spd_matrix(5, 77, 3.0);
  Vector b = random_matrix(5, 1, 78).col(0);
  IterOptions opts;
  opts.tol = 1e-8;
  opts.seed = 1;
  auto [x1, t1] = iterative_solve(A, b, IterMethod::kaczmarz_random, opts);
  auto [x2, t2] = iterative_solve(A, b, IterMethod::kaczmarz_random, opts);
  CHECK((x1 - x2).norm() == 0.0);
  CHECK(t1.residual_history == t2.residual_history);
  opts.seed = 2;
  auto [x3, t3] = iterative_solve(A, b, IterMethod::kaczmarz_random, opts);
  CHECK(t3.converged);
  CHECK(t1.residual_history != t3.residual_history);
}

TEST_CASE("cg reaches machine tolerance within dimension-many steps") {
  Matrix A = spd_matrix(8, 15, 1.0);
  Vector b = random_matrix(8, 1, 16).col(0);
  IterOptions opts;
  opts.tol = 1e-12;
  auto [x, tr] = iterative_solve(A, b, IterMethod::cg, opts);
  CHECK(tr.converged);
  CHECK(tr.iterations <= 9);
  CHECK((A * x - b).norm() / b.norm() <= 1e-12);
}

TEST_CASE("cg iteration growth follows the square root of kappa") {
  const int n = 400;
  std::vector<double> log_kappa, log_iters;
  for (double kappa : {4.0, 16.0, 64.0, 256.0}) {
    CovSpec spec;
    spec.p = n;
    spec.kind = CovKind::spd_random;
    spec.target_cond = kappa;
    spec.seed = 500 + static_cast<uint64_t>(kappa);
    SymMatrix A = gen_cov(spec);
    Vector b = random_matrix(n, 1, 42).col(0);
    IterOptions opts;
    opts.tol = 1e-10;
    opts.max_iter = 10 * n;
    auto [x, tr] = iterative_solve(A.mat(), b, IterMethod::cg, opts);
    REQUIRE(tr.converged);
    log_kappa.push_back(std::log(kappa));
    log_iters.push_back(std::log(double(tr.iterations)));
  }
  // Least-squares slope of log(iterations) against log(kappa).
  double mx = 0, my = 0;
  for (size_t i = 0; i < log_kappa.size(); ++i) {
    mx += log_kappa[i];
    my += log_iters[i];
  }
  mx /= double(log_kappa.size());
  my /= double(log_iters.size());
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < log_kappa.size(); ++i) {
    sxy += (log_kappa[i] - mx) * (log_iters[i] - my);
    sxx += (log_kappa[i] - mx) * (log_kappa[i] - mx);
  }
  double slope = sxy / sxx;
  CHECK(slope >= 0.3);
  CHECK(slope <= 0.7);
}

TEST_CASE("jacobi divergence is detected and reported") {
  Matrix A(3, 3);
  A << 1, 0.9, 0.9, 0.9, 1, 0.9, 0.9, 0.9, 1;  // SPD, splitting radius 1.8
  Vector b = Vector::Ones(3);
  try {
    iterative_solve(A, b, IterMethod::jacobi);
    CHECK(false);
  } catch (const DomainError& e) {
    CHECK(e.kind() == ErrorKind::Diverged);
  }
  // Gauss-Seidel converges on the same SPD system.
  auto [x, tr] = iterative_solve(A, b, IterMethod::gauss_seidel);
  CHECK(tr.converged);
}

// ------------------------------------------------------- least squares --

TEST_CASE("gd converges in one iteration on orthonormal columns") {
  Matrix G = random_matrix(8, 2, 90);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = Matrix(qr.householderQ()).leftCols(2);
  Vector y = random_matrix(8, 1, 91).col(0);
  LsqResult r = gd_least_squares(Q, y, PrecondStrategy{StrategyKind::none});
  CHECK(r.trace.converged);
  CHECK(r.trace.iterations == 1);
  CHECK((r.theta - Q.transpose() * y).norm() < 1e-12);
}

TEST_CASE("optimal preconditioning cuts both kappa and iterations") {
  Matrix X = diag_cov_design(200, 4, 60.0, 7);
  Vector theta_star(4);
  theta_star << 1, -2, 0.5, 3;
  Vector y = X * theta_star + 0.05 * random_matrix(200, 1, 8).col(0);
  LsqResult none = gd_least_squares(X, y, PrecondStrategy{StrategyKind::none});
  LsqResult opt =
      gd_least_squares(X, y, PrecondStrategy{StrategyKind::optimal});
  CHECK(none.trace.converged);
  CHECK(opt.trace.converged);
  CHECK(opt.trace.iterations <= none.trace.iterations);
  CHECK(opt.kappa_effective < none.kappa_effective);
  CHECK(none.trace.final_rel_error <= 0.01);
  CHECK(opt.trace.final_rel_error <= 0.01);

  // Back-mapped coefficients agree with an independent direct solve.
  Vector ols = X.colPivHouseholderQr().solve(y);
  CHECK((opt.theta - ols).norm() / ols.norm() <= 0.011);
}

TEST_CASE("strategy metadata lands in the result") {
  Matrix X = diag_cov_design(50, 3, 10.0, 12);
  Vector y = random_matrix(50, 1, 13).col(0);
  LsqResult none = gd_least_squares(X, y, PrecondStrategy{StrategyKind::none});
  CHECK(none.d_used.isOnes());
  CHECK(none.kappa_effective == doctest::Approx(cond_rect(X).kappa));

  LsqResult fixed =
      gd_least_squares(X, y, PrecondStrategy{StrategyKind::fixed_colstats});
  Vector var = col_stats_precond(X, ColStatsMode::variance).vec();
  CHECK((fixed.d_used - var).norm() == 0.0);
  Matrix Xs = apply_scaling(X, DiagScaling(var));
  CHECK(fixed.kappa_effective == doctest::Approx(cond_rect(Xs).kappa));
}

TEST_CASE("least-squares driver validates its inputs") {
  Matrix X = random_matrix(3, 3, 1);
  Vector y = Vector::Ones(3);
  CHECK_THROWS_AS(
      gd_least_squares(X, y, PrecondStrategy{StrategyKind::none}),
      DomainError);  // n <= p

  Matrix wide = random_matrix(10, 2, 2);
  Matrix dup(10, 3);
  dup << wide, wide.col(0);
  try {
    gd_least_squares(dup, random_matrix(10, 1, 3).col(0),
                     PrecondStrategy{StrategyKind::none});
    CHECK(false);
  } catch (const DomainError& e) {
    CHECK(e.kind() == ErrorKind::SingularMatrix);
  }

  CHECK_THROWS_AS(gd_least_squares(wide, random_matrix(10, 1, 3).col(0),
                                   PrecondStrategy{StrategyKind::none}, 0.0),
                  DomainError);
  CHECK_THROWS_AS(
      sgd_least_squares(wide, random_matrix(10, 1, 3).col(0),
                        PrecondStrategy{StrategyKind::none}, 0.0),
      DomainError);
  CHECK_THROWS_AS(
      sgd_least_squares(wide, random_matrix(10, 1, 3).col(0),
                        PrecondStrategy{StrategyKind::none}, 1.5),
      DomainError);
}

TEST_CASE("gd objective never increases across accepted steps") {
  Matrix X = diag_cov_design(60, 3, 25.0, 21);
  Vector y = X * Vector::Ones(3) + 0.1 * random_matrix(60, 1, 22).col(0);
  // The engine is deterministic, so a run capped at k iterations is a
  // prefix of the run capped at k+1; the objective along that shared
  // trajectory must be non-increasing.
  double prev = lsq_objective(X, y, Vector::Zero(3));
  for (long k = 1; k <= 10; ++k) {
    LsqResult r = gd_least_squares(X, y, PrecondStrategy{StrategyKind::none},
                                   1e-14, k);
    double f = lsq_objective(X, y, r.theta);
    CHECK(f <= prev * (1.0 + 1e-12));
    prev = f;
  }
}

TEST_CASE("full-batch sgd reproduces gd bit for bit") {
  Matrix X = diag_cov_design(80, 4, 30.0, 31);
  Vector y = X * Vector::Ones(4) + 0.1 * random_matrix(80, 1, 32).col(0);
  for (StrategyKind kind :
       {StrategyKind::none, StrategyKind::fixed_colstats,
        StrategyKind::optimal}) {
    PrecondStrategy strat{kind};
    LsqResult a = gd_least_squares(X, y, strat);
    LsqResult b = sgd_least_squares(X, y, strat, 1.0, 0.01, 200000, 999);
    CHECK((a.theta - b.theta).norm() == 0.0);
    CHECK(a.trace.iterations == b.trace.iterations);
    CHECK(a.trace.residual_history == b.trace.residual_history);
  }
}

TEST_CASE("minibatch runs are seeded") {
  Matrix X = diag_cov_design(120, 3, 20.0, 41);
  Vector y = X * Vector::Ones(3) + 0.1 * random_matrix(120, 1, 42).col(0);
  PrecondStrategy strat{StrategyKind::none};
  LsqResult a = sgd_least_squares(X, y, strat, 0.25, 0.02, 20000, 5);
  LsqResult b = sgd_least_squares(X, y, strat, 0.25, 0.02, 20000, 5);
  CHECK((a.theta - b.theta).norm() == 0.0);
  CHECK(a.trace.residual_history == b.trace.residual_history);
  LsqResult c = sgd_least_squares(X, y, strat, 0.25, 0.02, 20000, 6);
  CHECK(a.trace.residual_history != c.trace.residual_history);
}

TEST_CASE("adaptive scaling engages on a minibatch stream") {
  Matrix X = diag_cov_design(300, 3, 40.0, 51);
  Vector y = X * Vector::Ones(3) + 0.05 * random_matrix(300, 1, 52).col(0);
  PrecondStrategy strat{StrategyKind::adaptive_optimal};
  strat.refresh_every = 10;
  LsqResult r = sgd_least_squares(X, y, strat, 0.2, 0.02, 50000, 3);
  CHECK(r.trace.converged);
  CHECK_FALSE(r.d_used.isOnes());

  strat.refresh_every = 0;
  CHECK_THROWS_AS(sgd_least_squares(X, y, strat, 0.2, 0.02, 50000, 3),
                  DomainError);
}

TEST_CASE("adaptive under a full batch equals the one-shot optimal run") {
  Matrix X = diag_cov_design(90, 4, 25.0, 61);
  Vector y = X * Vector::Ones(4) + 0.1 * random_matrix(90, 1, 62).col(0);
  LsqResult opt =
      gd_least_squares(X, y, PrecondStrategy{StrategyKind::optimal});
  LsqResult ada = sgd_least_squares(
      X, y, PrecondStrategy{StrategyKind::adaptive_optimal}, 1.0, 0.01,
      200000, 17);
  CHECK((opt.theta - ada.theta).norm() == 0.0);
  CHECK((opt.d_used - ada.d_used).norm() == 0.0);
}

// ----------------------------------------------------------- batchnorm --

TEST_CASE("batchnorm_step solves the identity example exactly") {
  Matrix X = Matrix::Identity(2, 2);
  Vector y(2);
  y << 1, 2;
  auto [theta, d] =
      batchnorm_step(X, y, Vector::Zero(2), DiagScaling(Vector::Ones(2)));
  CHECK((theta - y).norm() < 1e-12);
  CHECK(d[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("batchnorm_step keeps the scaling when the fit is zero") {
  Matrix X = Matrix::Identity(2, 2);
  Vector d0(2);
  d0 << 3, 5;
  auto [theta, d] =
      batchnorm_step(X, Vector::Zero(2), Vector::Ones(2), DiagScaling(d0));
  CHECK(theta.norm() == 0.0);
  CHECK((d.vec() - d0).norm() == 0.0);
}

TEST_CASE("batchnorm_step validates shapes") {
  Matrix X = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(batchnorm_step(X, Vector::Ones(3), Vector::Zero(2),
                                 DiagScaling(Vector::Ones(2))),
                  DomainError);
  CHECK_THROWS_AS(batchnorm_step(X, Vector::Ones(2), Vector::Zero(3),
                                 DiagScaling(Vector::Ones(2))),
                  DomainError);
}

TEST_CASE("one batchnorm sweep never increases the objective") {
  Matrix X = random_matrix(20, 3, 71);
  Vector y = X * Vector::Ones(3) + 0.2 * random_matrix(20, 1, 72).col(0);
  Vector theta0 = random_matrix(3, 1, 73).col(0);
  Vector d0 = random_matrix(3, 1, 74).col(0).cwiseAbs() +
              Vector::Constant(3, 0.1);
  double before =
      (X * d0.asDiagonal() * theta0 - y).squaredNorm() / 20.0;
  auto [theta, d] = batchnorm_step(X, y, theta0, DiagScaling(d0));
  double after =
      (X * d.vec().asDiagonal() * theta - y).squaredNorm() / 20.0;
  CHECK(after <= before * (1.0 + 1e-12));
}

TEST_CASE("full-batch batchnorm driver converges on the first solve") {
  Matrix X = diag_cov_design(50, 3, 15.0, 81);
  Vector y = X * Vector::Ones(3) + 0.1 * random_matrix(50, 1, 82).col(0);
  LsqResult r =
      gd_least_squares(X, y, PrecondStrategy{StrategyKind::batchnorm});
  CHECK(r.trace.converged);
  CHECK(r.trace.iterations == 1);  // the theta-solve is exact
  Vector ols = X.colPivHouseholderQr().solve(y);
  CHECK((r.theta - ols).norm() / ols.norm() < 1e-9);
}

// ---------------------------------------------------- adaptive updates --

TEST_CASE("adaptive_optimal_update deduplicates and waits for rank") {
  Matrix batch = random_matrix(2, 3, 91);
  AdaptiveUpdate u1 = adaptive_optimal_update(Matrix(0, 3), batch);
  CHECK(u1.buffer.rows() == 2);
  CHECK_FALSE(u1.d.has_value());  // rank 2 < 3 columns

  AdaptiveUpdate u2 = adaptive_optimal_update(u1.buffer, batch);
  CHECK(u2.buffer.rows() == 2);  // nothing new
  CHECK_FALSE(u2.d.has_value());

  Matrix more = random_matrix(3, 3, 92);
  AdaptiveUpdate u3 = adaptive_optimal_update(u2.buffer, more);
  CHECK(u3.buffer.rows() == 5);
  REQUIRE(u3.d.has_value());
  for (int j = 0; j < u3.d->size(); ++j) CHECK((*u3.d)[j] > 0);
}

TEST_CASE("adaptive scaling stabilizes along a streamed design") {
  Matrix X = diag_cov_design(160, 3, 30.0, 95);
  Matrix buffer(0, 3);
  Vector last = Vector::Ones(3);
  Vector prev = Vector::Ones(3);
  for (long start = 0; start < 160; start += 40) {
    AdaptiveUpdate u =
        adaptive_optimal_update(buffer, X.middleRows(start, 40));
    buffer = u.buffer;
    REQUIRE(u.d.has_value());
    prev = last;
    last = u.d->vec();
  }
  // The scaling's absolute magnitude tracks the growing buffer, so compare
  // mean-normalized shapes: the last two refreshes should nearly agree...
  Vector shape_prev = prev / prev.mean();
  Vector shape_last = last / last.mean();
  CHECK((shape_last.cwiseQuotient(shape_prev) - Vector::Ones(3))
            .lpNorm<Eigen::Infinity>() < 0.15);
  // ...and the final buffer holds every row, so its scaling reproduces the
  // all-at-once answer.
  Vector full = ipm_optimize(SymMatrix(Matrix(X.transpose() * X)))
                    .d_opt.vec();
  CHECK((last - full).lpNorm<Eigen::Infinity>() <=
        1e-12 * full.lpNorm<Eigen::Infinity>());
}

// ------------------------------------------------------------ logistic --

TEST_CASE("logistic descent separates noisy blobs") {
  Matrix X;
  std::vector<int> labels;
  make_blobs(200, X, labels, 7);
  LogisticResult r = multinomial_logistic_gd(
      X, labels, 2, PrecondStrategy{StrategyKind::none});
  CHECK(r.trace.converged);
  CHECK(r.accuracy >= 0.88);
  CHECK(r.trace.residual_history.size() == size_t(r.trace.iterations));
  CHECK(r.trace.final_rel_error <= 1e-3);
  CHECK(r.log_gap < 0);  // close to the tight-run optimum
  CHECK(r.kappa_effective == doctest::Approx(cond_rect(X).kappa));

  LogisticResult again = multinomial_logistic_gd(
      X, labels, 2, PrecondStrategy{StrategyKind::none});
  CHECK((r.Theta - again.Theta).norm() == 0.0);
}

TEST_CASE("scaled strategies reach the same quality") {
  Matrix X;
  std::vector<int> labels;
  make_blobs(120, X, labels, 11);
  for (StrategyKind kind :
       {StrategyKind::fixed_colstats, StrategyKind::optimal}) {
    LogisticResult r =
        multinomial_logistic_gd(X, labels, 2, PrecondStrategy{kind});
    CHECK(r.trace.converged);
    CHECK(r.accuracy >= 0.88);
  }
}

TEST_CASE("the first descent step moves along the analytic gradient") {
  Matrix X = random_matrix(30, 3, 101);
  std::vector<int> labels(30);
  for (int i = 0; i < 30; ++i) labels[size_t(i)] = i % 3;
  Matrix G0 = multinomial_grad(X, labels, Matrix::Zero(3, 3));

  // Central finite differences of the cross-entropy at Theta = 0.
  const double h = 1e-6;
  Matrix FD(3, 3);
  for (long j = 0; j < 3; ++j) {
    for (long k = 0; k < 3; ++k) {
      Matrix Ep = Matrix::Zero(3, 3), Em = Matrix::Zero(3, 3);
      Ep(j, k) = h;
      Em(j, k) = -h;
      FD(j, k) = (multinomial_loss(X, labels, Ep) -
                  multinomial_loss(X, labels, Em)) /
                 (2 * h);
    }
  }
  CHECK((G0 - FD).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + G0.norm()));

  // One driver iteration from Theta = 0 is a pure step along -G0.
  LogisticResult r = multinomial_logistic_gd(
      X, labels, 3, PrecondStrategy{StrategyKind::none}, 1e-12, 1);
  REQUIRE(r.trace.iterations == 1);
  double alpha = -(r.Theta.cwiseProduct(G0)).sum() / G0.squaredNorm();
  CHECK(alpha > 0);
  CHECK((r.Theta + alpha * G0).norm() <= 1e-8 * r.Theta.norm());
}

TEST_CASE("two-class runs match the binary logistic formulation") {
  Matrix X;
  std::vector<int> labels;
  make_blobs(90, X, labels, 13);
  LogisticResult r = multinomial_logistic_gd(
      X, labels, 2, PrecondStrategy{StrategyKind::none});

  // Multinomial loss at Theta equals the binary loss at beta = th1 - th0.
  double f_multi = multinomial_loss(X, labels, r.Theta);
  Vector beta = r.Theta.col(1) - r.Theta.col(0);
  double f_bin = 0;
  Vector z = X * beta;
  for (long i = 0; i < X.rows(); ++i) {
    // -log sigma(z) for class 1, -log(1 - sigma(z)) for class 0, written
    // with log1p for accuracy.
    double t = labels[size_t(i)] == 1 ? -z[i] : z[i];
    f_bin += t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  }
  f_bin /= double(X.rows());
  CHECK(f_multi == doctest::Approx(f_bin).epsilon(1e-10));

  // The reported gradient norm is sqrt(2) times the binary gradient norm.
  Vector gbin = Vector::Zero(X.cols());
  for (long i = 0; i < X.rows(); ++i) {
    double s = 1.0 / (1.0 + std::exp(-z[i]));
    gbin += (s - (labels[size_t(i)] == 1 ? 1.0 : 0.0)) *
            X.row(i).transpose();
  }
  gbin /= double(X.rows());
  CHECK(r.trace.final_rel_error ==
        doctest::Approx(std::sqrt(2.0) * gbin.norm()).epsilon(1e-9));
}

TEST_CASE("logistic driver validates spec and labels") {
  Matrix X = random_matrix(10, 2, 111);
  std::vector<int> labels(10, 0);
  CHECK_THROWS_AS(multinomial_logistic_gd(
                      X, labels, 1, PrecondStrategy{StrategyKind::none}),
                  DomainError);
  labels[3] = 7;
  try {
    multinomial_logistic_gd(X, labels, 3,
                            PrecondStrategy{StrategyKind::none});
    CHECK(false);
  } catch (const DomainError& e) {
    CHECK(e.kind() == ErrorKind::InvalidSpec);
  }
  labels[3] = 1;
  CHECK_THROWS_AS(
      multinomial_logistic_gd(X, labels, 2,
                              PrecondStrategy{StrategyKind::batchnorm}),
      DomainError);
  std::vector<int> short_labels(9, 0);
  CHECK_THROWS_AS(
      multinomial_logistic_gd(X, short_labels, 2,
                              PrecondStrategy{StrategyKind::none}),
      DomainError);
}

// ------------------------------------------------------- hessian bound --

TEST_CASE("quadratic losses give the bound with equality") {
  Matrix X = random_matrix(30, 4, 121);
  Vector w = random_matrix(4, 1, 122).col(0);
  // The optimal Gram scaling satisfies the hypothesis by construction;
  // hessian_cond_check applies d to rows, so pass 1/sqrt(d_opt).
  Vector d_opt =
      ipm_optimize(SymMatrix(Matrix(X.transpose() * X))).d_opt.vec();
  Vector d = d_opt.cwiseSqrt().cwiseInverse();
  HessianCheck hc = hessian_cond_check(ScalarLossSpec::quadratic(), X, w, d);
  CHECK(hc.lhs == doctest::Approx(hc.rhs).epsilon(1e-9));
  CHECK(hc.kappa_gram_scaled <= hc.kappa_gram * (1.0 + 1e-12));
}

TEST_CASE("logistic-plus-quadratic losses respect the bound") {
  ScalarLossSpec loss = ScalarLossSpec::logistic_plus_quadratic(1.0);
  CHECK(loss.L_mod == doctest::Approx(1.25));
  for (uint64_t seed : {131u, 132u, 133u}) {
    Matrix X = random_matrix(40, 3, seed);
    Vector w = random_matrix(3, 1, seed + 50).col(0);
    Vector d_opt =
        ipm_optimize(SymMatrix(Matrix(X.transpose() * X))).d_opt.vec();
    Vector d = d_opt.cwiseSqrt().cwiseInverse();
    HessianCheck hc = hessian_cond_check(loss, X, w, d);
    CHECK(hc.lhs <= hc.rhs * (1.0 + 1e-9));
  }
}

TEST_CASE("identity scaling reduces the bound to kappa0 squared") {
  Matrix X = random_matrix(25, 3, 141);
  Vector w = random_matrix(3, 1, 142).col(0);
  Vector ones = Vector::Ones(3);

  HessianCheck quad =
      hessian_cond_check(ScalarLossSpec::quadratic(), X, w, ones);
  double kappa_gram = cond_2(SymMatrix(Matrix(X.transpose() * X))).kappa;
  CHECK(quad.lhs == doctest::Approx(kappa_gram).epsilon(1e-12));
  CHECK(quad.rhs == doctest::Approx(kappa_gram).epsilon(1e-12));

  ScalarLossSpec logi = ScalarLossSpec::logistic_plus_quadratic(1.0);
  HessianCheck hc = hessian_cond_check(logi, X, w, ones);
  CHECK(hc.rhs == doctest::Approx(1.25 * 1.25 * hc.lhs).epsilon(1e-12));
}

TEST_CASE("hessian check reports a failed hypothesis") {
  Matrix X = Matrix::Identity(3, 3);
  Vector w = Vector::Ones(3);
  Vector d(3);
  d << 10, 1, 1;  // worsens the Gram conditioning from 1 to 100
  try {
    hessian_cond_check(ScalarLossSpec::quadratic(), X, w, d);
    CHECK(false);
  } catch (const DomainError& e) {
    CHECK(e.kind() == ErrorKind::HypothesisFailed);
  }
  Vector bad(3);
  bad << 1, -1, 1;
  CHECK_THROWS_AS(hessian_cond_check(ScalarLossSpec::quadratic(), X, w, bad),
                  DomainError);
  CHECK_THROWS_AS(hessian_cond_check(ScalarLossSpec::quadratic(), X,
                                     Vector::Ones(2), Vector::Ones(3)),
                  DomainError);
}

// --------------------------------------------------------------- bench --

TEST_CASE("strategy names match the CSV vocabulary") {
  CHECK(strategy_name(StrategyKind::none) == "none");
  CHECK(strategy_name(StrategyKind::fixed_colstats) == "fixed_colstats");
  CHECK(strategy_name(StrategyKind::optimal) == "optimal");
  CHECK(strategy_name(StrategyKind::batchnorm) == "batchnorm");
  CHECK(strategy_name(StrategyKind::adaptive_optimal) == "adaptive_optimal");
}

TEST_CASE("run_bench produces one deterministic row per cell") {
  BenchSpec spec;
  spec.n = 80;
  spec.p = 4;
  spec.target_cond = 40;
  spec.strategies = {StrategyKind::none, StrategyKind::optimal,
                     StrategyKind::batchnorm};
  spec.seeds = 2;
  auto rows = run_bench(spec);
  REQUIRE(rows.size() == 6);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].n == 80);
    CHECK(rows[i].p == 4);
    CHECK(rows[i].strategy ==
          strategy_name(spec.strategies[i % 3]));
    CHECK(rows[i].seed == uint64_t(i / 3));
  }
  auto again = run_bench(spec);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].kappa_effective == again[i].kappa_effective);
    CHECK(rows[i].iterations == again[i].iterations);
    CHECK(rows[i].converged == again[i].converged);
  }

  BenchSpec empty = spec;
  empty.strategies.clear();
  CHECK_THROWS_AS(run_bench(empty), DomainError);
}

TEST_CASE("bench CSV layout is frozen") {
  BenchRow row;
  row.strategy = "none";
  row.n = 100;
  row.p = 5;
  row.seed = 7;
  row.kappa_effective = 2.5;
  row.iterations = 42;
  row.converged = true;
  std::ostringstream out;
  write_bench_csv(out, {row});
  CHECK(out.str() ==
        "strategy,n,p,seed,kappa_effective,iterations,converged\n"
        "none,100,5,7,2.5,42,1\n");
}

TEST_CASE("gd iteration counts grow with the population condition number") {
  std::vector<double> medians;
  for (double target : {10.0, 100.0, 1000.0}) {
    BenchSpec spec;
    spec.n = 1000;
    spec.p = 20;
    spec.target_cond = target;
    spec.strategies = {StrategyKind::none};
    spec.seeds = 5;
    auto rows = run_bench(spec);
    std::vector<double> iters;
    for (const auto& r : rows) {
      CHECK(r.converged);
      iters.push_back(double(r.iterations));
    }
    medians.push_back(median_of_vec(iters));
  }
  CHECK(medians[0] <= medians[1]);
  CHECK(medians[1] <= medians[2]);
}
