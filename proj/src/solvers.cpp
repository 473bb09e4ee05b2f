#include "dpx/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <Eigen/QR>

#include "dpx/errors.hpp"
#include "dpx/log.hpp"
#include "dpx/precondition.hpp"
#include "dpx/randomlab.hpp"

namespace dpx {

namespace {

constexpr double kArmijoC1 = 1e-4;
constexpr double kArmijoShrink = 0.5;
constexpr double kDivergedFactor = 1e12;

bool is_symmetric_rel(const Matrix& A) {
  for (long i = 0; i < A.rows(); ++i) {
    for (long j = i + 1; j < A.cols(); ++j) {
      double tol = 1e-12 * (1.0 + std::abs(A(i, j)) + std::abs(A(j, i)));
      if (std::abs(A(i, j) - A(j, i)) > tol) return false;
    }
  }
  return true;
}

bool is_spd(const Matrix& A) {
  if (!is_symmetric_rel(A)) return false;
  Eigen::LLT<Matrix> llt(0.5 * (A + A.transpose()));
  return llt.info() == Eigen::Success;
}

bool strictly_diag_dominant(const Matrix& A) {
  for (long i = 0; i < A.rows(); ++i) {
    double off = 0;
    for (long j = 0; j < A.cols(); ++j) {
      if (j != i) off += std::abs(A(i, j));
    }
    if (std::abs(A(i, i)) <= off) return false;
  }
  return true;
}

double rel_residual(const Matrix& A, const Vector& x, const Vector& b,
                    double denom) {
  return (A * x - b).norm() / denom;
}

Vector solve_ls_qr(const Matrix& A, const Vector& b) {
  return A.colPivHouseholderQr().solve(b);
}

// Least-squares coefficients of y on X: rank-checked, then solved through
// the Cholesky-factored normal equations (the convergence referee).
Vector ols_solution(const Matrix& X, const Vector& y) {
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (qr.rank() < X.cols()) {
    throw DomainError(ErrorKind::SingularMatrix,
                      "design matrix is column rank deficient");
  }
  Matrix gram = X.transpose() * X;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw DomainError(ErrorKind::SingularMatrix,
                      "normal equations are numerically singular");
  }
  return llt.solve(X.transpose() * y);
}

// Back-map coefficients from the rescaled design X * diag(d)^{-1/2} to the
// original columns.
Vector unscale_theta(const Vector& theta_tilde, const Vector& d) {
  Vector theta(theta_tilde.size());
  for (long j = 0; j < theta.size(); ++j) {
    theta[j] = theta_tilde[j] / std::sqrt(d[j]);
  }
  return theta;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return v[m];
  return 0.5 * (v[m - 1] + v[m]);
}

// Sample `k` distinct indices from [0, n) by partial Fisher-Yates.
std::vector<long> sample_batch(long n, long k, Rng& rng) {
  std::vector<long> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0L);
  for (long i = 0; i < k; ++i) {
    long j = i + static_cast<long>(rng.index(static_cast<uint64_t>(n - i)));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  idx.resize(static_cast<size_t>(k));
  return idx;
}

Matrix take_rows(const Matrix& X, const std::vector<long>& rows) {
  Matrix out(static_cast<long>(rows.size()), X.cols());
  for (size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<long>(r)) = X.row(rows[r]);
  }
  return out;
}

Vector take_entries(const Vector& y, const std::vector<long>& rows) {
  Vector out(static_cast<long>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    out[static_cast<long>(r)] = y[rows[r]];
  }
  return out;
}

bool rows_equal_bytes(const Matrix& A, long i, const Matrix& B, long j) {
  // Matrices are column-major; compare entry bytes explicitly.
  for (long c = 0; c < A.cols(); ++c) {
    if (std::memcmp(&A(i, c), &B(j, c), sizeof(double)) != 0) return false;
  }
  return true;
}

struct LsqEngineSpec {
  double batch_frac = 1.0;
  double tol = 0.01;
  long max_iter = 200000;
  uint64_t seed = 0;
};

// Shared driver for gd_least_squares / sgd_least_squares.  Full batches
// consume no randomness, so batch_frac = 1 is bit-identical to plain
// gradient descent regardless of seed.
LsqResult lsq_engine(const Matrix& X, const Vector& y,
                     const PrecondStrategy& strategy, const LsqEngineSpec& es,
                     const IpmConfig& cfg) {
  const long n = X.rows();
  const long p = X.cols();
  if (n == 0 || p == 0 || y.size() != n) {
    throw DomainError(ErrorKind::DimensionMismatch,
                      "design and response sizes are inconsistent");
  }
  if (n <= p) {
    throw DomainError(ErrorKind::InvalidSpec,
                      "least-squares driver needs more rows than columns");
  }
  if (!(es.batch_frac > 0.0) || es.batch_frac > 1.0) {
    throw DomainError(ErrorKind::InvalidSpec, "batch_frac must be in (0, 1]");
  }
  if (!(es.tol > 0.0) || es.max_iter < 1) {
    throw DomainError(ErrorKind::InvalidSpec,
                      "tolerance and iteration cap must be positive");
  }

  const Vector theta_ols = ols_solution(X, y);
  const double ols_norm = std::max(theta_ols.norm(), 1e-300);
  const long batch = std::max(
      1L, static_cast<long>(std::lround(es.batch_frac * static_cast<double>(n))));
  const bool full_batch = batch >= n;
  Rng rng(es.seed);

  LsqResult result;
  result.trace.residual_history.reserve(256);

  // --- batchnorm: alternating exact solves, no gradient steps ---------
  if (strategy.kind == StrategyKind::batchnorm) {
    DiagScaling var = col_stats_precond(X, ColStatsMode::variance);
    Vector d0(p);
    for (long j = 0; j < p; ++j) {
      d0[j] = std::max(1.0 / std::sqrt(var[j]), 1e-12);
    }
    DiagScaling d(d0);
    Vector theta = Vector::Zero(p);
    std::vector<double> kappas;
    for (long k = 0; k < es.max_iter; ++k) {
      Matrix Xb;
      Vector yb;
      if (full_batch) {
        Xb = X;
        yb = y;
      } else {
        auto rows = sample_batch(n, batch, rng);
        Xb = take_rows(X, rows);
        yb = take_entries(y, rows);
      }
      auto [theta_next, d_next] = batchnorm_step(Xb, yb, theta, d);
      theta = theta_next;
      d = d_next;
      kappas.push_back(cond_rect(X * d.vec().asDiagonal()).kappa);
      Vector theta_eff = d.vec().cwiseProduct(theta);
      double err = (theta_eff - theta_ols).norm() / ols_norm;
      result.trace.residual_history.push_back(err);
      result.trace.iterations = k + 1;
      if (err > kDivergedFactor) {
        throw DomainError(ErrorKind::Diverged,
                          "batchnorm iterate left the trust region");
      }
      if (err <= es.tol) {
        result.trace.converged = true;
        break;
      }
    }
    result.trace.final_rel_error = result.trace.residual_history.empty()
                                       ? 1.0
                                       : result.trace.residual_history.back();
    result.theta = d.vec().cwiseProduct(theta);
    result.d_used = d.vec();
    result.kappa_effective = median_of(kappas);
    return result;
  }

  // --- gradient strategies: pick the column scaling up front ----------
  Vector d = Vector::Ones(p);
  bool adaptive = strategy.kind == StrategyKind::adaptive_optimal;
  if (strategy.kind == StrategyKind::fixed_colstats) {
    d = col_stats_precond(X, ColStatsMode::variance).vec();
  } else if (strategy.kind == StrategyKind::optimal ||
             (adaptive && full_batch)) {
    // With the whole design visible there is nothing to accumulate, so
    // adaptive collapses to the one-shot optimal scaling.
    SymMatrix gram(Matrix(X.transpose() * X));
    d = ipm_optimize(gram, cfg).d_opt.vec();
    adaptive = false;
  }
  if (adaptive && strategy.refresh_every < 1) {
    throw DomainError(ErrorKind::InvalidSpec, "refresh_every must be >= 1");
  }

  Matrix Xs = apply_scaling(X, DiagScaling(d));
  Vector theta_tilde = Vector::Zero(p);
  Matrix buffer(0, p);
  const double alpha_floor = 1e-16;

  for (long k = 0; k < es.max_iter; ++k) {
    Matrix Xb;
    Vector yb;
    std::vector<long> rows;
    if (full_batch) {
      Xb = Xs;
      yb = y;
    } else {
      rows = sample_batch(n, batch, rng);
      Xb = take_rows(Xs, rows);
      yb = take_entries(y, rows);
    }

    if (adaptive && k % strategy.refresh_every == 0) {
      AdaptiveUpdate upd =
          adaptive_optimal_update(buffer, take_rows(X, rows), cfg);
      buffer = std::move(upd.buffer);
      if (upd.d) {
        Vector d_new = upd.d->vec();
        for (long j = 0; j < p; ++j) {
          theta_tilde[j] *= std::sqrt(d_new[j] / d[j]);
        }
        d = d_new;
        Xs = apply_scaling(X, DiagScaling(d));
        Xb = take_rows(Xs, rows);
      }
    }

    const double m = static_cast<double>(Xb.rows());
    Vector r = Xb * theta_tilde - yb;
    double f0 = r.squaredNorm() / m;
    Vector g = (2.0 / m) * (Xb.transpose() * r);
    double gnorm2 = g.squaredNorm();
    if (gnorm2 > 0) {
      // Exact minimizer along -g for the batch quadratic, then Armijo.
      double curvature = (2.0 / m) * (Xb * g).squaredNorm();
      double alpha = curvature > 0 ? gnorm2 / curvature : 1.0;
      while (true) {
        Vector trial = theta_tilde - alpha * g;
        double f_trial = (Xb * trial - yb).squaredNorm() / m;
        if (f_trial <= f0 - kArmijoC1 * alpha * gnorm2) break;
        alpha *= kArmijoShrink;
        if (alpha < alpha_floor) {
          throw DomainError(ErrorKind::LineSearchStall,
                            "no Armijo step gave sufficient decrease");
        }
      }
      theta_tilde -= alpha * g;
    }

    Vector theta = unscale_theta(theta_tilde, d);
    double err = (theta - theta_ols).norm() / ols_norm;
    result.trace.residual_history.push_back(err);
    result.trace.iterations = k + 1;
    if (err > kDivergedFactor) {
      throw DomainError(ErrorKind::Diverged,
                        "gradient iterate left the trust region");
    }
    if (err <= es.tol) {
      result.trace.converged = true;
      break;
    }
  }

  result.trace.final_rel_error = result.trace.residual_history.empty()
                                     ? 1.0
                                     : result.trace.residual_history.back();
  result.theta = unscale_theta(theta_tilde, d);
  result.d_used = d;
  result.kappa_effective = cond_rect(Xs).kappa;
  return result;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits) {
  Matrix P(logits.rows(), logits.cols());
  for (long i = 0; i < logits.rows(); ++i) {
    double mx = logits.row(i).maxCoeff();
    double sum = 0;
    for (long k = 0; k < logits.cols(); ++k) {
      P(i, k) = std::exp(logits(i, k) - mx);
      sum += P(i, k);
    }
    P.row(i) /= sum;
  }
  return P;
}

double logistic_loss(const Matrix& P, const std::vector<int>& labels) {
  double f = 0;
  for (long i = 0; i < P.rows(); ++i) {
    f -= std::log(std::max(P(i, labels[static_cast<size_t>(i)]), 1e-300));
  }
  return f / static_cast<double>(P.rows());
}

struct LogisticRun {
  Matrix Theta;  // effective coordinates
  SolveTrace trace;
  double loss = 0;
};

LogisticRun logistic_descent(const Matrix& Xs, const std::vector<int>& labels,
                             int K, double grad_tol, long max_iter) {
  const long n = Xs.rows();
  const long p = Xs.cols();
  Matrix Theta = Matrix::Zero(p, K);
  Matrix Y = Matrix::Zero(n, K);
  for (long i = 0; i < n; ++i) Y(i, labels[static_cast<size_t>(i)]) = 1.0;

  LogisticRun run;
  double alpha = static_cast<double>(n) / std::max(Xs.squaredNorm(), 1e-300);
  Matrix P = softmax_rows(Xs * Theta);
  double f = logistic_loss(P, labels);
  if (std::isnan(f)) {
    throw DomainError(ErrorKind::NumericalBreakdown, "loss is NaN");
  }
  Matrix G = (Xs.transpose() * (P - Y)) / static_cast<double>(n);
  run.trace.final_rel_error = G.norm();
  for (long k = 0; k < max_iter; ++k) {
    const double gnorm = G.norm();
    if (gnorm <= grad_tol) break;
    alpha *= 2.0;  // optimistic warm start from the last accepted step
    const double g2 = gnorm * gnorm;
    while (true) {
      Matrix trial = Theta - alpha * G;
      Matrix Pt = softmax_rows(Xs * trial);
      double ft = logistic_loss(Pt, labels);
      if (std::isnan(ft)) {
        throw DomainError(ErrorKind::NumericalBreakdown, "loss is NaN");
      }
      if (ft <= f - kArmijoC1 * alpha * g2) {
        Theta = std::move(trial);
        P = std::move(Pt);
        f = ft;
        break;
      }
      alpha *= kArmijoShrink;
      if (alpha < 1e-16) {
        throw DomainError(ErrorKind::LineSearchStall,
                          "logistic line search collapsed");
      }
    }
    G = (Xs.transpose() * (P - Y)) / static_cast<double>(n);
    run.trace.iterations = k + 1;
    run.trace.residual_history.push_back(G.norm());
    run.trace.final_rel_error = G.norm();
  }
  run.trace.converged = run.trace.final_rel_error <= grad_tol;
  run.Theta = Theta;
  run.loss = f;
  return run;
}

double fpp_at(const ScalarLossSpec& loss, double z) {
  switch (loss.kind) {
    case LossKind::quadratic:
      return 1.0;
    case LossKind::logistic_plus_quadratic: {
      double s = sigmoid(z);
      return 1.0 + loss.a * s * (1.0 - s);
    }
  }
  throw DomainError(ErrorKind::InvalidSpec, "unknown loss kind");
}

// H = (1/n) X' diag(f''(Xw)) X.
SymMatrix loss_hessian(const ScalarLossSpec& loss, const Matrix& X,
                       const Vector& w) {
  Vector z = X * w;
  Vector fpp(z.size());
  for (long i = 0; i < z.size(); ++i) fpp[i] = fpp_at(loss, z[i]);
  Matrix H = X.transpose() * fpp.asDiagonal() * X /
             static_cast<double>(X.rows());
  return SymMatrix(Matrix(0.5 * (H + H.transpose())));
}

}  // namespace

std::string strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::none:
      return "none";
    case StrategyKind::fixed_colstats:
      return "fixed_colstats";
    case StrategyKind::optimal:
      return "optimal";
    case StrategyKind::batchnorm:
      return "batchnorm";
    case StrategyKind::adaptive_optimal:
      return "adaptive_optimal";
  }
  throw DomainError(ErrorKind::InvalidSpec, "unknown strategy kind");
}

std::pair<Vector, SolveTrace> iterative_solve(const Matrix& A,
                                              const Vector& b,
                                              IterMethod method,
                                              const IterOptions& opts) {
  const long n = A.rows();
  if (A.cols() != n || b.size() != n || n == 0) {
    throw DomainError(ErrorKind::DimensionMismatch,
                      "iterative_solve needs a square system");
  }
  const bool spd = is_spd(A);
  switch (method) {
    case IterMethod::jacobi:
    case IterMethod::gauss_seidel:
      if (!spd && !strictly_diag_dominant(A)) {
        throw DomainError(
            ErrorKind::InvalidMethodForMatrix,
            "splitting methods need SPD or strict diagonal dominance");
      }
      for (long i = 0; i < n; ++i) {
        if (A(i, i) == 0) {
          throw DomainError(ErrorKind::InvalidMethodForMatrix,
                            "zero diagonal entry in splitting method");
        }
      }
      break;
    case IterMethod::steepest_descent:
    case IterMethod::cg:
      if (!spd) {
        throw DomainError(ErrorKind::InvalidMethodForMatrix,
                          "Krylov methods here require an SPD matrix");
      }
      break;
    case IterMethod::kaczmarz_cyclic:
    case IterMethod::kaczmarz_random:
      for (long i = 0; i < n; ++i) {
        if (A.row(i).norm() == 0) {
          throw DomainError(ErrorKind::DegenerateMatrix,
                            "Kaczmarz cannot project onto a zero row");
        }
      }
      break;
  }

  const double denom = b.norm() > 0 ? b.norm() : 1.0;
  Vector x = Vector::Zero(n);
  SolveTrace trace;
  double rel0 = rel_residual(A, x, b, denom);
  if (rel0 <= opts.tol) {
    trace.converged = true;
    trace.final_rel_error = rel0;
    return {x, trace};
  }

  // Method-specific persistent state.
  Vector row_norm2;
  std::vector<double> row_cdf;
  Rng rng(opts.seed);
  if (method == IterMethod::kaczmarz_cyclic ||
      method == IterMethod::kaczmarz_random) {
    row_norm2 = A.rowwise().squaredNorm();
    if (method == IterMethod::kaczmarz_random) {
      row_cdf.resize(static_cast<size_t>(n));
      double acc = 0;
      for (long i = 0; i < n; ++i) {
        acc += row_norm2[i];
        row_cdf[static_cast<size_t>(i)] = acc;
      }
    }
  }
  Vector r, pdir;
  double rr = 0;
  if (method == IterMethod::cg) {
    r = b - A * x;
    pdir = r;
    rr = r.squaredNorm();
  }

  for (long k = 0; k < opts.max_iter; ++k) {
    switch (method) {
      case IterMethod::jacobi: {
        Vector xn(n);
        for (long i = 0; i < n; ++i) {
          double s = b[i] - A.row(i).dot(x) + A(i, i) * x[i];
          xn[i] = s / A(i, i);
        }
        x = xn;
        break;
      }
      case IterMethod::gauss_seidel: {
        for (long i = 0; i < n; ++i) {
          double s = b[i] - A.row(i).dot(x) + A(i, i) * x[i];
          x[i] = s / A(i, i);
        }
        break;
      }
      case IterMethod::kaczmarz_cyclic:
      case IterMethod::kaczmarz_random: {
        long i;
        if (method == IterMethod::kaczmarz_cyclic) {
          i = k % n;
        } else {
          double u = rng.uniform() * row_cdf.back();
          i = static_cast<long>(
              std::lower_bound(row_cdf.begin(), row_cdf.end(), u) -
              row_cdf.begin());
          i = std::min(i, n - 1);
        }
        double resid = b[i] - A.row(i).dot(x);
        x += (resid / row_norm2[i]) * A.row(i).transpose();
        break;
      }
      case IterMethod::steepest_descent: {
        Vector res = b - A * x;
        double num = res.squaredNorm();
        if (num == 0) break;
        double den = res.dot(A * res);
        if (den <= 0) {
          throw DomainError(ErrorKind::NumericalBreakdown,
                            "nonpositive curvature in steepest descent");
        }
        x += (num / den) * res;
        break;
      }
      case IterMethod::cg: {
        Vector Ap = A * pdir;
        double den = pdir.dot(Ap);
        if (den <= 0) {
          throw DomainError(ErrorKind::NumericalBreakdown,
                            "nonpositive curvature in conjugate gradients");
        }
        double alpha = rr / den;
        x += alpha * pdir;
        r -= alpha * Ap;
        double rr_next = r.squaredNorm();
        pdir = r + (rr_next / rr) * pdir;
        rr = rr_next;
        break;
      }
    }
    double rel = rel_residual(A, x, b, denom);
    trace.residual_history.push_back(rel);
    trace.iterations = k + 1;
    trace.final_rel_error = rel;
    if (rel > kDivergedFactor * std::max(rel0, 1.0)) {
      throw DomainError(ErrorKind::Diverged,
                        "residual grew by more than twelve decades");
    }
    if (rel <= opts.tol) {
      trace.converged = true;
      break;
    }
  }
  return {x, trace};
}

LsqResult gd_least_squares(const Matrix& X, const Vector& y,
                           const PrecondStrategy& strategy, double tol,
                           long max_iter, const IpmConfig& cfg) {
  LsqEngineSpec es;
  es.batch_frac = 1.0;
  es.tol = tol;
  es.max_iter = max_iter;
  return lsq_engine(X, y, strategy, es, cfg);
}

LsqResult sgd_least_squares(const Matrix& X, const Vector& y,
                            const PrecondStrategy& strategy,
                            double batch_frac, double tol, long max_iter,
                            uint64_t seed, const IpmConfig& cfg) {
  LsqEngineSpec es;
  es.batch_frac = batch_frac;
  es.tol = tol;
  es.max_iter = max_iter;
  es.seed = seed;
  return lsq_engine(X, y, strategy, es, cfg);
}

std::pair<Vector, DiagScaling> batchnorm_step(const Matrix& X,
                                              const Vector& y,
                                              const Vector& theta,
                                              const DiagScaling& d) {
  if (X.cols() != static_cast<long>(d.size()) || X.rows() != y.size() ||
      theta.size() != X.cols()) {
    throw DomainError(ErrorKind::DimensionMismatch,
                      "batchnorm_step shapes are inconsistent");
  }
  Vector theta_next = solve_ls_qr(X * d.vec().asDiagonal(), y);
  if (theta_next.norm() == 0) return {theta_next, d};
  Vector d_next = solve_ls_qr(X * theta_next.asDiagonal(), y);
  for (long j = 0; j < d_next.size(); ++j) {
    d_next[j] = std::max(d_next[j], 1e-12);
  }
  return {theta_next, DiagScaling(d_next)};
}

AdaptiveUpdate adaptive_optimal_update(const Matrix& buffer,
                                       const Matrix& new_batch,
                                       const IpmConfig& cfg) {
  const long p = new_batch.cols();
  if (buffer.rows() > 0 && buffer.cols() != p) {
    throw DomainError(ErrorKind::DimensionMismatch,
                      "buffer and batch column counts differ");
  }
  std::vector<long> fresh;
  for (long i = 0; i < new_batch.rows(); ++i) {
    bool dup = false;
    for (long j = 0; j < buffer.rows() && !dup; ++j) {
      dup = rows_equal_bytes(new_batch, i, buffer, j);
    }
    for (size_t f = 0; f < fresh.size() && !dup; ++f) {
      dup = rows_equal_bytes(new_batch, i, new_batch, fresh[f]);
    }
    if (!dup) fresh.push_back(i);
  }

  AdaptiveUpdate out;
  if (fresh.empty()) {
    out.buffer = buffer;
    return out;  // nothing new seen: caller keeps its current scaling
  }
  out.buffer.resize(buffer.rows() + static_cast<long>(fresh.size()), p);
  out.buffer.topRows(buffer.rows()) = buffer;
  for (size_t f = 0; f < fresh.size(); ++f) {
    out.buffer.row(buffer.rows() + static_cast<long>(f)) =
        new_batch.row(fresh[f]);
  }

  if (out.buffer.rows() >= p) {
    Eigen::ColPivHouseholderQR<Matrix> qr(out.buffer);
    if (qr.rank() == p) {
      try {
        SymMatrix gram(Matrix(out.buffer.transpose() * out.buffer));
        out.d = ipm_optimize(gram, cfg).d_opt;
      } catch (const DomainError& e) {
        log_debug(std::string("adaptive scaling skipped: ") + e.what());
      }
    }
  }
  return out;
}

LogisticResult multinomial_logistic_gd(const Matrix& X,
                                       const std::vector<int>& labels, int K,
                                       const PrecondStrategy& strategy,
                                       double grad_tol, long max_iter,
                                       const IpmConfig& cfg) {
  const long n = X.rows();
  const long p = X.cols();
  if (static_cast<long>(labels.size()) != n || n == 0 || p == 0) {
    throw DomainError(ErrorKind::DimensionMismatch,
                      "labels and design sizes are inconsistent");
  }
  if (K < 2) {
    throw DomainError(ErrorKind::InvalidSpec, "need at least two classes");
  }
  for (int lab : labels) {
    if (lab < 0 || lab >= K) {
      throw DomainError(ErrorKind::InvalidSpec, "label out of range");
    }
  }

  Vector d = Vector::Ones(p);
  switch (strategy.kind) {
    case StrategyKind::none:
      break;
    case StrategyKind::fixed_colstats:
      d = col_stats_precond(X, ColStatsMode::variance).vec();
      break;
    case StrategyKind::optimal: {
      SymMatrix gram(Matrix(X.transpose() * X));
      d = ipm_optimize(gram, cfg).d_opt.vec();
      break;
    }
    default:
      throw DomainError(ErrorKind::InvalidSpec,
                        "logistic driver supports none / fixed_colstats / "
                        "optimal strategies");
  }
  Matrix Xs = apply_scaling(X, DiagScaling(d));

  LogisticRun run = logistic_descent(Xs, labels, K, grad_tol, max_iter);
  // Reference optimum from a much tighter run of the same descent.
  LogisticRun ref = logistic_descent(Xs, labels, K, 1e-8,
                                     std::max(max_iter, 400000L));

  LogisticResult res;
  res.trace = run.trace;
  res.log_gap = std::log(std::max(run.loss - ref.loss, 1e-300));
  res.kappa_effective = cond_rect(Xs).kappa;
  res.Theta = Matrix(p, K);
  for (long j = 0; j < p; ++j) {
    res.Theta.row(j) = run.Theta.row(j) / std::sqrt(d[j]);
  }
  long correct = 0;
  Matrix logits = Xs * run.Theta;
  for (long i = 0; i < n; ++i) {
    long arg = 0;
    logits.row(i).maxCoeff(&arg);
    if (arg == labels[static_cast<size_t>(i)]) ++correct;
  }
  res.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return res;
}

ScalarLossSpec ScalarLossSpec::logistic_plus_quadratic(double a) {
  if (!(a >= 0)) {
    throw DomainError(ErrorKind::InvalidSpec,
                      "logistic weight must be nonnegative");
  }
  return {LossKind::logistic_plus_quadratic, a, 1.0, 1.0 + a / 4.0};
}

HessianCheck hessian_cond_check(const ScalarLossSpec& loss, const Matrix& X,
                                const Vector& w, const Vector& d) {
  const long p = X.cols();
  if (w.size() != p || d.size() != p) {
    throw DomainError(ErrorKind::DimensionMismatch,
                      "w and d must match the design columns");
  }
  for (long j = 0; j < p; ++j) {
    if (!(d[j] > 0)) {
      throw DomainError(ErrorKind::NotPositiveDefinite,
                        "diagonal scaling entries must be positive");
    }
  }
  Matrix Xd = X * d.asDiagonal();
  double kappa_gram = cond_2(SymMatrix(Matrix(X.transpose() * X))).kappa;
  double kappa_gram_scaled =
      cond_2(SymMatrix(Matrix(Xd.transpose() * Xd))).kappa;
  if (kappa_gram_scaled > kappa_gram * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "the scaling worsens the Gram condition number ("
       << kappa_gram_scaled << " > " << kappa_gram << ")";
    throw DomainError(ErrorKind::HypothesisFailed, os.str());
  }

  double lhs = cond_2(loss_hessian(loss, Xd, w)).kappa;
  double kappa0 = loss.L_mod / loss.lambda_mod;
  double rhs = kappa0 * kappa0 * cond_2(loss_hessian(loss, X, w)).kappa *
               kappa_gram_scaled / kappa_gram;
  if (lhs > rhs * (1.0 + 1e-9)) {
    throw DomainError(ErrorKind::NumericalBreakdown,
                      "curvature bound violated beyond tolerance");
  }
  return {lhs, rhs, kappa_gram, kappa_gram_scaled};
}

std::vector<BenchRow> run_bench(const BenchSpec& spec) {
  if (spec.n <= spec.p || spec.p < 1 || spec.seeds < 1 ||
      spec.strategies.empty()) {
    throw DomainError(ErrorKind::InvalidSpec,
                      "bench needs n > p >= 1, seeds >= 1 and at least one "
                      "strategy");
  }
  std::vector<BenchRow> rows;
  for (int s = 0; s < spec.seeds; ++s) {
    uint64_t seed = spec.base_seed + static_cast<uint64_t>(s);
    CovSpec cov;
    cov.p = spec.p;
    cov.kind = CovKind::spd_random;
    cov.target_cond = spec.target_cond;
    cov.seed = derive_seed(seed, 11);
    SymMatrix Sigma = gen_cov(cov);
    Matrix X = sample_rows(spec.n, Sigma, Vector::Zero(spec.p),
                           derive_seed(seed, 12));
    Rng rng(derive_seed(seed, 13));
    Vector theta_star(spec.p);
    for (int j = 0; j < spec.p; ++j) theta_star[j] = rng.normal();
    Vector y = X * theta_star;
    for (long i = 0; i < y.size(); ++i) y[i] += 0.1 * rng.normal();

    for (StrategyKind kind : spec.strategies) {
      PrecondStrategy strat;
      strat.kind = kind;
      strat.refresh_every = spec.refresh_every;
      LsqResult run =
          spec.sgd
              ? sgd_least_squares(X, y, strat, spec.batch_frac, spec.tol,
                                  spec.max_iter, derive_seed(seed, 14), spec.ipm)
              : gd_least_squares(X, y, strat, spec.tol, spec.max_iter,
                                 spec.ipm);
      BenchRow row;
      row.strategy = strategy_name(kind);
      row.n = spec.n;
      row.p = spec.p;
      row.seed = seed;
      row.kappa_effective = run.kappa_effective;
      row.iterations = run.trace.iterations;
      row.converged = run.trace.converged;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "strategy,n,p,seed,kappa_effective,iterations,converged\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.strategy << ',' << r.n << ',' << r.p << ',' << r.seed << ','
        << r.kappa_effective << ',' << r.iterations << ','
        << (r.converged ? 1 : 0) << '\n';
  }
}

}  // namespace dpx
