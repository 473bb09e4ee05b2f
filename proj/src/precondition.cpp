#include "dpx/precondition.hpp"

#include <cmath>
#include <string>

namespace dpx {

namespace {

bool is_symmetric(const Matrix& A) {
  for (int i = 0; i < A.rows(); ++i) {
    for (int j = i + 1; j < A.cols(); ++j) {
      double a = A(i, j), b = A(j, i);
      if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a) + std::abs(b))) {
        return false;
      }
    }
  }
  return true;
}

Vector lp_row_norms(const Matrix& B, double p) {
  Vector out(B.rows());
  for (int i = 0; i < B.rows(); ++i) {
    double acc = 0;
    for (int j = 0; j < B.cols(); ++j) {
      acc += std::pow(std::abs(B(i, j)), p);
    }
    out[i] = std::pow(acc, 1.0 / p);
  }
  return out;
}

}  // namespace

DiagScaling jacobi_precond(const SymMatrix& M) {
  const int p = M.dim();
  Vector d(p);
  for (int i = 0; i < p; ++i) {
    if (!(M(i, i) > 0)) {
      throw DomainError(ErrorKind::NotPositiveDefinite,
                        "diagonal entry " + std::to_string(i) +
                            " is nonpositive");
    }
    d[i] = M(i, i);
  }
  return DiagScaling(std::move(d));
}

DiagScaling col_stats_precond(const Matrix& X, ColStatsMode mode) {
  const long n = X.rows();
  const long p = X.cols();
  if (n < 2) {
    throw DomainError(ErrorKind::InvalidMatrix,
                      "column statistics need at least 2 rows");
  }
  Vector d(p);
  for (long j = 0; j < p; ++j) {
    double mu = mode == ColStatsMode::variance ? X.col(j).mean() : 0.0;
    double acc = 0;
    for (long i = 0; i < n; ++i) {
      const double c = X(i, j) - mu;
      acc += c * c;
    }
    d[j] = acc / static_cast<double>(n - 1);
    if (!(d[j] > 0)) {
      throw DomainError(ErrorKind::DegenerateColumn,
                        "column " + std::to_string(j) +
                            " has zero variance/norm");
    }
  }
  return DiagScaling(std::move(d));
}

EquilibrationResult sinkhorn_equilibrate(const Matrix& A, double p_norm,
                                         int max_iter, double tol) {
  if (A.rows() == 0 || A.rows() != A.cols()) {
    throw DomainError(ErrorKind::InvalidMatrix,
                      "equilibration needs a square matrix");
  }
  if (!(p_norm >= 1)) {
    throw DomainError(ErrorKind::InvalidSpec, "p_norm must be >= 1");
  }
  const int p = static_cast<int>(A.rows());
  for (int i = 0; i < p; ++i) {
    if (A.row(i).cwiseAbs().sum() == 0) {
      throw DomainError(ErrorKind::DegenerateMatrix,
                        "zero row at index " + std::to_string(i));
    }
    if (A.col(i).cwiseAbs().sum() == 0) {
      throw DomainError(ErrorKind::DegenerateMatrix,
                        "zero column at index " + std::to_string(i));
    }
  }

  const bool symmetric = is_symmetric(A);
  Vector dr = Vector::Ones(p);
  Vector dc = Vector::Ones(p);

  auto scaled = [&]() -> Matrix {
    return dr.asDiagonal() * A * dc.asDiagonal();
  };
  auto equilibrated = [&](const Matrix& B) {
    Vector rn = lp_row_norms(B, p_norm);
    Vector cn = lp_row_norms(B.transpose(), p_norm);
    return (rn.array() - 1.0).abs().maxCoeff() <= tol &&
           (cn.array() - 1.0).abs().maxCoeff() <= tol;
  };

  int iter = 0;
  bool converged = equilibrated(scaled());
  while (!converged && iter < max_iter) {
    if (symmetric) {
      // Symmetric update: one factor applied on both sides keeps dr == dc
      // and the scaled matrix symmetric throughout.
      Vector rn = lp_row_norms(scaled(), p_norm);
      for (int i = 0; i < p; ++i) {
        const double f = 1.0 / std::sqrt(rn[i]);
        dr[i] *= f;
        dc[i] *= f;
      }
    } else {
      Vector rn = lp_row_norms(scaled(), p_norm);
      for (int i = 0; i < p; ++i) dr[i] /= rn[i];
      Vector cn = lp_row_norms(scaled().transpose(), p_norm);
      for (int i = 0; i < p; ++i) dc[i] /= cn[i];
    }
    ++iter;
    converged = equilibrated(scaled());
  }

  return EquilibrationResult{DiagScaling(std::move(dr)),
                             DiagScaling(std::move(dc)), iter, converged};
}

Matrix apply_scaling(const Matrix& X, const DiagScaling& d) {
  if (X.cols() != d.size()) {
    throw DomainError(ErrorKind::DimensionMismatch,
                      "scaling size does not match column count");
  }
  Matrix out = X;
  for (int j = 0; j < out.cols(); ++j) {
    out.col(j) /= std::sqrt(d[j]);
  }
  return out;
}

SymMatrix scale_sym(const SymMatrix& M, const DiagScaling& d) {
  if (M.dim() != d.size()) {
    throw DomainError(ErrorKind::DimensionMismatch,
                      "scaling size does not match matrix dimension");
  }
  const int p = M.dim();
  Matrix out(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      out(i, j) = M(i, j) / std::sqrt(d[i] * d[j]);
    }
  }
  return SymMatrix(std::move(out));
}

}  // namespace dpx
