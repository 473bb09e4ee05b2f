#include "dpx/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <string>

namespace dpx {

namespace {

std::string dim_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) {
    throw DomainError(ErrorKind::InvalidMatrix,
                      "symmetric matrix must be square, got " + dim_str(m_));
  }
  for (int i = 0; i < m_.rows(); ++i) {
    for (int j = i + 1; j < m_.cols(); ++j) {
      double a = m_(i, j), b = m_(j, i);
      if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a) + std::abs(b))) {
        throw DomainError(ErrorKind::InvalidMatrix,
                          "matrix is not symmetric at (" + std::to_string(i) +
                              "," + std::to_string(j) + ")");
      }
    }
  }
  // Remove roundoff skew so eigen solvers see an exactly symmetric matrix.
  m_ = ((m_ + m_.transpose()) / 2.0).eval();
}

SymMatrix SymMatrix::identity(int p) {
  return SymMatrix(Matrix::Identity(p, p));
}

SymMatrix SymMatrix::diag(const Vector& v) {
  Matrix m = v.asDiagonal();
  return SymMatrix(std::move(m));
}

DiagScaling::DiagScaling(Vector d) : d_(std::move(d)) {
  if (d_.size() == 0) {
    throw DomainError(ErrorKind::InvalidMatrix, "empty diagonal scaling");
  }
  for (int i = 0; i < d_.size(); ++i) {
    if (!(d_[i] > 0) || !std::isfinite(d_[i])) {
      throw DomainError(ErrorKind::NotPositiveDefinite,
                        "diagonal scaling entry " + std::to_string(i) +
                            " is not positive");
    }
  }
}

EigResult sym_eig(const SymMatrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M.mat());
  if (es.info() != Eigen::Success) {
    throw DomainError(ErrorKind::NumericalBreakdown,
                      "symmetric eigendecomposition failed");
  }
  const int p = M.dim();
  EigResult r;
  r.values = Vector(p);
  r.vectors = Matrix(p, p);
  // Eigen returns ascending order; flip to descending.
  for (int i = 0; i < p; ++i) {
    r.values[i] = es.eigenvalues()[p - 1 - i];
    r.vectors.col(i) = es.eigenvectors().col(p - 1 - i);
  }
  return r;
}

CondReport cond_2(const SymMatrix& M) {
  EigResult e = sym_eig(M);
  const double lmax = e.values[0];
  const double lmin = e.values[M.dim() - 1];
  if (!(lmin > kPdTol * lmax) || !(lmax > 0)) {
    throw DomainError(ErrorKind::SingularMatrix,
                      "matrix is numerically singular or not PD (lambda_min=" +
                          std::to_string(lmin) + ")");
  }
  return CondReport{lmax, lmin, lmax / lmin};
}

CondReport cond_rect(const Matrix& X) {
  if (X.rows() == 0 || X.cols() == 0) {
    throw DomainError(ErrorKind::InvalidMatrix, "empty matrix");
  }
  Eigen::JacobiSVD<Matrix> svd(X);
  const auto& s = svd.singularValues();
  const double smax = s[0];
  const double smin = s[s.size() - 1];
  if (!(smin > kPdTol * smax) || !(smax > 0)) {
    throw DomainError(ErrorKind::SingularMatrix,
                      "matrix is numerically rank deficient");
  }
  return CondReport{smax, smin, smax / smin};
}

double cond_inf(const Matrix& M) {
  if (M.rows() == 0 || M.rows() != M.cols()) {
    throw DomainError(ErrorKind::InvalidMatrix,
                      "cond_inf needs a square matrix, got " + dim_str(M));
  }
  Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible()) {
    throw DomainError(ErrorKind::SingularMatrix,
                      "matrix is singular in the infinity norm");
  }
  Matrix inv = lu.inverse();
  const double norm_m = M.cwiseAbs().rowwise().sum().maxCoeff();
  const double norm_inv = inv.cwiseAbs().rowwise().sum().maxCoeff();
  return norm_m * norm_inv;
}

Matrix cholesky(const SymMatrix& M) {
  Eigen::LLT<Matrix> llt(M.mat());
  if (llt.info() != Eigen::Success) {
    throw DomainError(ErrorKind::NotPositiveDefinite,
                      "Cholesky factorization failed");
  }
  return llt.matrixL();
}

CorrResult corr_from_cov(const SymMatrix& S) {
  const int p = S.dim();
  Vector d(p);
  for (int i = 0; i < p; ++i) {
    d[i] = S(i, i);
    if (!(d[i] > 0)) {
      throw DomainError(ErrorKind::NotPositiveDefinite,
                        "covariance has nonpositive variance at index " +
                            std::to_string(i));
    }
  }
  Matrix corr(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      corr(i, j) = S(i, j) / std::sqrt(d[i] * d[j]);
    }
  }
  return CorrResult{SymMatrix(std::move(corr)), DiagScaling(std::move(d))};
}

DominanceReport dominance(const Matrix& M) {
  if (M.rows() == 0 || M.rows() != M.cols()) {
    throw DomainError(ErrorKind::InvalidMatrix,
                      "dominance needs a square matrix, got " + dim_str(M));
  }
  const int p = static_cast<int>(M.rows());
  const double inf = std::numeric_limits<double>::infinity();
  double alpha = inf;
  double dmin = inf, dmax = 0;
  for (int i = 0; i < p; ++i) {
    const double diag = std::abs(M(i, i));
    dmin = std::min(dmin, diag);
    dmax = std::max(dmax, diag);
    double off = 0;
    for (int j = 0; j < p; ++j) {
      if (j != i) off += std::abs(M(i, j));
    }
    if (off > 0) alpha = std::min(alpha, diag / off);
  }
  DominanceReport r;
  r.alpha = alpha;
  r.alpha_infinite = std::isinf(alpha);
  r.diag_ratio = dmin > 0 ? dmax / dmin : inf;
  return r;
}

bool is_pd(const SymMatrix& M) {
  EigResult e = sym_eig(M);
  const double lmax = e.values[0];
  const double lmin = e.values[M.dim() - 1];
  return lmax > 0 && lmin > kPdTol * lmax;
}

}  // namespace dpx
