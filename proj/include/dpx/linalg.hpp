#pragma once

#include <Eigen/Dense>

#include "dpx/errors.hpp"

namespace dpx {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative eigenvalue floor below which a symmetric matrix is treated as
// singular / not positive definite.
inline constexpr double kPdTol = 1e-14;

// Dense symmetric matrix.  The constructor enforces symmetry so downstream
// code can rely on it; entries are stored as a full square Matrix.
class SymMatrix {
 public:
  explicit SymMatrix(Matrix m);

  static SymMatrix identity(int p);
  static SymMatrix diag(const Vector& v);

  int dim() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Matrix& mat() const { return m_; }

 private:
  Matrix m_;
};

// Positive diagonal scaling d (all entries > 0), the common currency of the
// preconditioning routines.
class DiagScaling {
 public:
  explicit DiagScaling(Vector d);

  int size() const { return static_cast<int>(d_.size()); }
  double operator[](int i) const { return d_[i]; }
  const Vector& vec() const { return d_; }

 private:
  Vector d_;
};

struct CondReport {
  double lambda_max = 0;
  double lambda_min = 0;
  double kappa = 0;
};

// alpha = min_i |M_ii| / sum_{j != i} |M_ij|; rows whose off-diagonal sum is
// zero contribute an infinite ratio.  alpha_infinite marks the all-rows case.
struct DominanceReport {
  double alpha = 0;
  bool alpha_infinite = false;
  double diag_ratio = 1;
};

struct EigResult {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns, vectors.col(i) pairs with values[i]
};

struct CorrResult {
  SymMatrix corr;
  DiagScaling d;  // diagonal of the input covariance (variances)
};

// Full symmetric eigendecomposition, eigenvalues sorted descending.
EigResult sym_eig(const SymMatrix& M);

// Extreme eigenvalues and 2-norm condition number of an SPD matrix.
// Throws SingularMatrix when lambda_min <= kPdTol * lambda_max.
CondReport cond_2(const SymMatrix& M);

// Singular values of a rectangular matrix: kappa = sigma_max / sigma_min.
CondReport cond_rect(const Matrix& X);

// Condition number in the induced infinity norm (max absolute row sum),
// kappa_inf = ||M||_inf * ||M^-1||_inf.
double cond_inf(const Matrix& M);

// Lower-triangular Cholesky factor L with LL^T = M and positive diagonal.
Matrix cholesky(const SymMatrix& M);

// Rescale a covariance to unit diagonal: corr_ij = S_ij / sqrt(S_ii S_jj).
CorrResult corr_from_cov(const SymMatrix& S);

// Diagonal dominance statistics of a square matrix.
DominanceReport dominance(const Matrix& M);

bool is_pd(const SymMatrix& M);

}  // namespace dpx
