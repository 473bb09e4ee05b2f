#pragma once

#include "dpx/linalg.hpp"

namespace dpx {

enum class ColStatsMode { variance, norm2 };

struct EquilibrationResult {
  DiagScaling d_row;
  DiagScaling d_col;
  int iterations = 0;
  bool converged = false;
};

// Diagonal-of-the-matrix heuristic: d_i = M_ii.  Throws NotPositiveDefinite
// when any diagonal entry is nonpositive.
DiagScaling jacobi_precond(const SymMatrix& M);

// Column statistics of a design matrix (n >= 2 rows):
//   variance: d_j = sum_i (X_ij - mean_j)^2 / (n - 1)
//   norm2:    same with mean_j frozen at 0, i.e. d_j = ||X_.j||^2 / (n - 1)
// A column with zero statistic raises DegenerateColumn naming its index.
DiagScaling col_stats_precond(const Matrix& X, ColStatsMode mode);

// Alternating row/column rescaling of a square matrix until every row and
// column of diag(d_row) * A * diag(d_col) has unit l_p norm (within tol).
// Symmetric inputs use a symmetric update that keeps d_row == d_col.
EquilibrationResult sinkhorn_equilibrate(const Matrix& A, double p_norm,
                                         int max_iter = 10000,
                                         double tol = 1e-10);

// Column scaling of a design matrix: column j is multiplied by d_j^{-1/2}.
Matrix apply_scaling(const Matrix& X, const DiagScaling& d);

// Symmetric two-sided scaling: out_ij = M_ij / sqrt(d_i d_j).
SymMatrix scale_sym(const SymMatrix& M, const DiagScaling& d);

}  // namespace dpx
