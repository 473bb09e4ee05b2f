#include "dpx/optimal.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "dpx/log.hpp"
#include "dpx/precondition.hpp"

namespace dpx {

namespace {

constexpr double kArmijoC1 = 1e-4;  // sufficient-increase constant
constexpr double kArmijoShrink = 0.5;
// The gradient test below is absolute, so on badly scaled problems the
// computed gradient can bottom out at a roundoff floor above the tolerance
// while the iterate itself is an excellent center.  Two symptoms mark that
// regime: the line search fails outright, or it keeps "accepting" steps that
// no longer move the potential.  In either case the point is accepted when
// the squared Newton decrement g' H^-1 g -- an affine-invariant bound on the
// remaining potential gap -- is negligible.
constexpr double kStallDecrement2 = 1e-10;
constexpr int kStallPatience = 5;  // consecutive zero-gain iterations

// Scientific formatting for debug logs; std::to_string flattens small
// magnitudes to 0.000000.
std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6e", x);
  return buf;
}

struct Blocks {
  Matrix R;  // M - D (+ sigma I when shifted)
  Matrix S;  // kappa D - M (+ sigma I)
};

Blocks make_blocks(const Matrix& M, const Vector& d, double kappa,
                   double sigma) {
  Blocks b;
  b.R = M;
  b.S = -M;
  for (int i = 0; i < d.size(); ++i) {
    b.R(i, i) += sigma - d[i];
    b.S(i, i) += sigma + kappa * d[i];
  }
  return b;
}

// Log-determinant via Cholesky; nullopt when the block is not PD.
std::optional<double> logdet_pd(const Matrix& A) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) return std::nullopt;
  double ld = 0;
  const Matrix& L = llt.matrixLLT();
  for (int i = 0; i < A.rows(); ++i) {
    if (!(L(i, i) > 0)) return std::nullopt;
    ld += std::log(L(i, i));
  }
  return 2.0 * ld;
}

// Shifted barrier value; nullopt outside the (shifted) interior.
std::optional<double> try_potential(const Matrix& M, const Vector& d,
                                    double kappa, double sigma) {
  for (int i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0)) return std::nullopt;
  }
  Blocks b = make_blocks(M, d, kappa, sigma);
  auto ldR = logdet_pd(b.R);
  if (!ldR) return std::nullopt;
  auto ldS = logdet_pd(b.S);
  if (!ldS) return std::nullopt;
  double ldD = 0;
  for (int i = 0; i < d.size(); ++i) ldD += std::log(d[i]);
  return *ldR + *ldS + ldD;
}

Matrix pd_inverse(const Matrix& A, ErrorKind kind, const char* what) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) {
    throw DomainError(kind, std::string(what) + " is not positive definite");
  }
  return llt.solve(Matrix::Identity(A.rows(), A.cols()));
}

double min_eig(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

// Inverse of the geometric-mean scaling point U of (A, B):
//   U = A^{1/2} (A^{1/2} B A^{1/2})^{-1/2} A^{1/2}  satisfies U B U = A,
//   U^{-1} = A^{-1/2} (A^{1/2} B A^{1/2})^{1/2} A^{-1/2}.
Matrix nt_scaling_inverse(const Matrix& A, const Matrix& B) {
  Eigen::SelfAdjointEigenSolver<Matrix> ea(A);
  if (ea.info() != Eigen::Success || !(ea.eigenvalues()[0] > 0)) {
    throw DomainError(ErrorKind::NumericalBreakdown,
                      "scaling block lost definiteness");
  }
  const Vector sq = ea.eigenvalues().cwiseSqrt();
  Matrix Ah = ea.eigenvectors() * sq.asDiagonal() * ea.eigenvectors().transpose();
  Matrix Ahi = ea.eigenvectors() * sq.cwiseInverse().asDiagonal() *
               ea.eigenvectors().transpose();
  Matrix inner = Ah * B * Ah;
  inner = ((inner + inner.transpose()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> ei(inner);
  if (ei.info() != Eigen::Success || !(ei.eigenvalues()[0] > 0)) {
    throw DomainError(ErrorKind::NumericalBreakdown,
                      "scaling point undefined (indefinite multiplier)");
  }
  Matrix inner_half = ei.eigenvectors() * ei.eigenvalues().cwiseSqrt().asDiagonal() *
                      ei.eigenvectors().transpose();
  Matrix out = Ahi * inner_half * Ahi;
  return ((out + out.transpose()) / 2.0).eval();
}

CenterState build_state(const SymMatrix& M, double kappa, DiagScaling d,
                        SymMatrix X, SymMatrix Y) {
  Blocks b = make_blocks(M.mat(), d.vec(), kappa, 0.0);
  Matrix Z = X.mat() - kappa * Y.mat();
  SymMatrix R{b.R};
  SymMatrix S{b.S};
  SymMatrix Zs{((Z + Z.transpose()) / 2.0).eval()};
  SymMatrix Dmat = SymMatrix::diag(d.vec());
  double dRX = proximity(R, X);
  double dSY = proximity(S, Y);
  double dDZ = proximity(Dmat, Zs);
  return CenterState{kappa,
                     std::move(d),
                     std::move(R),
                     std::move(S),
                     std::move(X),
                     std::move(Y),
                     std::move(Zs),
                     dRX,
                     dSY,
                     dDZ};
}

// Damped Newton ascent of the (optionally slack-shifted) potential.
// Returns the final iterate; convergence means ||grad||_inf <= tol.
struct NewtonOutcome {
  Vector d;
  bool converged;
  int iterations;
};

NewtonOutcome newton_ascent(const Matrix& M, double kappa, Vector d,
                            double sigma, double tol, int max_iter) {
  auto p0 = try_potential(M, d, kappa, sigma);
  if (!p0) {
    throw DomainError(ErrorKind::Infeasible,
                      "starting point is not strictly interior");
  }
  double pval = *p0;
  const int p = static_cast<int>(d.size());
  bool converged = false;
  int flat_steps = 0;
  int it = 0;
  for (; it < max_iter; ++it) {
    Blocks b = make_blocks(M, d, kappa, sigma);
    Matrix Rinv = pd_inverse(b.R, ErrorKind::Infeasible, "slack M - D");
    Matrix Sinv = pd_inverse(b.S, ErrorKind::Infeasible, "slack kappa D - M");
    Vector g(p);
    for (int i = 0; i < p; ++i) {
      g[i] = -Rinv(i, i) + kappa * Sinv(i, i) + 1.0 / d[i];
    }
    if (g.cwiseAbs().maxCoeff() <= tol) {
      converged = true;
      break;
    }
    // Hessian of -P: entrywise squares of the slack inverses plus diag(d^-2).
    Matrix H = Rinv.cwiseProduct(Rinv) +
               (kappa * kappa) * Sinv.cwiseProduct(Sinv);
    for (int i = 0; i < p; ++i) H(i, i) += 1.0 / (d[i] * d[i]);
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) {
      throw DomainError(ErrorKind::NumericalBreakdown,
                        "centering Hessian is not positive definite");
    }
    Vector step = llt.solve(g);
    const double slope = g.dot(step);  // > 0 for an ascent direction
    double t = 1.0;
    bool accepted = false;
    const double pval_before = pval;
    while (t >= 1e-18) {
      Vector cand = d + t * step;
      auto pc = try_potential(M, cand, kappa, sigma);
      if (pc && *pc >= pval + kArmijoC1 * t * slope) {
        d = std::move(cand);
        pval = *pc;
        accepted = true;
        break;
      }
      t *= kArmijoShrink;
    }
    if (accepted) {
      // Accepted steps that no longer move the potential mean the iterate is
      // pinned at the numerical optimum; without this guard the loop spins
      // until max_iter on problems whose gradient floor sits above tol.
      if (pval - pval_before <= 1e-13 * (1.0 + std::abs(pval))) {
        if (++flat_steps >= kStallPatience) {
          converged = slope <= kStallDecrement2;
          if (debug_log_enabled()) {
            log_debug("newton flatline it=" + std::to_string(it) +
                      " decrement2=" + sci(slope) +
                      " grad_inf=" + sci(g.cwiseAbs().maxCoeff()) +
                      " accepted=" + std::to_string(converged));
          }
          break;
        }
      } else {
        flat_steps = 0;
      }
    }
    if (!accepted) {
      // Line search stalled at numerical precision.  slope is the squared
      // Newton decrement at the current point, so a tiny value means the
      // ascent has nothing left to gain and the point is a valid center
      // even though the gradient test was never met.
      converged = slope <= kStallDecrement2;
      if (debug_log_enabled()) {
        log_debug("newton stall it=" + std::to_string(it) +
                  " decrement2=" + sci(slope) +
                  " grad_inf=" + sci(g.cwiseAbs().maxCoeff()) +
                  " accepted=" + std::to_string(converged));
      }
      break;
    }
  }
  return NewtonOutcome{std::move(d), converged, it};
}

}  // namespace

double CenterState::max_delta() const {
  return std::max({delta_RX, delta_SY, delta_DZ});
}

double proximity(const SymMatrix& A, const SymMatrix& B) {
  if (A.dim() != B.dim()) {
    throw DomainError(ErrorKind::DimensionMismatch,
                      "proximity of differently sized matrices");
  }
  // ||A^{1/2} B A^{1/2} - I||_F^2 = Tr((AB - I)^2) by similarity.
  Matrix E = A.mat() * B.mat();
  for (int i = 0; i < E.rows(); ++i) E(i, i) -= 1.0;
  const double sq = E.cwiseProduct(E.transpose()).sum();
  return std::sqrt(std::max(0.0, sq));
}

double potential(const SymMatrix& M, const DiagScaling& d, double kappa) {
  if (M.dim() != d.size()) {
    throw DomainError(ErrorKind::DimensionMismatch,
                      "scaling size does not match matrix dimension");
  }
  Blocks b = make_blocks(M.mat(), d.vec(), kappa, 0.0);
  auto ldR = logdet_pd(b.R);
  if (!ldR) {
    throw DomainError(ErrorKind::Infeasible, "slack M - D is not PD");
  }
  auto ldS = logdet_pd(b.S);
  if (!ldS) {
    throw DomainError(ErrorKind::Infeasible, "slack kappa D - M is not PD");
  }
  double ldD = 0;
  for (int i = 0; i < d.size(); ++i) ldD += std::log(d[i]);
  return *ldR + *ldS + ldD;
}

CenterState exact_multiplier_state(const SymMatrix& M, double kappa,
                                   const DiagScaling& d) {
  Blocks b = make_blocks(M.mat(), d.vec(), kappa, 0.0);
  Matrix X = pd_inverse(b.R, ErrorKind::Infeasible, "slack M - D");
  Matrix Y = pd_inverse(b.S, ErrorKind::Infeasible, "slack kappa D - M");
  return build_state(M, kappa, d, SymMatrix{((X + X.transpose()) / 2).eval()},
                     SymMatrix{((Y + Y.transpose()) / 2).eval()});
}

CenterState state_with_multipliers(const SymMatrix& M, double kappa,
                                   const DiagScaling& d, const SymMatrix& X,
                                   const SymMatrix& Y) {
  return build_state(M, kappa, d, X, Y);
}

CenterState center(const SymMatrix& M, double kappa, const DiagScaling& d_init,
                   const IpmConfig& cfg) {
  NewtonOutcome out = newton_ascent(M.mat(), kappa, d_init.vec(), 0.0,
                                    cfg.newton_tol, cfg.max_newton);
  CenterState state = exact_multiplier_state(M, kappa, DiagScaling(out.d));
  if (!out.converged) {
    throw CenterNoConvergence(
        std::move(state),
        "centering did not reach tolerance in " +
            std::to_string(cfg.max_newton) + " Newton iterations");
  }
  return state;
}

CenterState nt_step(const CenterState& state, const SymMatrix& M) {
  const double delta = state.max_delta();
  if (!(delta <= 0.9)) {
    throw DomainError(ErrorKind::OutOfRegion,
                      "proximity " + std::to_string(delta) +
                          " exceeds the contraction region (0.9)");
  }
  const int p = M.dim();
  const double kappa = state.kappa;
  const Vector& d = state.d.vec();

  Matrix Dmat = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) Dmat(i, i) = d[i];

  // Scaling points: U B U = A for each slack/multiplier pair.
  Matrix Uinv = nt_scaling_inverse(state.R.mat(), state.Xm.mat());
  Matrix Vinv = nt_scaling_inverse(state.S.mat(), state.Ym.mat());
  Matrix Winv = nt_scaling_inverse(Dmat, state.Zm.mat());

  Matrix Rinv = pd_inverse(state.R.mat(), ErrorKind::NumericalBreakdown,
                           "slack M - D");
  Matrix Sinv = pd_inverse(state.S.mat(), ErrorKind::NumericalBreakdown,
                           "slack kappa D - M");

  // Diagonal projection of the consistency equation
  //   U^-1 dD U^-1 + W^-1 dD W^-1 + kappa^2 V^-1 dD V^-1
  //     = D^-1 + kappa S^-1 - R^-1.
  Matrix B = Uinv.cwiseProduct(Uinv) + Winv.cwiseProduct(Winv) +
             (kappa * kappa) * Vinv.cwiseProduct(Vinv);
  Vector rhs(p);
  for (int i = 0; i < p; ++i) {
    rhs[i] = 1.0 / d[i] + kappa * Sinv(i, i) - Rinv(i, i);
  }
  Eigen::LLT<Matrix> llt(B);
  if (llt.info() != Eigen::Success) {
    throw DomainError(ErrorKind::NumericalBreakdown,
                      "projected scaling system is not positive definite");
  }
  Vector dd = llt.solve(rhs);

  Matrix dD = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) dD(i, i) = dd[i];

  Matrix Dinv = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) Dinv(i, i) = 1.0 / d[i];

  // Multiplier updates from the pairwise Newton equations; the constraint
  // increment dZ + kappa dY = dX holds by construction.
  Matrix dZ = Dinv - state.Zm.mat() - Winv * dD * Winv;
  Matrix dY = Sinv - state.Ym.mat() - kappa * (Vinv * dD * Vinv);
  Matrix X1 = state.Xm.mat() + dZ + kappa * dY;
  Matrix Y1 = state.Ym.mat() + dY;

  Vector d1 = d + dd;
  for (int i = 0; i < p; ++i) {
    if (!(d1[i] > 0)) {
      throw DomainError(ErrorKind::NumericalBreakdown,
                        "recentering step left the positive orthant");
    }
  }
  Blocks nb = make_blocks(M.mat(), d1, kappa, 0.0);
  if (!(min_eig(nb.R) > 0) || !(min_eig(nb.S) > 0)) {
    throw DomainError(ErrorKind::NumericalBreakdown,
                      "recentering step left the feasible cone");
  }
  return build_state(M, kappa, DiagScaling(std::move(d1)),
                     SymMatrix{((X1 + X1.transpose()) / 2).eval()},
                     SymMatrix{((Y1 + Y1.transpose()) / 2).eval()});
}

KappaStepResult kappa_step(const CenterState& state, const SymMatrix& M,
                           double beta) {
  if (!(beta > 0)) {
    throw DomainError(ErrorKind::InvalidSpec, "beta must be positive");
  }
  const int p = M.dim();
  const Vector& d = state.d.vec();
  Matrix Sinv = pd_inverse(state.S.mat(), ErrorKind::NumericalBreakdown,
                           "slack kappa D - M");
  double tr = 0;
  for (int i = 0; i < p; ++i) tr += d[i] * Sinv(i, i);
  const double dk = beta / tr;
  const double new_kappa = state.kappa - dk;

  Matrix Sbar = state.S.mat();
  for (int i = 0; i < p; ++i) Sbar(i, i) -= dk * d[i];
  if (!(min_eig(Sbar) > 0) || !(new_kappa > 1.0)) {
    throw DomainError(ErrorKind::StepTooLarge,
                      "kappa decrement " + std::to_string(dk) +
                          " leaves the feasible set");
  }

  // X and Y are carried across the kappa shift; the derived multiplier
  // Zm = X - new_kappa * Y equals the shifted value Z + dk * Y exactly.
  CenterState shifted =
      build_state(M, new_kappa, state.d, state.Xm, state.Ym);
  return KappaStepResult{new_kappa, std::move(shifted)};
}

OptResult ipm_optimize(const SymMatrix& M, const IpmConfig& cfg) {
  if (!is_pd(M)) {
    throw DomainError(ErrorKind::NotPositiveDefinite,
                      "optimal preconditioning needs an SPD input");
  }
  CondReport cm = cond_2(M);
  const int p = M.dim();

  if (cm.kappa <= 1.0 + 1e-12) {
    // Already a multiple of the identity: its own diagonal is optimal.
    DiagScaling d = jacobi_precond(M);
    double ach = cond_2(scale_sym(M, d)).kappa;
    return OptResult{std::move(d), ach, 1.0, 0, {}};
  }

  const double kappa0 = 1.01 * cm.kappa;
  // Uniform interior start; the 0.995 factor keeps both slacks PD since
  // 1.01 * 0.995 > 1.
  Vector d0 = Vector::Constant(p, 0.995 * cm.lambda_min);
  CenterState state = center(M, kappa0, DiagScaling(d0), cfg);

  OptResult res{state.d, 0, kappa0, 0, {}};
  res.trace.emplace_back(kappa0, potential(M, state.d, kappa0));

  int outer = 0;
  while (outer < cfg.max_outer) {
    double beta = cfg.beta;
    std::optional<KappaStepResult> ks;
    for (int h = 0; h <= 20; ++h) {
      try {
        ks = kappa_step(state, M, beta);
        break;
      } catch (const DomainError& e) {
        if (e.kind() != ErrorKind::StepTooLarge) throw;
        beta /= 2;  // halve and retry within this outer iteration
      }
    }
    if (!ks) break;  // kappa cannot be decreased further
    const double dk = state.kappa - ks->new_kappa;
    if (dk / state.kappa < cfg.eps) break;

    // Recenter at the new kappa: scaled Newton steps while the state stays
    // inside the contraction region, then a damped-Newton polish.
    CenterState next = std::move(ks->shifted);
    for (int t = 0; t < 5 && next.max_delta() > cfg.beta; ++t) {
      if (!(next.max_delta() <= 0.9)) break;
      try {
        next = nt_step(next, M);
      } catch (const DomainError&) {
        break;  // fall through to the damped-Newton polish
      }
    }
    try {
      state = center(M, ks->new_kappa, next.d, cfg);
    } catch (const CenterNoConvergence& e) {
      state = e.best();
    }
    ++outer;
    res.trace.emplace_back(state.kappa, potential(M, state.d, state.kappa));
    if (debug_log_enabled()) {
      log_debug("ipm outer=" + std::to_string(outer) +
                " kappa=" + sci(state.kappa) +
                " potential=" + sci(res.trace.back().second));
    }
  }

  res.d_opt = state.d;
  res.kappa_certified = state.kappa;
  res.kappa_achieved = cond_2(scale_sym(M, state.d)).kappa;
  res.outer_iterations = outer;
  return res;
}

Feasibility feasibility(const SymMatrix& M, double kappa,
                        const std::optional<DiagScaling>& warm,
                        const IpmConfig& cfg) {
  const int p = M.dim();
  EigResult em = sym_eig(M);
  const double lmax = em.values[0];
  const double lmin = em.values[p - 1];
  if (!(lmin > kPdTol * lmax)) {
    throw DomainError(ErrorKind::NotPositiveDefinite,
                      "feasibility oracle needs an SPD input");
  }
  const double margin_tol = 1e-10 * lmax;

  auto margins_ok = [&](const Vector& d) {
    Blocks b = make_blocks(M.mat(), d, kappa, 0.0);
    return d.minCoeff() > 0 && min_eig(b.R) > margin_tol &&
           min_eig(b.S) > margin_tol;
  };

  std::vector<Vector> starts;
  if (warm) starts.push_back(warm->vec());
  starts.push_back(Vector::Constant(p, 0.5 * lmin));
  starts.push_back(Vector::Constant(p, 0.995 * lmin));

  for (const Vector& start : starts) {
    Vector d = start;
    if (d.minCoeff() <= 0) continue;

    if (!margins_ok(d)) {
      // Relax the slacks just enough to make the start interior, then walk
      // the shift down; if it stalls the set is (heuristically) empty.  The
      // shift must decrease monotonically: the shifted center's violation
      // scales with sigma, so any update proportional to the violation with
      // a factor above one can feed back into growth.  A 1.05 cushion keeps
      // the next start interior (violation <= 0.95 sigma at this point)
      // while still contracting.
      Blocks b = make_blocks(M.mat(), d, kappa, 0.0);
      double sigma =
          1.05 * std::max({0.0, -min_eig(b.R), -min_eig(b.S)}) + 1e-6 * lmax;
      bool reached_interior = false;
      for (int stage = 0; stage < 120; ++stage) {
        NewtonOutcome out = newton_ascent(M.mat(), kappa, d, sigma,
                                          std::max(cfg.newton_tol, 1e-6),
                                          cfg.max_newton);
        d = out.d;
        if (margins_ok(d)) {
          reached_interior = true;
          break;
        }
        Blocks cur = make_blocks(M.mat(), d, kappa, 0.0);
        const double needed =
            std::max({0.0, -min_eig(cur.R), -min_eig(cur.S)});
        if (debug_log_enabled()) {
          log_debug("feasibility stage=" + std::to_string(stage) +
                    " sigma=" + sci(sigma) +
                    " needed=" + sci(needed) +
                    " ascent_iters=" + std::to_string(out.iterations) +
                    " ascent_converged=" + std::to_string(out.converged));
        }
        if (needed > 0.95 * sigma || sigma < 1e-14 * lmax) break;
        sigma = std::max(sigma * 0.25, 1.05 * needed + 1e-15 * lmax);
      }
      if (!reached_interior) continue;
    }

    // Polish to the analytic center so the returned point is well inside.
    try {
      CenterState st = center(M, kappa, DiagScaling(d), cfg);
      if (margins_ok(st.d.vec())) {
        return Feasibility{true, st.d};
      }
    } catch (const CenterNoConvergence& e) {
      if (margins_ok(e.best().d.vec())) {
        return Feasibility{true, e.best().d};
      }
    } catch (const DomainError&) {
      // fall through to the next start
    }
  }
  return Feasibility{false, std::nullopt};
}

OptResult bisect_optimize(const SymMatrix& M, double eps,
                          const IpmConfig& cfg) {
  if (!is_pd(M)) {
    throw DomainError(ErrorKind::NotPositiveDefinite,
                      "optimal preconditioning needs an SPD input");
  }
  if (!(eps > 0)) {
    throw DomainError(ErrorKind::InvalidSpec, "eps must be positive");
  }
  CondReport cm = cond_2(M);
  const int p = M.dim();

  if (cm.kappa <= 1.0 + 1e-12) {
    DiagScaling d = jacobi_precond(M);
    double ach = cond_2(scale_sym(M, d)).kappa;
    return OptResult{std::move(d), ach, 1.0, 0, {}};
  }

  // cond_2(M) itself may equal the optimum, in which case the feasible set
  // at kappa = cond_2(M) has empty interior; pad the upper end slightly.
  double hi = 1.01 * cm.kappa;
  double lo = 1.0;
  Vector d0 = Vector::Constant(p, 0.995 * cm.lambda_min);
  CenterState st = center(M, hi, DiagScaling(d0), cfg);
  DiagScaling d_best = st.d;

  OptResult res{d_best, 0, hi, 0, {}};
  res.trace.emplace_back(hi, potential(M, d_best, hi));

  int iters = 0;
  while ((hi - lo) > eps * hi && iters < cfg.max_outer) {
    const double mid = 0.5 * (lo + hi);
    Feasibility f = feasibility(M, mid, d_best, cfg);
    if (f.feasible) {
      hi = mid;
      d_best = *f.d;
      res.trace.emplace_back(mid, potential(M, d_best, mid));
    } else {
      lo = mid;
    }
    ++iters;
    if (debug_log_enabled()) {
      log_debug("bisect iter=" + std::to_string(iters) +
                " lo=" + sci(lo) + " hi=" + sci(hi));
    }
  }

  res.d_opt = d_best;
  res.kappa_certified = hi;
  res.kappa_achieved = cond_2(scale_sym(M, d_best)).kappa;
  res.outer_iterations = iters;
  return res;
}

DominanceRatioBound dominance_ratio_bound(const SymMatrix& S) {
  CondReport cs = cond_2(S);  // throws when S is not PD
  CorrResult cr = corr_from_cov(S);
  CondReport cc = cond_2(cr.corr);
  DominanceReport dom = dominance(cr.corr.mat());

  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0;
  for (int i = 0; i < S.dim(); ++i) {
    dmin = std::min(dmin, S(i, i));
    dmax = std::max(dmax, S(i, i));
  }
  const double diag_ratio = dmax / dmin;

  DominanceRatioBound out;
  out.lhs = cs.kappa / cc.kappa;
  out.alpha = dom.alpha;
  out.alpha_infinite = dom.alpha_infinite;
  out.diag_ratio = diag_ratio;
  const double factor =
      dom.alpha_infinite
          ? 1.0
          : std::pow((dom.alpha - 1.0) / (dom.alpha + 1.0), 2.0);
  out.rhs = factor * diag_ratio / static_cast<double>(S.dim());
  if (dom.alpha > 1.0 && out.lhs < out.rhs - 1e-9) {
    throw DomainError(ErrorKind::NumericalBreakdown,
                      "dominance ratio bound violated; numerical failure");
  }
  return out;
}

}  // namespace dpx
