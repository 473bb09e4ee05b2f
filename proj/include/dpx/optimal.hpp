#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "dpx/linalg.hpp"

namespace dpx {

// Tuning knobs for the potential-reduction interior point optimizer.
struct IpmConfig {
  double beta = 0.05;      // kappa step aggressiveness
  double eps = 1e-3;       // relative kappa progress cutoff
  int max_outer = 10000;   // outer (kappa) iteration cap
  double newton_tol = 1e-8;  // inf-norm gradient target for centering
  int max_newton = 200;    // Newton iteration cap per centering call
};

// Interior state for the constraint set {d : M - D > 0, kappa*D - M > 0,
// d > 0} together with symmetric multiplier estimates.  R and S are the
// slacks, (Xm, Ym, Zm) the multipliers with Zm + kappa*Ym = Xm exactly, and
// delta_* the Frobenius proximity of each slack/multiplier pair.
struct CenterState {
  double kappa;
  DiagScaling d;
  SymMatrix R;   // M - diag(d)
  SymMatrix S;   // kappa * diag(d) - M
  SymMatrix Xm;
  SymMatrix Ym;
  SymMatrix Zm;
  double delta_RX;
  double delta_SY;
  double delta_DZ;

  double max_delta() const;
};

struct KappaStepResult {
  double new_kappa;
  CenterState shifted;
};

struct OptResult {
  DiagScaling d_opt;
  double kappa_achieved;   // condition number of the rescaled matrix
  double kappa_certified;  // final constraint-set kappa (upper bound)
  int outer_iterations;
  std::vector<std::pair<double, double>> trace;  // (kappa, potential)
};

struct Feasibility {
  bool feasible;
  std::optional<DiagScaling> d;  // strictly interior point when feasible
};

struct DominanceRatioBound {
  double lhs;   // cond_2(S) / cond_2(corr)
  double rhs;   // ((alpha-1)/(alpha+1))^2 * diag_ratio / p
  double alpha;
  bool alpha_infinite;
  double diag_ratio;
};

// Thrown by center() when the Newton iteration cap is reached; carries the
// best interior state found so far.
class CenterNoConvergence : public DomainError {
 public:
  CenterNoConvergence(CenterState best, const std::string& msg)
      : DomainError(ErrorKind::NoConvergence, msg), best_(std::move(best)) {}
  const CenterState& best() const { return best_; }

 private:
  CenterState best_;
};

// Frobenius proximity ||A^{1/2} B A^{1/2} - I||_F of a PD matrix A and a
// symmetric B (computed trace-algebraically, no square roots needed).
double proximity(const SymMatrix& A, const SymMatrix& B);

// Log-det barrier potential
//   P(d, kappa) = logdet(M - D) + logdet(kappa*D - M) + sum_i log d_i.
// Throws Infeasible naming the first constraint block that is not PD.
double potential(const SymMatrix& M, const DiagScaling& d, double kappa);

// State with multipliers evaluated at the slacks: Xm = R^{-1}, Ym = S^{-1},
// Zm = Xm - kappa*Ym.  Requires d strictly interior.
CenterState exact_multiplier_state(const SymMatrix& M, double kappa,
                                   const DiagScaling& d);

// State with caller-supplied multipliers (Zm is derived from the constraint
// Zm = Xm - kappa*Ym).  Used for warm starts and randomized-state harnesses.
CenterState state_with_multipliers(const SymMatrix& M, double kappa,
                                   const DiagScaling& d, const SymMatrix& X,
                                   const SymMatrix& Y);

// Analytic center of the barrier potential at fixed kappa: damped Newton
// ascent with Armijo backtracking from d_init.  On success the returned
// state carries exact slack-inverse multipliers.
CenterState center(const SymMatrix& M, double kappa, const DiagScaling& d_init,
                   const IpmConfig& cfg);

// One scaled primal-dual Newton recentering step.  The diagonal direction is
// obtained by projecting the matrix Newton system onto the diagonal
// coordinates (the projected system coincides with the damped-Newton
// centering system at exact states).  Requires all proximities <= 0.9.
CenterState nt_step(const CenterState& state, const SymMatrix& M);

// Potential-reduction kappa update: delta_kappa = beta / Tr(D * S^{-1}),
// slacks and multipliers shifted so the multiplier constraint still holds at
// the new kappa.  Throws StepTooLarge when the shifted slack loses
// definiteness; the caller halves beta and retries.
KappaStepResult kappa_step(const CenterState& state, const SymMatrix& M,
                           double beta);

// Interior point optimizer: alternates kappa steps with recentering until
// the relative kappa decrement falls below cfg.eps.
OptResult ipm_optimize(const SymMatrix& M, const IpmConfig& cfg = {});

// Feasibility oracle for {d : M - D > 0, kappa*D - M > 0, d > 0}: damped
// Newton ascent of a slack-shifted potential with the shift driven to zero.
// The Infeasible verdict is heuristic (no dual certificate is produced).
Feasibility feasibility(const SymMatrix& M, double kappa,
                        const std::optional<DiagScaling>& warm,
                        const IpmConfig& cfg = {});

// Bisection on kappa over [1, cond_2(M)] using the feasibility oracle;
// keeps the last strictly feasible d.
OptResult bisect_optimize(const SymMatrix& M, double eps,
                          const IpmConfig& cfg = {});

// Scale-aware dominance bound for a covariance S: how much diagonal scaling
// must improve the condition number when the correlation matrix is
// diagonally dominant with factor alpha > 1.
DominanceRatioBound dominance_ratio_bound(const SymMatrix& S);

}  // namespace dpx
