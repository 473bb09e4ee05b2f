#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "dpx/linalg.hpp"

namespace dpx {

// Deterministic random source: a fixed engine with hand-rolled uniform and
// normal draws so that identical seeds reproduce identical streams on any
// platform (std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (pairs cached).
  double normal();

  // Integer in [0, n).
  uint64_t index(uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0;
};

// Derive an independent stream seed from a base seed and a purpose salt
// (splitmix64 finalizer), so sub-experiments never share a stream.
uint64_t derive_seed(uint64_t seed, uint64_t salt);

enum class CovKind {
  spd_random,                 // rotated log-spaced spectrum
  dominant_corr_with_scales,  // dominant correlation times a diagonal
  identity,
  strong_corr,  // strongly correlated coordinates with mixed variances
};

struct CovSpec {
  int p = 2;
  CovKind kind = CovKind::spd_random;
  double target_cond = 1.0;  // spectrum (spd_random) or kappa(D) (dominant)
  double alpha = 2.0;        // dominance factor for dominant_corr_with_scales
  uint64_t seed = 0;
};

struct TrialResult {
  int n = 0;
  int p = 0;
  double gap = 0;           // | k(X'X)/k(Sigma) - k(X0'X0)/k(Sigma0) |
  double kappa_raw = 0;     // cond of the unscaled Gram matrix
  double kappa_scaled = 0;  // cond of the column-rescaled Gram matrix
  uint64_t seed = 0;
};

struct SweepRow {
  int n = 0;
  double median_gap = 0;
  double q90_gap = 0;
};

// Seeded covariance generator; see CovKind.  Throws InvalidSpec for
// inconsistent parameters (p < 1, target_cond < 1, alpha <= 1 where used,
// or a spread requested for p = 1).
SymMatrix gen_cov(const CovSpec& spec);

// n rows of N(mu, Sigma): X = G L^T + 1 mu^T with L = cholesky(Sigma).
Matrix sample_rows(int n, const SymMatrix& Sigma, const Vector& mu,
                   uint64_t seed);

// Bounded sub-Gaussian variant: entries of G drawn uniformly on
// [-sqrt(3), sqrt(3)] (unit variance), so the rows still have covariance
// Sigma but bounded support.
Matrix sample_rows_bounded(int n, const SymMatrix& Sigma, const Vector& mu,
                           uint64_t seed);

// One draw of the condition-number concentration experiment: samples X,
// rescales its columns by their raw norms, and reports how far the sample
// condition ratios sit from their population values.  Rank-deficient draws
// are retried up to 3 times with derived seeds before SingularSample.
TrialResult concentration_trial(int n, const SymMatrix& Sigma, uint64_t seed);

// Median and 90th-percentile gap over `trials` draws for each row count in
// `ns`.  Per-trial seeds are base_seed + trial_index.
std::vector<SweepRow> concentration_sweep(const SymMatrix& Sigma,
                                          const std::vector<int>& ns,
                                          int trials, uint64_t base_seed);

// CSV with header n,median_gap,q90_gap and 17 significant digits.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace dpx
