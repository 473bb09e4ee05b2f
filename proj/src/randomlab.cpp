#include "dpx/randomlab.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "dpx/precondition.hpp"

namespace dpx {

uint64_t derive_seed(uint64_t seed, uint64_t salt) {
  uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 is bounded away from 0 so the log is finite.
  double u1 = 0;
  do {
    u1 = uniform();
  } while (u1 <= 1e-300);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

namespace {

// Log-spaced values in [1, target], largest first.
Vector log_spaced(int p, double target) {
  Vector v(p);
  for (int i = 0; i < p; ++i) {
    const double t = p == 1 ? 0.0 : static_cast<double>(i) / (p - 1);
    v[i] = std::pow(target, 1.0 - t);
  }
  return v;
}

// Random orthogonal matrix: QR of a Gaussian matrix with sign-fixed R
// diagonal so the distribution is Haar and the result deterministic.
Matrix random_orthogonal(int p, Rng& rng) {
  Matrix G(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) G(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < p; ++j) {
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

SymMatrix spd_with_spectrum(const Vector& eig, Rng& rng) {
  const int p = static_cast<int>(eig.size());
  Matrix Q = random_orthogonal(p, rng);
  Matrix M = Q * eig.asDiagonal() * Q.transpose();
  return SymMatrix{((M + M.transpose()) / 2.0).eval()};
}

// Unit-diagonal symmetric matrix whose worst row has dominance factor
// exactly alpha (min_i 1 / sum_{j != i} |corr_ij| = alpha).
Matrix dominant_correlation(int p, double alpha, Rng& rng) {
  Matrix E = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      E(i, j) = E(j, i) = rng.uniform(-1.0, 1.0);
    }
  }
  double worst = 0;
  for (int i = 0; i < p; ++i) {
    worst = std::max(worst, E.row(i).cwiseAbs().sum());
  }
  Matrix corr = Matrix::Identity(p, p);
  if (worst > 0) {
    corr += E / (alpha * worst);
  }
  return corr;
}

}  // namespace

SymMatrix gen_cov(const CovSpec& spec) {
  if (spec.p < 1) {
    throw DomainError(ErrorKind::InvalidSpec, "p must be >= 1");
  }
  if (!(spec.target_cond >= 1.0)) {
    throw DomainError(ErrorKind::InvalidSpec, "target_cond must be >= 1");
  }
  Rng rng(spec.seed);

  switch (spec.kind) {
    case CovKind::identity:
      return SymMatrix::identity(spec.p);

    case CovKind::spd_random: {
      if (spec.p == 1 && spec.target_cond > 1.0) {
        throw DomainError(ErrorKind::InvalidSpec,
                          "a 1x1 matrix cannot have target_cond > 1");
      }
      return spd_with_spectrum(log_spaced(spec.p, spec.target_cond), rng);
    }

    case CovKind::dominant_corr_with_scales: {
      if (!(spec.alpha > 1.0)) {
        throw DomainError(ErrorKind::InvalidSpec,
                          "dominance factor alpha must be > 1");
      }
      if (spec.p == 1 && spec.target_cond > 1.0) {
        throw DomainError(ErrorKind::InvalidSpec,
                          "a 1x1 matrix cannot have target_cond > 1");
      }
      Matrix corr = dominant_correlation(spec.p, spec.alpha, rng);
      Vector scales = log_spaced(spec.p, spec.target_cond);
      // Shuffle so the variance order is not tied to the coordinate order.
      for (int i = spec.p - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.index(i + 1));
        std::swap(scales[i], scales[j]);
      }
      Matrix out(spec.p, spec.p);
      for (int i = 0; i < spec.p; ++i) {
        for (int j = 0; j < spec.p; ++j) {
          out(i, j) = corr(i, j) * std::sqrt(scales[i] * scales[j]);
        }
      }
      return SymMatrix{std::move(out)};
    }

    case CovKind::strong_corr: {
      // Strong single-factor correlations (heterogeneous loadings, mixed
      // signs) with a variance spread, then a partially-to-overshot
      // diagonal renormalization: t = 0 keeps the raw variances, t = 1 is
      // the exact unit-diagonal scaling, t > 1 overshoots it.  Every t
      // shares the same correlation matrix, so for draws where the raw
      // variances sit on the good side the correlation matrix is worse
      // conditioned than the covariance itself.
      const int p = spec.p;
      Vector loading(p), scale(p);
      for (int i = 0; i < p; ++i) {
        const double b = rng.uniform(0.4, 0.97);
        loading[i] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * b;
        scale[i] = std::exp(rng.uniform(-1.2, 1.2));
      }
      const double t = rng.uniform(0.0, 2.0);
      Matrix out(p, p);
      for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
          const double c = i == j ? 1.0 : loading[i] * loading[j];
          out(i, j) = c * scale[i] * scale[j];
        }
      }
      Vector dt(p);
      for (int i = 0; i < p; ++i) dt[i] = std::pow(out(i, i), -0.5 * t);
      for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) out(i, j) *= dt[i] * dt[j];
      }
      return SymMatrix{((out + out.transpose()) / 2.0).eval()};
    }
  }
  throw DomainError(ErrorKind::InvalidSpec, "unknown covariance kind");
}

Matrix sample_rows(int n, const SymMatrix& Sigma, const Vector& mu,
                   uint64_t seed) {
  const int p = Sigma.dim();
  if (n < 1) {
    throw DomainError(ErrorKind::InvalidSpec, "need at least one row");
  }
  if (mu.size() != p) {
    throw DomainError(ErrorKind::DimensionMismatch,
                      "mean size does not match covariance dimension");
  }
  Matrix L = cholesky(Sigma);
  Rng rng(seed);
  Matrix G(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) G(i, j) = rng.normal();
  }
  Matrix X = G * L.transpose();
  X.rowwise() += mu.transpose();
  return X;
}

Matrix sample_rows_bounded(int n, const SymMatrix& Sigma, const Vector& mu,
                           uint64_t seed) {
  const int p = Sigma.dim();
  if (n < 1) {
    throw DomainError(ErrorKind::InvalidSpec, "need at least one row");
  }
  if (mu.size() != p) {
    throw DomainError(ErrorKind::DimensionMismatch,
                      "mean size does not match covariance dimension");
  }
  Matrix L = cholesky(Sigma);
  Rng rng(seed);
  const double half_width = std::sqrt(3.0);
  Matrix G(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      G(i, j) = rng.uniform(-half_width, half_width);
    }
  }
  Matrix X = G * L.transpose();
  X.rowwise() += mu.transpose();
  return X;
}

TrialResult concentration_trial(int n, const SymMatrix& Sigma, uint64_t seed) {
  const int p = Sigma.dim();
  if (n < p) {
    throw DomainError(ErrorKind::InvalidSpec,
                      "need at least p rows for a concentration trial");
  }
  CondReport pop_raw = cond_2(Sigma);
  CondReport pop_scaled = cond_2(corr_from_cov(Sigma).corr);

  uint64_t s = seed;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Matrix X = sample_rows(n, Sigma, Vector::Zero(p), s);
    Matrix gram = X.transpose() * X;
    SymMatrix G{((gram + gram.transpose()) / 2.0).eval()};

    bool ok = true;
    Vector dhat(p);
    for (int j = 0; j < p; ++j) {
      dhat[j] = G(j, j);  // raw column norm squared; any scalar divisor
                          // cancels in the condition ratios
      if (!(dhat[j] > 0)) ok = false;
    }
    if (ok) {
      try {
        CondReport raw = cond_2(G);
        CondReport scaled = cond_2(scale_sym(G, DiagScaling(dhat)));
        TrialResult r;
        r.n = n;
        r.p = p;
        r.kappa_raw = raw.kappa;
        r.kappa_scaled = scaled.kappa;
        r.gap = std::abs(raw.kappa / pop_raw.kappa -
                         scaled.kappa / pop_scaled.kappa);
        r.seed = s;
        return r;
      } catch (const DomainError&) {
        ok = false;  // singular Gram; retry with a derived seed
      }
    }
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
  }
  throw DomainError(ErrorKind::SingularSample,
                    "sample Gram matrix stayed rank deficient after retries");
}

std::vector<SweepRow> concentration_sweep(const SymMatrix& Sigma,
                                          const std::vector<int>& ns,
                                          int trials, uint64_t base_seed) {
  if (trials < 1) {
    throw DomainError(ErrorKind::InvalidSpec, "need at least one trial");
  }
  std::vector<SweepRow> rows;
  rows.reserve(ns.size());
  for (int n : ns) {
    std::vector<double> gaps;
    gaps.reserve(trials);
    for (int t = 0; t < trials; ++t) {
      gaps.push_back(
          concentration_trial(n, Sigma, base_seed + static_cast<uint64_t>(t))
              .gap);
    }
    std::sort(gaps.begin(), gaps.end());
    SweepRow row;
    row.n = n;
    const size_t m = gaps.size();
    row.median_gap = m % 2 == 1 ? gaps[m / 2]
                                : 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]);
    // Empirical 90th percentile: smallest value with rank >= ceil(0.9 m).
    size_t k = static_cast<size_t>(std::ceil(0.9 * static_cast<double>(m)));
    if (k < 1) k = 1;
    row.q90_gap = gaps[k - 1];
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "n,median_gap,q90_gap\n";
  out << std::setprecision(17);
  for (const SweepRow& r : rows) {
    out << r.n << "," << r.median_gap << "," << r.q90_gap << "\n";
  }
}

}  // namespace dpx
