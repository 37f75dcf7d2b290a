#pragma once

// Convergence and efficiency diagnostics on chains in the original space:
// autocorrelation and effective sample size, Geweke burn-in search,
// Gelman-Rubin, multi-chain ESS, and the binned KL divergence against a
// reference posterior on a rectilinear mesh.

#include <Eigen/Core>

#include <functional>
#include <vector>

#include "mcbench/samplers.hpp"

namespace mcbench::diag {

/// Lag-t autocorrelation: lag covariance normalised by (N - t), over the variance.
/// Throws DegenerateError for a constant series.
double autocorrelation(const VectorXd& x, Index t);

/// Autocorrelations for lags 0..max_lag.
VectorXd autocorrelations(const VectorXd& x, Index max_lag);

/// Sum of rho_1..rho_T where T is the first lag with rho_{T+1} + rho_{T+2} < 0.
/// `lag_cap` bounds T (default N/2).
double autocorrelation_sum(const VectorXd& x, Index lag_cap = -1);

/// N / (1 + 2 sum rho_t); 1 for a degenerate series.
double effective_sample_size(const VectorXd& x, Index lag_cap = -1);

/// Per-parameter ESS of one chain (rows = steps).
VectorXd effective_sample_size(const MatrixXd& states);

/// Geweke two-sided p-values comparing the first 10 % and last 50 % of the
/// chain after dropping B steps.
VectorXd geweke_p(const MatrixXd& states, std::size_t B);

struct BurnIn {
  std::size_t B = 0;
  VectorXd p;  // p-values at the accepted B
};

/// Smallest B in steps of 10 with min_i p_i(B) >= eps_p. Throws ConvergenceError
/// when no B below N/2 qualifies.
BurnIn find_burn_in(const MatrixXd& states, double eps_p = 0.05, std::size_t step = 10);

/// Sets chain.burn_in (NUTS keeps its own warm-up length) and returns it.
std::size_t remove_burnin(Chain& chain);

/// Remark-form Gelman-Rubin factor per parameter. `within_scale` multiplies the
/// within-chain variances (the walker count for ensemble-averaged chains).
VectorXd gelman_rubin(const std::vector<MatrixXd>& chains, double within_scale = 1.0);

/// Multi-chain ESS with variogram-based autocorrelation; `within_scale` as above.
VectorXd multichain_ess(const std::vector<MatrixXd>& chains, double within_scale = 1.0);

// ---------------------------------------------------------------------------
// Reference mesh and binned distributions

struct ReferenceMesh {
  VectorXd lower;          // per-dimension lower edge
  VectorXd width;          // bin width h_i
  std::vector<int> nbins;  // bins per dimension

  Index dim() const { return lower.size(); }
  std::size_t total() const;
  double volume() const { return width.prod(); }
  /// Edges of dimension i, nbins[i] + 1 values.
  VectorXd edges(Index i) const;
  VectorXd centroid(std::size_t flat) const;
  /// Flat index of the bin containing x, or -1 outside the mesh (bins are half-open).
  long locate(const VectorXd& x) const;
};

/// Bins [mu - z sigma + e h, mu - z sigma + (e + 1) h), h = 2 z sigma / nbins.
/// A single bin count applies to every dimension.
ReferenceMesh make_mesh(const VectorXd& mu, const VectorXd& sigma, double z, const std::vector<int>& nbins);

/// Mesh from the pooled mean and standard deviation of the given (trimmed) chains.
ReferenceMesh build_reference_mesh(const std::vector<MatrixXd>& chains, double z, const std::vector<int>& nbins);

struct BinnedDistribution {
  enum class Kind { Sample, Reference };
  ReferenceMesh mesh;
  VectorXd probs;
  Kind kind = Kind::Sample;
  std::size_t n_inside = 0;
  std::size_t n_outside = 0;
};

BinnedDistribution bin_sample(const ReferenceMesh& mesh, const MatrixXd& samples);

/// Centroid rule with exp(log pi - max). `threads` > 1 fans the centroid
/// evaluations out over blocks; `log_density` must then be thread-safe.
BinnedDistribution bin_reference(const ReferenceMesh& mesh,
                                 const std::function<double(const VectorXd&)>& log_density,
                                 unsigned threads = 1);

/// sum P log(P / Q). Throws DegenerateError where Q = 0 but P > 0.
double kl_divergence(const BinnedDistribution& P, const BinnedDistribution& Q);

/// Fraction of bins with at least one sample.
double coverage(const BinnedDistribution& P);

}  // namespace mcbench::diag
