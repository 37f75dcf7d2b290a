#pragma once

// Metropolis-Hastings (with adaptive-Metropolis calibration), the affine
// invariant stretch-move ensemble, and the No-U-Turn sampler. All three emit
// Chains with states in the original parameter space and cumulative
// model-evaluation counts per step.

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcbench/inference.hpp"

namespace mcbench {

struct Chain {
  std::string sampler;
  std::uint64_t seed = 0;
  std::vector<std::string> names;
  MatrixXd states;                       // N x p, original space
  std::vector<double> log_post;          // log target density per step
  std::vector<std::uint64_t> cum_evals;  // model evaluations up to and including the step
  std::vector<std::uint64_t> cum_leapfrog;  // NUTS only
  std::size_t burn_in = 0;
  std::uint64_t adapt_evals = 0;     // calibration / warm-up evaluations outside cum_evals
  std::uint64_t short_circuits = 0;  // out-of-support proposals that skipped the model
  std::uint64_t divergences = 0;
  double accept_rate = 0.0;
  double step_size = 0.0;            // NUTS: adapted step size

  std::size_t size() const { return static_cast<std::size_t>(states.rows()); }
  Index dim() const { return states.cols(); }

  void resize(std::size_t n, Index p, bool leapfrog = false);
  /// Throws InputError on broken invariants.
  void validate() const;
  /// First n steps; burn-in is kept if it fits.
  Chain prefix(std::size_t n) const;
  /// Rows from the burn-in onward.
  MatrixXd trimmed() const;
  /// Evaluations spent after the burn-in.
  std::uint64_t evals_after_burn_in() const;
};

// ---------------------------------------------------------------------------
// Metropolis-Hastings

struct MHConfig {
  MatrixXd proposal_cov;  // in the target's sampling space
  std::size_t n_samples = 0;
  std::optional<VectorXd> start;  // sampling-space start; prior draw if unset
};

/// Accept with probability min(1, exp(log_ratio)); equality accepts.
bool metropolis_accept(double log_ratio, double u);

Chain mh_run(Target& target, const MHConfig& cfg, prob::Rng& rng);

struct MHAdaptation {
  MatrixXd proposal_cov;
  VectorXd last_state;
  std::uint64_t evals = 0;
  double accept_rate = 0.0;
};

struct MHAdaptConfig {
  std::size_t n_adapt = 0;
  double epsilon = 1e-10;
  /// Proposal covariance for the initial window; a scaled identity if unset.
  std::optional<MatrixXd> initial_cov;
  double initial_scale = 0.1;  // standard deviation of the default initial window proposal
  std::optional<VectorXd> start;
};

/// Adaptive Metropolis: after an initial 10p-step window the proposal is
/// s_d Cov(history) + s_d eps I with s_d = 2.38^2 / p, refreshed every step.
MHAdaptation mh_adapt(Target& target, const MHAdaptConfig& cfg, prob::Rng& rng);

// ---------------------------------------------------------------------------
// Affine invariant stretch move

struct AISMConfig {
  std::size_t n_walkers = 0;  // 0 selects 4p
  double a = 2.0;
  std::size_t n_samples = 0;  // total over all walkers
  std::optional<MatrixXd> start;  // K x p sampling-space starts
};

/// z from g(z) ~ 1/sqrt(z) on [1/a, a] by inverse CDF of u in [0, 1].
double stretch_from_uniform(double a, double u);
double stretch_draw(double a, prob::Rng& rng);

/// z x_k + (1 - z) x_j.
VectorXd stretch_propose(const VectorXd& xk, const VectorXd& xj, double z);

/// One chain per walker, each of length N / K. cum_evals counts the walker's own evaluations.
std::vector<Chain> aism_run(Target& target, const AISMConfig& cfg, prob::Rng& rng);

/// Step-wise mean over walkers. cum_evals sums over walkers.
Chain ensemble_average(const std::vector<Chain>& walkers);

// ---------------------------------------------------------------------------
// No-U-Turn sampler

struct NUTSConfig {
  double delta = 0.8;
  int max_depth = 10;
  std::size_t n_adapt = 0;  // 0 selects min(N/2, 1000)
  bool adapt_mass = true;   // diagonal mass matrix from windowed warm-up variances
  double gamma = 0.05;
  double t0 = 10.0;
  double kappa = 0.75;
  double max_energy_error = 1000.0;
  std::optional<VectorXd> start;
  double initial_step = 0.0;  // 0 runs the doubling heuristic
};

struct LeapfrogState {
  VectorXd q;
  VectorXd r;
  VectorXd grad;  // gradient of the log density at q
  double log_density = 0.0;
};

/// L leapfrog steps for H = -log pi(q) + r^T M^-1 r / 2 with diagonal inverse mass
/// `inv_mass`. Gradient evaluations: one per step. Returns false if the trajectory
/// left the support or produced non-finite values.
bool leapfrog(Target& target, LeapfrogState& s, double eps, int L, const VectorXd& inv_mass);

/// Convenience form (identity mass) that also evaluates the starting gradient.
std::pair<VectorXd, VectorXd> leapfrog(Target& target, const VectorXd& q, const VectorXd& r,
                                       double eps, int L);

Chain nuts_run(Target& target, const NUTSConfig& cfg, std::size_t n_samples, prob::Rng& rng);

/// Burn-in NUTS applies to itself.
std::size_t nuts_burn_in(std::size_t n_samples);

}  // namespace mcbench
