#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

#include "mcbench/samplers.hpp"

namespace mcbench {

namespace {

double safe_log_density(Target& t, const VectorXd& x) {
  try {
    return t.log_density(x);
  } catch (const EvaluationError&) {
    return -prob::kInf;
  }
}

VectorXd standard_normal(Index p, prob::Rng& rng) {
  std::normal_distribution<double> n01;
  VectorXd z(p);
  for (Index i = 0; i < p; ++i) z(i) = n01(rng);
  return z;
}

MatrixXd cholesky_or_throw(const MatrixXd& cov, Index p) {
  if (cov.rows() != p || cov.cols() != p) throw ConfigError("proposal covariance has the wrong shape");
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success || !cov.allFinite()) {
    throw ConfigError("proposal covariance is not symmetric positive definite");
  }
  return llt.matrixL();
}

}  // namespace

bool metropolis_accept(double log_ratio, double u) {
  if (std::isnan(log_ratio) || log_ratio == -std::numeric_limits<double>::infinity()) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(u) <= log_ratio;
}

Chain mh_run(Target& target, const MHConfig& cfg, prob::Rng& rng) {
  const Index p = target.dim();
  if (cfg.n_samples < 1) throw ConfigError("mh: n_samples must be >= 1");
  const MatrixXd L = cholesky_or_throw(cfg.proposal_cov, p);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const std::uint64_t e0 = target.evals();
  const std::uint64_t s0 = target.short_circuits();
  Chain chain;
  chain.sampler = "mh";
  chain.names = target.names();
  chain.resize(cfg.n_samples, p);

  VectorXd x = cfg.start ? *cfg.start : target.initial_point(rng);
  double lx = safe_log_density(target, x);
  std::size_t accepted = 0;
  for (std::size_t n = 0; n < cfg.n_samples; ++n) {
    if (n > 0) {
      const VectorXd y = x + L * standard_normal(p, rng);
      const double ly = safe_log_density(target, y);
      if (std::isfinite(ly) && metropolis_accept(ly - lx, unif(rng))) {
        x = y;
        lx = ly;
        ++accepted;
      }
    }
    chain.states.row(static_cast<Index>(n)) = target.to_original(x).transpose();
    chain.log_post[n] = lx;
    chain.cum_evals[n] = target.evals() - e0;
  }
  chain.short_circuits = target.short_circuits() - s0;
  chain.accept_rate = cfg.n_samples > 1 ? double(accepted) / double(cfg.n_samples - 1) : 0.0;
  return chain;
}

MHAdaptation mh_adapt(Target& target, const MHAdaptConfig& cfg, prob::Rng& rng) {
  const Index p = target.dim();
  const std::size_t window = static_cast<std::size_t>(10 * p);
  if (cfg.n_adapt < static_cast<std::size_t>(100 * p)) {
    throw ConfigError("mh_adapt: need at least 100p adaptation steps");
  }
  const double sd = 2.38 * 2.38 / static_cast<double>(p);
  const MatrixXd eye = MatrixXd::Identity(p, p);
  MatrixXd cov = cfg.initial_cov ? *cfg.initial_cov : MatrixXd(cfg.initial_scale * cfg.initial_scale * eye);
  MatrixXd L = cholesky_or_throw(cov, p);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const std::uint64_t e0 = target.evals();
  VectorXd x = cfg.start ? *cfg.start : target.initial_point(rng);
  double lx = safe_log_density(target, x);

  // Running mean and scatter of the history (Welford).
  VectorXd mean = x;
  MatrixXd scatter = MatrixXd::Zero(p, p);
  std::size_t count = 1;
  std::size_t accepted = 0;

  for (std::size_t n = 1; n < cfg.n_adapt; ++n) {
    const VectorXd y = x + L * standard_normal(p, rng);
    const double ly = safe_log_density(target, y);
    if (std::isfinite(ly) && metropolis_accept(ly - lx, unif(rng))) {
      x = y;
      lx = ly;
      ++accepted;
    }
    ++count;
    const VectorXd d = x - mean;
    mean += d / static_cast<double>(count);
    scatter += d * (x - mean).transpose();

    if (count > window) {
      MatrixXd hist = scatter / static_cast<double>(count - 1);
      hist = 0.5 * (hist + hist.transpose());
      cov = sd * hist + sd * cfg.epsilon * eye;
      Eigen::LLT<MatrixXd> llt(cov);
      if (llt.info() == Eigen::Success) L = llt.matrixL();
    }
  }

  MHAdaptation out;
  out.proposal_cov = cov;
  out.last_state = x;
  out.evals = target.evals() - e0;
  out.accept_rate = double(accepted) / double(cfg.n_adapt - 1);
  return out;
}

}  // namespace mcbench
