#include <cmath>

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

}  // namespace

double stretch_from_uniform(double a, double u) {
  if (!(a > 1.0)) throw ConfigError("stretch move: a must be > 1");
  const double s = std::sqrt(a);
  const double v = u * (s - 1.0 / s) + 1.0 / s;
  return v * v;
}

double stretch_draw(double a, prob::Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return stretch_from_uniform(a, unif(rng));
}

VectorXd stretch_propose(const VectorXd& xk, const VectorXd& xj, double z) {
  return z * xk + (1.0 - z) * xj;
}

std::vector<Chain> aism_run(Target& target, const AISMConfig& cfg, prob::Rng& rng) {
  const Index p = target.dim();
  const std::size_t K = cfg.n_walkers == 0 ? static_cast<std::size_t>(4 * p) : cfg.n_walkers;
  if (!(cfg.a > 1.0)) throw ConfigError("aism: a must be > 1");
  if (K < static_cast<std::size_t>(p + 2)) throw ConfigError("aism: need at least p + 2 walkers");
  if (cfg.n_samples == 0 || cfg.n_samples % K != 0) {
    throw ConfigError("aism: sample size " + std::to_string(cfg.n_samples) +
                      " is not divisible by the number of walkers " + std::to_string(K));
  }
  const std::size_t steps = cfg.n_samples / K;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, K - 2);

  std::vector<VectorXd> x(K);
  std::vector<double> lx(K);
  std::vector<Chain> chains(K);
  std::vector<std::uint64_t> own(K, 0);
  std::vector<std::uint64_t> own_sc(K, 0);
  std::vector<std::size_t> accepted(K, 0);
  const auto names = target.names();

  auto evaluate = [&](std::size_t k, const VectorXd& y) {
    const std::uint64_t e = target.evals();
    const std::uint64_t s = target.short_circuits();
    const double l = safe_log_density(target, y);
    own[k] += target.evals() - e;
    own_sc[k] += target.short_circuits() - s;
    return l;
  };
  auto record = [&](std::size_t k, std::size_t n) {
    chains[k].states.row(static_cast<Index>(n)) = target.to_original(x[k]).transpose();
    chains[k].log_post[n] = lx[k];
    chains[k].cum_evals[n] = own[k];
  };

  for (std::size_t k = 0; k < K; ++k) {
    chains[k].sampler = "aism";
    chains[k].names = names;
    chains[k].resize(steps, p);
    x[k] = cfg.start ? VectorXd(cfg.start->row(static_cast<Index>(k)).transpose()) : target.initial_point(rng);
    lx[k] = evaluate(k, x[k]);
    record(k, 0);
  }

  for (std::size_t n = 1; n < steps; ++n) {
    for (std::size_t k = 0; k < K; ++k) {
      std::size_t j = pick(rng);
      if (j >= k) ++j;
      const double z = stretch_draw(cfg.a, rng);
      const VectorXd y = stretch_propose(x[k], x[j], z);
      const double ly = evaluate(k, y);
      if (std::isfinite(ly)) {
        const double log_ratio = static_cast<double>(p - 1) * std::log(z) + ly - lx[k];
        if (metropolis_accept(log_ratio, unif(rng))) {
          x[k] = y;
          lx[k] = ly;
          ++accepted[k];
        }
      }
      record(k, n);
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    chains[k].short_circuits = own_sc[k];
    chains[k].accept_rate = steps > 1 ? double(accepted[k]) / double(steps - 1) : 0.0;
  }
  return chains;
}

Chain ensemble_average(const std::vector<Chain>& walkers) {
  if (walkers.empty()) throw InputError("ensemble_average: no walkers");
  const std::size_t n = walkers.front().size();
  const Index p = walkers.front().dim();
  for (const auto& w : walkers) {
    if (w.size() != n || w.dim() != p) throw InputError("ensemble_average: walker chains are ragged");
  }
  const double K = static_cast<double>(walkers.size());
  Chain out;
  out.sampler = walkers.front().sampler;
  out.seed = walkers.front().seed;
  out.names = walkers.front().names;
  out.resize(n, p);
  out.states.setZero();
  double acc = 0.0;
  for (const auto& w : walkers) {
    out.states += w.states;
    for (std::size_t i = 0; i < n; ++i) {
      out.log_post[i] += w.log_post[i] / K;
      out.cum_evals[i] += w.cum_evals[i];
    }
    out.short_circuits += w.short_circuits;
    acc += w.accept_rate;
  }
  out.states /= K;
  out.accept_rate = acc / K;
  return out;
}

}  // namespace mcbench
