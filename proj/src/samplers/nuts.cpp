#include <algorithm>
#include <cmath>
#include <deque>

#include "mcbench/samplers.hpp"

namespace mcbench {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

bool eval_gradient(Target& t, LeapfrogState& s) {
  try {
    s.log_density = t.log_density_gradient(s.q, s.grad);
  } catch (const EvaluationError&) {
    return false;
  }
  return std::isfinite(s.log_density) && s.grad.allFinite();
}

double kinetic(const VectorXd& r, const VectorXd& inv_mass) {
  return 0.5 * (r.array().square() * inv_mass.array()).sum();
}

double hamiltonian(const LeapfrogState& s, const VectorXd& inv_mass) {
  return -s.log_density + kinetic(s.r, inv_mass);
}

// Edge of a trajectory: its state plus momentum and velocity M^-1 r.
struct Edge {
  LeapfrogState s;
  VectorXd p_sharp;
};

struct Subtree {
  Edge beg;  // adjacent to the existing trajectory
  Edge end;  // outermost point
  VectorXd rho;
  LeapfrogState proposal;
  double log_sum_w = kNegInf;
  double sum_metro = 0.0;
  int n_leapfrog = 0;
  bool valid = true;
  bool divergent = false;
};

bool no_u_turn(const VectorXd& p_sharp_a, const VectorXd& p_sharp_b, const VectorXd& rho) {
  return p_sharp_a.dot(rho) > 0.0 && p_sharp_b.dot(rho) > 0.0;
}

class NutsKernel {
 public:
  NutsKernel(Target& t, const NUTSConfig& cfg, prob::Rng& rng) : t_(t), cfg_(cfg), rng_(rng) {}

  VectorXd inv_mass;
  double eps = 1.0;

  struct Result {
    LeapfrogState next;
    int n_leapfrog = 0;
    double accept_stat = 0.0;
    bool divergent = false;
  };

  VectorXd draw_momentum() {
    std::normal_distribution<double> n01;
    VectorXd r(inv_mass.size());
    for (Index i = 0; i < r.size(); ++i) r(i) = n01(rng_) / std::sqrt(inv_mass(i));
    return r;
  }

  Result transition(LeapfrogState z) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    z.r = draw_momentum();
    const double H0 = hamiltonian(z, inv_mass);

    Edge minus{z, inv_mass.cwiseProduct(z.r)};
    Edge plus = minus;
    VectorXd rho = z.r;
    double log_sum_w = 0.0;
    LeapfrogState sample = z;

    Result res;
    double sum_metro = 0.0;
    for (int depth = 0; depth < cfg_.max_depth; ++depth) {
      const int dir = unif(rng_) > 0.5 ? 1 : -1;
      Edge& near = dir > 0 ? plus : minus;
      Edge& far = dir > 0 ? minus : plus;
      Subtree sub = build_tree(near.s, dir, depth, H0);
      res.n_leapfrog += sub.n_leapfrog;
      sum_metro += sub.sum_metro;
      if (!sub.valid) {
        res.divergent = sub.divergent;
        break;
      }
      // Biased progressive sampling favours the new subtree.
      if (sub.log_sum_w > log_sum_w || unif(rng_) < std::exp(sub.log_sum_w - log_sum_w)) {
        sample = sub.proposal;
      }
      log_sum_w = log_sum_exp(log_sum_w, sub.log_sum_w);

      const VectorXd rho_old = rho;
      rho = rho_old + sub.rho;
      bool go = no_u_turn(far.p_sharp, sub.end.p_sharp, rho);
      go = go && no_u_turn(far.p_sharp, sub.beg.p_sharp, rho_old + sub.beg.s.r);
      go = go && no_u_turn(near.p_sharp, sub.end.p_sharp, sub.rho + near.s.r);
      near = sub.end;
      if (!go) break;
    }
    res.next = sample;
    res.accept_stat = res.n_leapfrog > 0 ? sum_metro / res.n_leapfrog : 0.0;
    return res;
  }

 private:
  Subtree build_tree(const LeapfrogState& from, int dir, int depth, double H0) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Subtree out;
    if (depth == 0) {
      LeapfrogState s = from;
      out.n_leapfrog = 1;
      const bool ok = leapfrog(t_, s, dir * eps, 1, inv_mass);
      double H = ok ? hamiltonian(s, inv_mass) : prob::kInf;
      if (std::isnan(H)) H = prob::kInf;
      if (!ok || H - H0 > cfg_.max_energy_error) {
        out.valid = false;
        out.divergent = true;
        return out;
      }
      const double dH = H0 - H;
      out.log_sum_w = dH;
      out.sum_metro = dH > 0.0 ? 1.0 : std::exp(dH);
      out.beg = Edge{s, inv_mass.cwiseProduct(s.r)};
      out.end = out.beg;
      out.rho = s.r;
      out.proposal = s;
      return out;
    }
    Subtree init = build_tree(from, dir, depth - 1, H0);
    if (!init.valid) return init;
    Subtree fin = build_tree(init.end.s, dir, depth - 1, H0);
    init.n_leapfrog += fin.n_leapfrog;
    init.sum_metro += fin.sum_metro;
    if (!fin.valid) {
      init.valid = false;
      init.divergent = fin.divergent;
      return init;
    }
    const double lsw = log_sum_exp(init.log_sum_w, fin.log_sum_w);
    if (std::log(unif(rng_)) < fin.log_sum_w - lsw) init.proposal = fin.proposal;
    init.log_sum_w = lsw;

    const VectorXd rho = init.rho + fin.rho;
    bool go = no_u_turn(init.beg.p_sharp, fin.end.p_sharp, rho);
    go = go && no_u_turn(init.beg.p_sharp, fin.beg.p_sharp, init.rho + fin.beg.s.r);
    go = go && no_u_turn(init.end.p_sharp, fin.end.p_sharp, fin.rho + init.end.s.r);
    init.rho = rho;
    init.end = fin.end;
    init.valid = go;
    return init;
  }

  Target& t_;
  const NUTSConfig& cfg_;
  prob::Rng& rng_;
};

// Doubles or halves eps until a single leapfrog step crosses acceptance 0.8.
double find_step_size(Target& t, NutsKernel& k, const LeapfrogState& z0, double eps) {
  LeapfrogState z = z0;
  z.r = k.draw_momentum();
  double H0 = hamiltonian(z, k.inv_mass);
  bool ok = leapfrog(t, z, eps, 1, k.inv_mass);
  double dH = ok ? H0 - hamiltonian(z, k.inv_mass) : kNegInf;
  const int direction = dH > std::log(0.8) ? 1 : -1;
  for (int it = 0; it < 100; ++it) {
    z = z0;
    z.r = k.draw_momentum();
    H0 = hamiltonian(z, k.inv_mass);
    ok = leapfrog(t, z, eps, 1, k.inv_mass);
    dH = ok ? H0 - hamiltonian(z, k.inv_mass) : kNegInf;
    if (std::isnan(dH)) dH = kNegInf;
    if (direction == 1 && !(dH > std::log(0.8))) break;
    if (direction == -1 && !(dH < std::log(0.8))) break;
    eps = direction == 1 ? 2.0 * eps : 0.5 * eps;
    if (eps > 1e7) throw ConvergenceError("nuts: posterior appears improper (step size diverged)");
    if (eps < 1e-300) throw ConvergenceError("nuts: no usable step size");
  }
  return eps;
}

struct DualAveraging {
  double mu = 0.0, s_bar = 0.0, x_bar = 0.0;
  double counter = 0.0;
  void restart(double eps) {
    mu = std::log(10.0 * eps);
    s_bar = x_bar = counter = 0.0;
  }
  double update(const NUTSConfig& c, double accept_stat) {
    counter += 1.0;
    const double eta = 1.0 / (counter + c.t0);
    s_bar = (1.0 - eta) * s_bar + eta * (c.delta - accept_stat);
    const double x = mu - s_bar * std::sqrt(counter) / c.gamma;
    const double w = std::pow(counter, -c.kappa);
    x_bar = (1.0 - w) * x_bar + w * x;
    return std::exp(x);
  }
  double final_step() const { return std::exp(x_bar); }
};

// Warm-up schedule for the diagonal mass matrix: fast initial buffer, doubling
// slow windows, fast terminal buffer.
struct Windows {
  std::size_t init = 75, term = 50, base = 25;
  std::vector<std::size_t> ends;  // iteration index after which a window closes

  Windows(std::size_t n_adapt, bool enabled) {
    if (!enabled || n_adapt < 20) return;
    if (init + term + base > n_adapt) {
      init = static_cast<std::size_t>(0.15 * n_adapt);
      term = static_cast<std::size_t>(0.1 * n_adapt);
      base = n_adapt - init - term;
    }
    const std::size_t slow_end = n_adapt - term;
    std::size_t start = init;
    std::size_t size = base;
    while (start < slow_end) {
      std::size_t stop = start + size;
      if (stop + 2 * size > slow_end) stop = slow_end;
      ends.push_back(stop);
      start = stop;
      size *= 2;
    }
  }
};

}  // namespace

bool leapfrog(Target& target, LeapfrogState& s, double eps, int L, const VectorXd& inv_mass) {
  for (int l = 0; l < L; ++l) {
    s.r += 0.5 * eps * s.grad;
    s.q += eps * inv_mass.cwiseProduct(s.r);
    if (!eval_gradient(target, s)) return false;
    s.r += 0.5 * eps * s.grad;
  }
  return true;
}

std::pair<VectorXd, VectorXd> leapfrog(Target& target, const VectorXd& q, const VectorXd& r,
                                       double eps, int L) {
  LeapfrogState s{q, r, VectorXd(), 0.0};
  if (!eval_gradient(target, s)) throw EvaluationError("leapfrog: non-finite gradient at the start");
  if (!leapfrog(target, s, eps, L, VectorXd::Ones(q.size()))) {
    throw EvaluationError("leapfrog: divergent trajectory");
  }
  return {s.q, s.r};
}

std::size_t nuts_burn_in(std::size_t n_samples) { return std::min<std::size_t>(n_samples / 2, 1000); }

Chain nuts_run(Target& target, const NUTSConfig& cfg, std::size_t n_samples, prob::Rng& rng) {
  if (!target.has_gradient()) throw ConfigError("nuts: target has no gradient");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("nuts: delta must lie in (0, 1)");
  if (cfg.max_depth < 1) throw ConfigError("nuts: max_depth must be >= 1");
  if (n_samples < 2) throw ConfigError("nuts: need at least 2 samples");
  const Index p = target.dim();
  const std::size_t n_adapt = cfg.n_adapt == 0 ? nuts_burn_in(n_samples) : cfg.n_adapt;

  NutsKernel kernel(target, cfg, rng);
  kernel.inv_mass = VectorXd::Ones(p);

  Chain chain;
  chain.sampler = "nuts";
  chain.names = target.names();
  chain.resize(n_samples, p, true);
  chain.burn_in = std::min(n_adapt, n_samples - 1);

  const std::uint64_t sc0 = target.short_circuits();
  std::uint64_t evals = 0;  // evaluations attributed to the chain
  std::uint64_t leapfrogs = 0;
  auto spend_adapt = [&](auto&& fn) {
    const std::uint64_t e = target.evals();
    auto r = fn();
    chain.adapt_evals += target.evals() - e;
    return r;
  };

  LeapfrogState z;
  z.q = cfg.start ? *cfg.start : target.initial_point(rng);
  {
    const std::uint64_t e = target.evals();
    if (!eval_gradient(target, z)) throw EvaluationError("nuts: starting point has no finite gradient");
    evals += target.evals() - e;
  }
  chain.states.row(0) = target.to_original(z.q).transpose();
  chain.log_post[0] = z.log_density;
  chain.cum_evals[0] = evals;
  chain.cum_leapfrog[0] = 0;

  kernel.eps = cfg.initial_step > 0.0
                   ? cfg.initial_step
                   : spend_adapt([&] { return find_step_size(target, kernel, z, 1.0); });
  DualAveraging da;
  da.restart(kernel.eps);

  const Windows windows(n_adapt, cfg.adapt_mass);
  std::size_t next_window = 0;
  std::size_t window_start = windows.init;
  VectorXd w_mean = VectorXd::Zero(p), w_m2 = VectorXd::Zero(p);
  std::size_t w_count = 0;

  std::deque<int> recent_div;
  int recent_div_sum = 0;
  double accept_sum = 0.0;
  std::size_t accept_n = 0;

  for (std::size_t n = 1; n < n_samples; ++n) {
    const bool adapting = n <= n_adapt;
    // The chain re-evaluates the current state each iteration, so every step
    // costs one evaluation plus one per leapfrog step.
    {
      const std::uint64_t e = target.evals();
      if (!eval_gradient(target, z)) throw EvaluationError("nuts: current state lost its gradient");
      evals += target.evals() - e;
    }
    const std::uint64_t e = target.evals();
    const auto res = kernel.transition(z);
    evals += target.evals() - e;
    leapfrogs += static_cast<std::uint64_t>(res.n_leapfrog);
    z = res.next;
    if (res.divergent) ++chain.divergences;

    chain.states.row(static_cast<Index>(n)) = target.to_original(z.q).transpose();
    chain.log_post[n] = z.log_density;
    chain.cum_evals[n] = evals;
    chain.cum_leapfrog[n] = leapfrogs;

    if (adapting) {
      kernel.eps = da.update(cfg, res.accept_stat);
      const std::size_t it = n - 1;  // adaptation iteration index
      if (next_window < windows.ends.size() && it >= window_start) {
        ++w_count;
        const VectorXd d = z.q - w_mean;
        w_mean += d / static_cast<double>(w_count);
        w_m2 += d.cwiseProduct(z.q - w_mean);
        if (it + 1 == windows.ends[next_window]) {
          const double c = static_cast<double>(w_count);
          VectorXd var = w_m2 / std::max(c - 1.0, 1.0);
          var = (c / (c + 5.0)) * var.array() + 1e-3 * (5.0 / (c + 5.0));
          kernel.inv_mass = var;
          kernel.eps = spend_adapt([&] { return find_step_size(target, kernel, z, kernel.eps); });
          da.restart(kernel.eps);
          w_mean.setZero();
          w_m2.setZero();
          w_count = 0;
          window_start = windows.ends[next_window];
          ++next_window;
        }
      }
      if (n == n_adapt) kernel.eps = da.final_step();
    } else {
      accept_sum += res.accept_stat;
      ++accept_n;
      recent_div.push_back(res.divergent ? 1 : 0);
      recent_div_sum += recent_div.back();
      if (recent_div.size() > 100) {
        recent_div_sum -= recent_div.front();
        recent_div.pop_front();
      }
      if (recent_div.size() == 100 && recent_div_sum > 50) {
        throw ConvergenceError("nuts: more than half of the last 100 transitions diverged at step size " +
                               std::to_string(kernel.eps));
      }
    }
  }
  chain.accept_rate = accept_n > 0 ? accept_sum / static_cast<double>(accept_n) : 0.0;
  chain.step_size = kernel.eps;
  chain.short_circuits = target.short_circuits() - sc0;
  return chain;
}

}  // namespace mcbench
