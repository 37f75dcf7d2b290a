#include "mcbench/harness/campaign.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "mcbench/diagnostics.hpp"

namespace mcbench::harness {

namespace fs = std::filesystem;

std::vector<std::size_t> default_prefixes(std::size_t n_max) {
  std::vector<std::size_t> out;
  for (std::size_t n : {1000, 3000, 10000, 30000, 100000}) {
    if (n < n_max) out.push_back(n);
  }
  out.push_back(n_max);
  return out;
}

std::string resolve_output(const std::string& output) {
  const char* root = std::getenv("SAMPLERBENCH_OUTPUT_ROOT");
  if (root == nullptr || *root == '\0' || fs::path(output).is_absolute()) return output;
  return (fs::path(root) / output).lexically_normal().string();
}

namespace {

// Prior spread in the sampling space sets the scale of the first AM window.
MatrixXd prior_scaled_cov(const PosteriorTarget& t, double scale, prob::Rng& rng) {
  const Index p = t.dim();
  const int n = 2000;
  MatrixXd u(n, p);
  for (int i = 0; i < n; ++i) u.row(i) = t.prior().to_unconstrained(t.prior().draw(rng)).transpose();
  const MatrixXd c = u.rowwise() - u.colwise().mean();
  const VectorXd var = (c.array().square().colwise().sum() / (n - 1)).transpose();
  return MatrixXd((scale * scale * var).asDiagonal());
}

}  // namespace

StoredChain run_chain(const RunConfig& cfg, const System& sys, const std::string& sampler, std::size_t m) {
  StoredChain out;
  ChainMeta& meta = out.meta;
  meta.system = sys.name;
  meta.sampler = sampler;
  meta.seed = cfg.chain_seed(m);
  meta.chain_index = m;
  meta.config_digest = cfg.digest;

  prob::Rng rng(meta.seed);
  PosteriorTarget target = sys.target(Space::Unconstrained);
  const Index p = target.dim();
  try {
    if (sampler == "mh") {
      MHAdaptConfig ac;
      ac.n_adapt = cfg.mh_adapt ? cfg.mh_adapt : std::max<std::size_t>(static_cast<std::size_t>(100 * p), 5000);
      ac.epsilon = cfg.mh_epsilon;
      ac.initial_cov = prior_scaled_cov(target, cfg.mh_initial_scale, rng);
      const MHAdaptation a = mh_adapt(target, ac, rng);
      MHConfig mc;
      mc.proposal_cov = a.proposal_cov;
      mc.n_samples = cfg.N;
      mc.start = a.last_state;
      Chain c = mh_run(target, mc, rng);
      c.adapt_evals = a.evals;
      out.walkers = {std::move(c)};
    } else if (sampler == "aism") {
      AISMConfig ac;
      ac.n_walkers = cfg.aism_walkers;
      ac.a = cfg.aism_a;
      // Rounded up to whole ensemble steps.
      const std::size_t K = cfg.aism_walkers ? cfg.aism_walkers : static_cast<std::size_t>(4 * p);
      ac.n_samples = (cfg.N + K - 1) / K * K;
      out.walkers = aism_run(target, ac, rng);
    } else {
      NUTSConfig nc;
      nc.delta = cfg.nuts_delta;
      nc.max_depth = cfg.nuts_max_depth;
      nc.adapt_mass = cfg.nuts_adapt_mass;
      out.walkers = {nuts_run(target, nc, cfg.N, rng)};
    }
  } catch (const std::exception& e) {
    meta.status = "failed";
    meta.message = e.what();
    out.walkers.clear();
    return out;
  }

  for (auto& w : out.walkers) w.seed = meta.seed;
  const Chain& w0 = out.walkers.front();
  meta.n_walkers = out.walkers.size();
  meta.adapt_evals = w0.adapt_evals;
  meta.divergences = w0.divergences;
  meta.step_size = w0.step_size;
  meta.short_circuits = 0;
  meta.accept_rate = 0.0;
  for (const auto& w : out.walkers) {
    meta.short_circuits += w.short_circuits;
    meta.accept_rate += w.accept_rate / static_cast<double>(out.walkers.size());
  }

  Chain combined = out.combined();
  try {
    meta.burn_in = diag::remove_burnin(combined);
  } catch (const ConvergenceError& e) {
    meta.burn_in = 0;
    meta.burn_in_ok = false;
    meta.message = e.what();
  } catch (const InputError& e) {
    meta.burn_in = 0;
    meta.burn_in_ok = false;
    meta.message = e.what();
  }
  for (auto& w : out.walkers) w.burn_in = meta.burn_in;
  return out;
}

std::vector<StoredChain> load_chains(const std::string& dir) {
  std::vector<StoredChain> out;
  for (const auto& stem : list_chains(dir)) out.push_back(load_chain(dir, stem));
  return out;
}

CampaignResult run_campaign(const RunConfig& cfg) {
  cfg.validate();
  CampaignResult res;
  res.dir = resolve_output(cfg.output);
  fs::create_directories(res.dir);
  {
    std::ofstream f(fs::path(res.dir) / "config.yaml", std::ios::binary);
    f << cfg.text;
  }
  const System sys = build_system(cfg);

  struct Job {
    std::string sampler;
    std::size_t m;
  };
  std::vector<Job> jobs;
  for (const auto& s : cfg.samplers)
    for (std::size_t m = 0; m < cfg.M; ++m) jobs.push_back({s, m});
  res.runs.resize(jobs.size());

  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      res.runs[i] = run_chain(cfg, sys, jobs[i].sampler, jobs[i].m);
      save_chain(res.dir, res.runs[i]);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& r : res.runs) res.all_completed &= r.meta.status == "ok";

  const auto prefixes = cfg.prefixes.empty() ? default_prefixes(cfg.N) : cfg.prefixes;
  if (cfg.mesh) {
    KLSpec kl{&sys, *cfg.mesh, cfg.mesh->threads ? cfg.mesh->threads : threads};
    res.report = build_report(res.runs, prefixes, &kl);
  } else {
    res.report = build_report(res.runs, prefixes);
  }
  res.report.config_digest = cfg.digest;
  write_report(res.dir, res.report);
  return res;
}

}  // namespace mcbench::harness
