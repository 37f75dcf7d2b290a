#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "mcbench/diagnostics.hpp"
#include "mcbench/harness/campaign.hpp"

namespace mcbench::harness {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Usable {
  Chain combined;               // prefix, ensemble-averaged for walkers
  std::vector<Chain> walkers;   // prefix
  std::size_t K = 1;
};

MatrixXd pooled_trimmed(const std::vector<Chain>& walkers, std::size_t B) {
  Index rows = 0;
  for (const auto& w : walkers) rows += w.states.rows() - static_cast<Index>(B);
  MatrixXd out(rows, walkers.front().dim());
  Index r = 0;
  for (const auto& w : walkers) {
    const Index n = w.states.rows() - static_cast<Index>(B);
    out.middleRows(r, n) = w.states.bottomRows(n);
    r += n;
  }
  return out;
}

std::vector<int> broadcast_bins(const std::vector<int>& nb, Index p) {
  if (nb.size() == 1) return std::vector<int>(static_cast<std::size_t>(p), nb.front());
  if (static_cast<Index>(nb.size()) != p) throw ConfigError("mesh.nbins must have one entry or one per parameter");
  return nb;
}

json vec(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

double num_or_nan(const json& j) { return j.is_number() ? j.get<double>() : std::nan(""); }

}  // namespace

Report build_report(const std::vector<StoredChain>& runs, const std::vector<std::size_t>& prefixes_in,
                    const KLSpec* kl) {
  Report rep;
  std::vector<std::string> samplers;
  for (const auto& r : runs) {
    if (rep.system.empty()) rep.system = r.meta.system;
    if (std::find(samplers.begin(), samplers.end(), r.meta.sampler) == samplers.end()) samplers.push_back(r.meta.sampler);
    if (r.meta.status != "ok") {
      rep.failures.push_back(chain_stem(r.meta.sampler, r.meta.chain_index) + ": " + r.meta.message);
    } else if (rep.names.empty()) {
      rep.names = r.walkers.front().names;
    }
  }
  std::vector<std::size_t> prefixes = prefixes_in;
  std::sort(prefixes.begin(), prefixes.end());
  prefixes.erase(std::unique(prefixes.begin(), prefixes.end()), prefixes.end());

  // Mesh and reference from the full trimmed chains of every sampler.
  std::optional<diag::ReferenceMesh> mesh;
  std::optional<diag::BinnedDistribution> Q;
  if (kl != nullptr && kl->system != nullptr) {
    std::vector<MatrixXd> pool;
    for (const auto& r : runs) {
      if (r.meta.status != "ok") continue;
      pool.push_back(pooled_trimmed(r.walkers, r.meta.burn_in));
    }
    if (!pool.empty()) {
      const Index p = pool.front().cols();
      mesh = diag::build_reference_mesh(pool, kl->mesh.z, broadcast_bins(kl->mesh.nbins, p));
      Q = diag::bin_reference(
          *mesh, [sys = kl->system](const VectorXd& th) { return sys->log_posterior(th); }, kl->threads);
      rep.reference_evals = mesh->total();

      prob::Rng rng(20240501);
      const std::size_t n = prefixes.empty() ? 100000 : prefixes.back();
      MatrixXd draws(static_cast<Index>(n), p);
      for (std::size_t i = 0; i < n; ++i) draws.row(static_cast<Index>(i)) = kl->system->prior.draw(rng).transpose();
      try {
        rep.prior_kl = diag::kl_divergence(diag::bin_sample(*mesh, draws), *Q);
      } catch (const std::exception&) {
        rep.prior_kl = std::numeric_limits<double>::infinity();
      }
    }
  }

  for (const auto& sampler : samplers) {
    for (std::size_t N : prefixes) {
      std::vector<MatrixXd> group;
      std::size_t K = 1;
      for (const auto& r : runs) {
        if (r.meta.sampler != sampler || r.meta.status != "ok") continue;
        K = r.walkers.size();
        const std::size_t steps = N / K;
        if (steps > r.walkers.front().size() || steps < 200) continue;

        ChainRow row;
        row.sampler = sampler;
        row.chain = r.meta.chain_index;
        row.seed = r.meta.seed;
        row.N = steps * K;

        std::vector<Chain> walkers;
        for (const auto& w : r.walkers) walkers.push_back(w.prefix(steps));
        Chain c = walkers.size() > 1 ? ensemble_average(walkers) : walkers.front();
        if (sampler == "nuts") {
          row.burn_in = r.meta.burn_in;
          if (row.burn_in + 100 > steps) continue;  // prefix still inside warm-up
        } else {
          try {
            row.burn_in = diag::find_burn_in(c.states).B;
          } catch (const ConvergenceError&) {
            row.burn_in = 0;
            row.burn_in_ok = false;
          }
        }
        c.burn_in = row.burn_in;
        row.evals = c.evals_after_burn_in();
        row.total_evals = c.cum_evals.back();
        row.adapt_evals = r.meta.adapt_evals;
        if (!c.cum_leapfrog.empty()) {
          row.leapfrog = c.cum_leapfrog.back() - (row.burn_in ? c.cum_leapfrog[row.burn_in - 1] : 0);
        }
        row.ess = diag::effective_sample_size(c.trimmed()) * static_cast<double>(K);

        if (mesh) {
          try {
            const auto P = diag::bin_sample(*mesh, pooled_trimmed(walkers, row.burn_in));
            row.kl = diag::kl_divergence(P, *Q);
            row.coverage = diag::coverage(P);
          } catch (const std::exception&) {
            row.kl = std::numeric_limits<double>::infinity();
          }
        }
        rep.chains.push_back(row);
        if (row.burn_in_ok) group.push_back(c.trimmed());
      }

      GroupRow g;
      g.sampler = sampler;
      g.N = N;
      g.chains = group.size();
      if (group.size() >= 2) {
        try {
          g.rhat = diag::gelman_rubin(group, static_cast<double>(K));
          g.multi_ess = diag::multichain_ess(group, static_cast<double>(K)) * static_cast<double>(K);
        } catch (const std::exception&) {
          g.rhat.resize(0);
          g.multi_ess.resize(0);
        }
      }
      if (g.chains > 0) rep.groups.push_back(g);
    }
  }
  return rep;
}

void write_report(const std::string& dir, const Report& r) {
  fs::create_directories(dir);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["system"] = r.system;
  j["config_digest"] = r.config_digest;
  j["parameters"] = r.names;
  j["reference_evals"] = r.reference_evals;
  j["prior_kl"] = r.prior_kl >= 0 ? json(r.prior_kl) : json(nullptr);
  j["failures"] = r.failures;
  json chains = json::array();
  for (const auto& c : r.chains) {
    const double samples = static_cast<double>(c.N - c.burn_in);
    json o;
    o["sampler"] = c.sampler;
    o["chain"] = c.chain;
    o["seed"] = c.seed;
    o["N"] = c.N;
    o["B"] = c.burn_in;
    o["burn_in_ok"] = c.burn_in_ok;
    o["evals"] = c.evals;
    o["total_evals"] = c.total_evals;
    o["adapt_evals"] = c.adapt_evals;
    o["leapfrog"] = c.leapfrog;
    o["ess"] = vec(c.ess);
    o["ess_per_sample"] = vec(c.ess / samples);
    o["ess_per_eval"] = vec(c.ess / std::max(1.0, double(c.evals)));
    o["kl"] = c.kl >= 0 ? json(c.kl) : json(nullptr);
    o["coverage"] = c.coverage >= 0 ? json(c.coverage) : json(nullptr);
    chains.push_back(o);
  }
  j["chains"] = chains;
  json groups = json::array();
  for (const auto& g : r.groups) {
    json o;
    o["sampler"] = g.sampler;
    o["N"] = g.N;
    o["chains"] = g.chains;
    o["rhat"] = vec(g.rhat);
    o["multi_ess"] = vec(g.multi_ess);
    groups.push_back(o);
  }
  j["groups"] = groups;
  {
    std::ofstream f(fs::path(dir) / "report.json", std::ios::binary);
    f << j.dump(2) << '\n';
  }

  // Flat tables for plotting.
  std::ofstream c(fs::path(dir) / "report_chains.csv", std::ios::binary);
  c << "sampler,chain,seed,N,B,burn_in_ok,evals,total_evals,adapt_evals,leapfrog,kl,coverage";
  for (const auto& n : r.names) c << ",ess_" << n;
  for (const auto& n : r.names) c << ",ess_per_sample_" << n;
  for (const auto& n : r.names) c << ",ess_per_eval_" << n;
  c << '\n';
  for (const auto& row : r.chains) {
    const double samples = static_cast<double>(row.N - row.burn_in);
    c << row.sampler << ',' << row.chain << ',' << row.seed << ',' << row.N << ',' << row.burn_in << ','
      << (row.burn_in_ok ? 1 : 0) << ',' << row.evals << ',' << row.total_evals << ',' << row.adapt_evals << ','
      << row.leapfrog << ',' << (row.kl >= 0 ? format_double(row.kl) : "") << ','
      << (row.coverage >= 0 ? format_double(row.coverage) : "");
    for (Index i = 0; i < row.ess.size(); ++i) c << ',' << format_double(row.ess(i));
    for (Index i = 0; i < row.ess.size(); ++i) c << ',' << format_double(row.ess(i) / samples);
    for (Index i = 0; i < row.ess.size(); ++i)
      c << ',' << format_double(row.ess(i) / std::max(1.0, double(row.evals)));
    c << '\n';
  }

  std::ofstream g(fs::path(dir) / "report_groups.csv", std::ios::binary);
  g << "sampler,N,chains";
  for (const auto& n : r.names) g << ",rhat_" << n;
  for (const auto& n : r.names) g << ",multi_ess_" << n;
  g << '\n';
  for (const auto& row : r.groups) {
    g << row.sampler << ',' << row.N << ',' << row.chains;
    for (std::size_t i = 0; i < r.names.size(); ++i)
      g << ',' << (static_cast<Index>(i) < row.rhat.size() ? format_double(row.rhat(static_cast<Index>(i))) : "");
    for (std::size_t i = 0; i < r.names.size(); ++i)
      g << ','
        << (static_cast<Index>(i) < row.multi_ess.size() ? format_double(row.multi_ess(static_cast<Index>(i))) : "");
    g << '\n';
  }
}

std::string summarize_report(const std::string& dir) {
  std::ifstream f(fs::path(dir) / "report.json");
  if (!f) throw InputError("no report.json in " + dir);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw InputError(std::string("report.json: ") + e.what());
  }
  if (j.value("schema_version", 0) != kSchemaVersion) throw InputError("report.json: unsupported schema version");

  std::ostringstream out;
  out << "system " << j.value("system", "?") << ", parameters " << j["parameters"].size() << '\n';
  out << std::left << std::setw(6) << "sampler" << std::right << std::setw(9) << "N" << std::setw(8) << "chains"
      << std::setw(12) << "ess/sample" << std::setw(12) << "ess/eval" << std::setw(10) << "max rhat" << std::setw(12)
      << "median KL" << '\n';
  out << std::setprecision(4);
  for (const auto& g : j["groups"]) {
    const std::string s = g["sampler"];
    const std::size_t N = g["N"];
    std::vector<double> eps, epe, kls;
    for (const auto& c : j["chains"]) {
      if (c["sampler"] != s || c["N"].get<std::size_t>() != N) continue;
      for (const auto& v : c["ess_per_sample"]) eps.push_back(num_or_nan(v));
      for (const auto& v : c["ess_per_eval"]) epe.push_back(num_or_nan(v));
      if (c["kl"].is_number()) kls.push_back(c["kl"]);
    }
    auto median = [](std::vector<double> v) {
      if (v.empty()) return std::nan("");
      std::sort(v.begin(), v.end());
      const std::size_t n = v.size();
      return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    double rmax = std::nan("");
    for (const auto& v : g["rhat"]) rmax = std::isnan(rmax) ? num_or_nan(v) : std::max(rmax, num_or_nan(v));
    out << std::left << std::setw(6) << s << std::right << std::setw(9) << N << std::setw(8)
        << g["chains"].get<std::size_t>() << std::setw(12) << median(eps) << std::setw(12) << median(epe)
        << std::setw(10) << rmax << std::setw(12) << median(kls) << '\n';
  }
  if (j["prior_kl"].is_number()) out << "KL(prior || reference) " << j["prior_kl"].get<double>() << '\n';
  for (const auto& fmsg : j["failures"]) out << "failed: " << fmsg.get<std::string>() << '\n';
  return out.str();
}

}  // namespace mcbench::harness
