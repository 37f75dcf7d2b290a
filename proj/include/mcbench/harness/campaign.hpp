#pragma once

// Campaign orchestration (M chains per sampler, run concurrently) and the
// report reduction over the stored chains.

#include <map>
#include <string>
#include <vector>

#include "mcbench/harness/chain_io.hpp"
#include "mcbench/harness/config.hpp"

namespace mcbench::harness {

/// {1e3, 3e3, 1e4, 3e4, 1e5} up to n_max, plus n_max itself.
std::vector<std::size_t> default_prefixes(std::size_t n_max);

/// Runs one chain; failures land in meta.status rather than propagating.
StoredChain run_chain(const RunConfig& cfg, const System& sys, const std::string& sampler, std::size_t m);

struct ChainRow {
  std::string sampler;
  std::size_t chain = 0;
  std::uint64_t seed = 0;
  std::size_t N = 0;
  std::size_t burn_in = 0;
  bool burn_in_ok = true;
  std::uint64_t evals = 0;  // after the burn-in
  std::uint64_t total_evals = 0;
  std::uint64_t adapt_evals = 0;
  std::uint64_t leapfrog = 0;  // after the burn-in
  VectorXd ess;                // per parameter, over N - B samples
  double kl = -1.0;            // negative when not computed
  double coverage = -1.0;
};

struct GroupRow {
  std::string sampler;
  std::size_t N = 0;
  std::size_t chains = 0;
  VectorXd rhat;       // empty when fewer than two usable chains
  VectorXd multi_ess;
};

struct Report {
  std::string system;
  std::vector<std::string> names;
  std::string config_digest;
  std::vector<ChainRow> chains;
  std::vector<GroupRow> groups;
  double prior_kl = -1.0;
  std::uint64_t reference_evals = 0;
  std::vector<std::string> failures;
};

struct KLSpec {
  const System* system = nullptr;
  MeshSpec mesh;
  unsigned threads = 1;
};

/// Diagnostics at every prefix. KL needs a system to evaluate the reference.
Report build_report(const std::vector<StoredChain>& runs, const std::vector<std::size_t>& prefixes,
                    const KLSpec* kl = nullptr);

void write_report(const std::string& dir, const Report& r);

/// Text summary of a report directory.
std::string summarize_report(const std::string& dir);

struct CampaignResult {
  std::string dir;
  std::vector<StoredChain> runs;
  Report report;
  bool all_completed = true;
};

/// Output root is cfg.output unless SAMPLERBENCH_OUTPUT_ROOT is set, which
/// then replaces the directory prefix of relative outputs.
std::string resolve_output(const std::string& output);

CampaignResult run_campaign(const RunConfig& cfg);

std::vector<StoredChain> load_chains(const std::string& dir);

}  // namespace mcbench::harness
