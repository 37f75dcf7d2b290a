#pragma once

// Chain persistence. A chain file has columns
//   step, [walker,] theta..., log_post, cum_evals[, cum_leapfrog]
// with the metadata in a JSON sidecar of the same stem. Ensemble runs write
// every walker into one file with step = n K + k; cum_evals there is the
// ensemble-wide count after that row.

#include <string>
#include <vector>

#include "mcbench/samplers.hpp"

namespace mcbench::harness {

inline constexpr int kSchemaVersion = 1;

struct ChainMeta {
  std::string system;
  std::string sampler;
  std::uint64_t seed = 0;
  std::size_t chain_index = 0;
  std::size_t burn_in = 0;
  bool burn_in_ok = true;
  std::string status = "ok";  // ok | failed
  std::string message;
  std::size_t n_walkers = 1;
  std::string config_digest;
  std::uint64_t adapt_evals = 0;
  std::uint64_t short_circuits = 0;
  std::uint64_t divergences = 0;
  double accept_rate = 0.0;
  double step_size = 0.0;
};

/// A persisted run: one chain, or K walker chains for the ensemble sampler.
struct StoredChain {
  ChainMeta meta;
  std::vector<Chain> walkers;

  /// The chain the diagnostics use (the walker average for ensembles).
  Chain combined() const;
};

std::string chain_stem(const std::string& sampler, std::size_t index);

std::string format_double(double x);

void write_chain_csv(const std::string& path, const std::vector<Chain>& walkers);
std::vector<Chain> read_chain_csv(const std::string& path);

void write_meta(const std::string& path, const ChainMeta& m);
ChainMeta read_meta(const std::string& path);

/// Writes <dir>/<stem>.csv and <dir>/<stem>.json.
void save_chain(const std::string& dir, const StoredChain& c);
StoredChain load_chain(const std::string& dir, const std::string& stem);

/// Every chain stem in `dir` with both files present, sorted.
std::vector<std::string> list_chains(const std::string& dir);

}  // namespace mcbench::harness
