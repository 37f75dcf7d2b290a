#pragma once

// Run configuration read from YAML. See configs/ for annotated examples.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcbench/harness/systems.hpp"

namespace mcbench::harness {

struct PriorRow {
  std::string name;
  std::string unit;
  std::string dist;  // normal, truncated_normal, lognormal, beta, uniform
  double mean = 0.0, std = 0.0;
  std::optional<double> lower, upper;  // truncated_normal / uniform
  std::optional<double> a, b;          // beta shapes
};

struct MeshSpec {
  double z = 4.0;
  std::vector<int> nbins;  // one entry broadcasts to every dimension
  unsigned threads = 0;    // 0: campaign thread count
};

struct RunConfig {
  std::string system = "gaussian-test";
  std::vector<std::string> samplers{"mh"};
  std::size_t N = 1000;
  std::size_t M = 2;
  std::vector<std::uint64_t> seeds;  // one per chain; defaults to seed + m
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency
  std::vector<std::size_t> prefixes;  // empty: default schedule
  std::string output = "out";

  // samplers
  std::size_t mh_adapt = 0;  // 0: max(100 p, 5000)
  double mh_initial_scale = 0.1;
  double mh_epsilon = 1e-10;
  std::size_t aism_walkers = 0;
  double aism_a = 2.0;
  double nuts_delta = 0.8;
  int nuts_max_depth = 10;
  bool nuts_adapt_mass = true;

  // data
  bool synthetic = true;
  std::uint64_t data_seed = 2024;
  std::optional<std::vector<double>> truth;  // original space; table values if unset
  std::string thermal_measurements, thermal_ambient, thermal_errors;
  std::size_t thermal_per_sensor = 10;
  double thermal_sigma = 0.2;          // degrees C
  double thermal_t_end = 14 * 3600.0;  // synthetic runs
  std::string squeeze_file;
  double squeeze_sigma = 0.25e-3;  // m, synthetic runs
  int squeeze_steps = 40000;

  // gaussian-test
  std::vector<double> gaussian_mean{0.0, 0.0};
  std::vector<std::vector<double>> gaussian_cov{{1.0, 0.8}, {0.8, 1.0}};
  double gaussian_prior_sigma = 5.0;

  std::vector<PriorRow> priors;  // replaces the built-in table when non-empty
  std::optional<MeshSpec> mesh;

  std::string digest;  // FNV-1a of the normalised config text
  std::string text;    // normalised config with absolute data paths, copied into the run directory

  std::uint64_t chain_seed(std::size_t m) const { return seeds.empty() ? seed + m : seeds.at(m); }
  /// Throws ConfigError on any inconsistency, including missing data files.
  void validate() const;
};

RunConfig parse_config(const std::string& yaml_text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

PriorSpec build_prior(const std::vector<PriorRow>& rows);
System build_system(const RunConfig& cfg);

std::string fnv1a_hex(const std::string& text);

}  // namespace mcbench::harness
