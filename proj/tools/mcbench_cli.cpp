// mcbench: run sampler campaigns and compute diagnostics over stored chains.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "mcbench/harness/campaign.hpp"

namespace fs = std::filesystem;
using namespace mcbench;
using namespace mcbench::harness;

namespace {

// "4:32x32", "z=4,bins=32x32" or just "32" (z = 4).
MeshSpec parse_mesh(const std::string& spec) {
  MeshSpec m;
  std::string bins = spec;
  std::string s = spec;
  for (char& c : s) {
    if (c == ',' || c == ';') c = ' ';
  }
  if (s.find('=') != std::string::npos) {
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw ConfigError("mesh spec: expected key=value, got '" + tok + "'");
      const auto key = tok.substr(0, eq);
      const auto val = tok.substr(eq + 1);
      if (key == "z") {
        m.z = std::stod(val);
      } else if (key == "bins" || key == "nbins") {
        bins = val;
      } else {
        throw ConfigError("mesh spec: unknown key '" + key + "'");
      }
    }
  } else if (const auto colon = spec.find(':'); colon != std::string::npos) {
    m.z = std::stod(spec.substr(0, colon));
    bins = spec.substr(colon + 1);
  }
  std::istringstream in(bins);
  std::string tok;
  while (std::getline(in, tok, 'x')) m.nbins.push_back(std::stoi(tok));
  if (m.nbins.empty() || !(m.z > 0.0)) throw ConfigError("mesh spec '" + spec + "' is invalid");
  return m;
}

std::size_t longest(const std::vector<StoredChain>& runs) {
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (!r.walkers.empty()) n = std::max(n, r.walkers.front().size() * r.walkers.size());
  }
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark MCMC samplers on calibration problems"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the campaign described by a config file");
  run->add_option("config", config_path, "YAML run configuration")->required()->check(CLI::ExistingFile);

  std::string chains_dir;
  auto* diagnose = app.add_subcommand("diagnose", "Recompute diagnostics from stored chains");
  diagnose->add_option("chains-dir", chains_dir)->required()->check(CLI::ExistingDirectory);

  std::string kl_dir, mesh_spec;
  unsigned kl_threads = 1;
  auto* kl = app.add_subcommand("kl", "KL divergence of stored chains against the mesh reference");
  kl->add_option("chains-dir", kl_dir)->required()->check(CLI::ExistingDirectory);
  kl->add_option("--mesh", mesh_spec, "z:N1xN2x... or a single bin count")->required();
  kl->add_option("--threads", kl_threads, "Threads for the reference evaluation");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Print the summary of a report directory");
  report->add_option("dir", report_dir)->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const RunConfig cfg = load_config(config_path);
      const CampaignResult res = run_campaign(cfg);
      std::cout << summarize_report(res.dir);
      std::cout << "artifacts in " << res.dir << '\n';
      return res.all_completed ? 0 : 1;
    }
    if (*diagnose) {
      const auto runs = load_chains(chains_dir);
      const Report rep = build_report(runs, default_prefixes(longest(runs)));
      write_report(chains_dir, rep);
      std::cout << summarize_report(chains_dir);
      return rep.failures.empty() ? 0 : 1;
    }
    if (*kl) {
      const fs::path cfg_file = fs::path(kl_dir) / "config.yaml";
      if (!fs::exists(cfg_file)) throw ConfigError("kl needs the config.yaml written by `run` in " + kl_dir);
      const RunConfig cfg = load_config(cfg_file.string());
      const System sys = build_system(cfg);
      const auto runs = load_chains(kl_dir);
      KLSpec spec{&sys, parse_mesh(mesh_spec), kl_threads};
      const Report rep = build_report(runs, default_prefixes(longest(runs)), &spec);
      write_report(kl_dir, rep);
      std::cout << summarize_report(kl_dir);
      return rep.failures.empty() ? 0 : 1;
    }
    if (*report) {
      std::cout << summarize_report(report_dir);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "mcbench: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
