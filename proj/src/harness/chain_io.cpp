#include "mcbench/harness/chain_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mcbench/harness/datasets.hpp"

namespace mcbench::harness {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string chain_stem(const std::string& sampler, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%02zu", index);
  return "chain_" + sampler + buf;
}

Chain StoredChain::combined() const {
  if (walkers.empty()) throw InputError("stored chain has no states");
  if (walkers.size() == 1) return walkers.front();
  Chain c = ensemble_average(walkers);
  c.burn_in = meta.burn_in;
  c.adapt_evals = meta.adapt_evals;
  return c;
}

void write_chain_csv(const std::string& path, const std::vector<Chain>& walkers) {
  if (walkers.empty()) throw InputError("write_chain_csv: nothing to write");
  const Chain& w0 = walkers.front();
  const bool ensemble = walkers.size() > 1;
  const bool leap = !w0.cum_leapfrog.empty();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);

  f << "step";
  if (ensemble) f << ",walker";
  for (Index i = 0; i < w0.dim(); ++i) {
    f << ',' << (static_cast<std::size_t>(i) < w0.names.size() ? w0.names[static_cast<std::size_t>(i)]
                                                                : "theta" + std::to_string(i + 1));
  }
  f << ",log_post,cum_evals";
  if (leap) f << ",cum_leapfrog";
  f << '\n';

  const std::size_t K = walkers.size();
  const std::size_t n = w0.size();
  std::vector<std::uint64_t> last(K, 0);
  std::uint64_t total = 0;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t k = 0; k < K; ++k) {
      const Chain& w = walkers[k];
      total += w.cum_evals[s] - last[k];
      last[k] = w.cum_evals[s];
      f << s * K + k;
      if (ensemble) f << ',' << k;
      for (Index i = 0; i < w.dim(); ++i) f << ',' << format_double(w.states(static_cast<Index>(s), i));
      f << ',' << format_double(w.log_post[s]) << ',' << total;
      if (leap) f << ',' << w.cum_leapfrog[s];
      f << '\n';
    }
  }
}

std::vector<Chain> read_chain_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int walker_col = t.find("walker");
  const int lp_col = t.find("log_post");
  const int ev_col = t.find("cum_evals");
  const int lf_col = t.find("cum_leapfrog");
  if (t.find("step") != 0 || lp_col < 0 || ev_col < 0) throw InputError(path + ": not a chain file");
  const int first = walker_col >= 0 ? 2 : 1;
  const Index p = lp_col - first;
  if (p < 1) throw InputError(path + ": no parameter columns");

  std::size_t K = 1;
  if (walker_col >= 0) {
    for (const auto& r : t.rows) K = std::max(K, static_cast<std::size_t>(r[static_cast<std::size_t>(walker_col)]) + 1);
  }
  if (t.rows.size() % K != 0) throw InputError(path + ": ragged walker rows");
  const std::size_t n = t.rows.size() / K;

  std::vector<Chain> walkers(K);
  std::vector<std::string> names(t.header.begin() + first, t.header.begin() + lp_col);
  for (auto& w : walkers) {
    w.names = names;
    w.resize(n, p, lf_col >= 0);
  }
  std::vector<std::uint64_t> own(K, 0);
  std::uint64_t prev = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t s = r / K;
    const std::size_t k = walker_col >= 0 ? static_cast<std::size_t>(row[static_cast<std::size_t>(walker_col)]) : 0;
    if (k != r % K || static_cast<std::size_t>(row[0]) != r) throw InputError(path + ": rows out of order at line " + std::to_string(t.line[r]));
    Chain& w = walkers[k];
    for (Index i = 0; i < p; ++i) w.states(static_cast<Index>(s), i) = row[static_cast<std::size_t>(first + i)];
    w.log_post[s] = row[static_cast<std::size_t>(lp_col)];
    const auto total = static_cast<std::uint64_t>(row[static_cast<std::size_t>(ev_col)]);
    if (total < prev) throw InputError(path + ": cum_evals decreases at line " + std::to_string(t.line[r]));
    own[k] += total - prev;
    prev = total;
    w.cum_evals[s] = own[k];
    if (lf_col >= 0) w.cum_leapfrog[s] = static_cast<std::uint64_t>(row[static_cast<std::size_t>(lf_col)]);
  }
  return walkers;
}

void write_meta(const std::string& path, const ChainMeta& m) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["system"] = m.system;
  j["sampler"] = m.sampler;
  j["seed"] = m.seed;
  j["chain"] = m.chain_index;
  j["status"] = m.status;
  j["message"] = m.message;
  j["B"] = m.burn_in;
  j["burn_in_ok"] = m.burn_in_ok;
  j["n_walkers"] = m.n_walkers;
  j["config_digest"] = m.config_digest;
  j["adapt_evals"] = m.adapt_evals;
  j["short_circuits"] = m.short_circuits;
  j["divergences"] = m.divergences;
  j["accept_rate"] = m.accept_rate;
  j["step_size"] = m.step_size;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  f << j.dump(2) << '\n';
}

ChainMeta read_meta(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  if (j.value("schema_version", 0) != kSchemaVersion) throw InputError(path + ": unsupported schema version");
  ChainMeta m;
  m.system = j.value("system", "");
  m.sampler = j.value("sampler", "");
  m.seed = j.value("seed", std::uint64_t{0});
  m.chain_index = j.value("chain", std::size_t{0});
  m.status = j.value("status", "ok");
  m.message = j.value("message", "");
  m.burn_in = j.value("B", std::size_t{0});
  m.burn_in_ok = j.value("burn_in_ok", true);
  m.n_walkers = j.value("n_walkers", std::size_t{1});
  m.config_digest = j.value("config_digest", "");
  m.adapt_evals = j.value("adapt_evals", std::uint64_t{0});
  m.short_circuits = j.value("short_circuits", std::uint64_t{0});
  m.divergences = j.value("divergences", std::uint64_t{0});
  m.accept_rate = j.value("accept_rate", 0.0);
  m.step_size = j.value("step_size", 0.0);
  return m;
}

void save_chain(const std::string& dir, const StoredChain& c) {
  fs::create_directories(dir);
  const std::string stem = chain_stem(c.meta.sampler, c.meta.chain_index);
  if (!c.walkers.empty()) write_chain_csv((fs::path(dir) / (stem + ".csv")).string(), c.walkers);
  write_meta((fs::path(dir) / (stem + ".json")).string(), c.meta);
}

StoredChain load_chain(const std::string& dir, const std::string& stem) {
  StoredChain c;
  c.meta = read_meta((fs::path(dir) / (stem + ".json")).string());
  const fs::path csv = fs::path(dir) / (stem + ".csv");
  if (fs::exists(csv)) {
    c.walkers = read_chain_csv(csv.string());
    for (auto& w : c.walkers) {
      w.sampler = c.meta.sampler;
      w.seed = c.meta.seed;
      w.burn_in = c.meta.burn_in;
    }
    c.walkers.front().adapt_evals = c.meta.adapt_evals;
  }
  return c;
}

std::vector<std::string> list_chains(const std::string& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir);
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto p = e.path();
    if (p.extension() == ".json" && p.stem().string().rfind("chain_", 0) == 0) out.push_back(p.stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mcbench::harness
