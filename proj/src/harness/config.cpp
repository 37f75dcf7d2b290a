#include "mcbench/harness/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mcbench/harness/datasets.hpp"

namespace mcbench::harness {

namespace fs = std::filesystem;

namespace {

template <class T>
void get(const YAML::Node& n, const char* key, T& out) {
  if (!n[key]) return;
  try {
    out = n[key].as<T>();
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return path.is_absolute() ? p : fs::absolute(fs::path(base) / path).lexically_normal().string();
}

const std::set<std::string> kTopKeys{"system", "sampler", "samplers", "N",     "M",     "seeds", "seed",
                                     "threads", "prefixes", "output",  "mh",    "aism",  "nuts",  "data",
                                     "gaussian", "priors", "mesh"};

void check_keys(const YAML::Node& n, const std::set<std::string>& allowed, const std::string& section) {
  if (!n.IsMap()) throw ConfigError(section + " must be a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
  }
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(const std::string& yaml_text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config does not parse: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping");
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!kTopKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  RunConfig c;
  get(root, "system", c.system);
  if (root["sampler"]) c.samplers = {root["sampler"].as<std::string>()};
  get(root, "samplers", c.samplers);
  get(root, "N", c.N);
  get(root, "M", c.M);
  get(root, "seeds", c.seeds);
  get(root, "seed", c.seed);
  get(root, "threads", c.threads);
  get(root, "prefixes", c.prefixes);
  get(root, "output", c.output);

  if (const auto n = root["mh"]) {
    check_keys(n, {"n_adapt", "initial_scale", "epsilon"}, "mh");
    get(n, "n_adapt", c.mh_adapt);
    get(n, "initial_scale", c.mh_initial_scale);
    get(n, "epsilon", c.mh_epsilon);
  }
  if (const auto n = root["aism"]) {
    check_keys(n, {"walkers", "a"}, "aism");
    get(n, "walkers", c.aism_walkers);
    get(n, "a", c.aism_a);
  }
  if (const auto n = root["nuts"]) {
    check_keys(n, {"delta", "max_depth", "adapt_mass"}, "nuts");
    get(n, "delta", c.nuts_delta);
    get(n, "max_depth", c.nuts_max_depth);
    get(n, "adapt_mass", c.nuts_adapt_mass);
  }
  if (const auto n = root["data"]) {
    check_keys(n,
               {"synthetic", "seed", "truth", "measurements", "ambient", "sensor_errors", "per_sensor", "sigma_C",
                "t_end_s", "squeeze", "sigma_m", "ode_steps"},
               "data");
    get(n, "synthetic", c.synthetic);
    get(n, "seed", c.data_seed);
    if (n["truth"]) c.truth = n["truth"].as<std::vector<double>>();
    get(n, "measurements", c.thermal_measurements);
    get(n, "ambient", c.thermal_ambient);
    get(n, "sensor_errors", c.thermal_errors);
    get(n, "per_sensor", c.thermal_per_sensor);
    get(n, "sigma_C", c.thermal_sigma);
    get(n, "t_end_s", c.thermal_t_end);
    get(n, "squeeze", c.squeeze_file);
    get(n, "sigma_m", c.squeeze_sigma);
    get(n, "ode_steps", c.squeeze_steps);
    c.thermal_measurements = resolve(base_dir, c.thermal_measurements);
    c.thermal_ambient = resolve(base_dir, c.thermal_ambient);
    c.thermal_errors = resolve(base_dir, c.thermal_errors);
    c.squeeze_file = resolve(base_dir, c.squeeze_file);
  }
  if (const auto n = root["gaussian"]) {
    check_keys(n, {"mean", "cov", "prior_sigma"}, "gaussian");
    get(n, "mean", c.gaussian_mean);
    get(n, "cov", c.gaussian_cov);
    get(n, "prior_sigma", c.gaussian_prior_sigma);
  }
  if (const auto n = root["priors"]) {
    if (!n.IsSequence()) throw ConfigError("priors must be a list of table rows");
    for (const auto& r : n) {
      check_keys(r, {"name", "unit", "dist", "mean", "std", "lower", "upper", "a", "b"}, "priors");
      PriorRow row;
      get(r, "name", row.name);
      get(r, "unit", row.unit);
      get(r, "dist", row.dist);
      get(r, "mean", row.mean);
      get(r, "std", row.std);
      if (r["lower"]) row.lower = r["lower"].as<double>();
      if (r["upper"]) row.upper = r["upper"].as<double>();
      if (r["a"]) row.a = r["a"].as<double>();
      if (r["b"]) row.b = r["b"].as<double>();
      c.priors.push_back(row);
    }
  }
  if (const auto n = root["mesh"]) {
    check_keys(n, {"z", "nbins", "threads"}, "mesh");
    MeshSpec m;
    get(n, "z", m.z);
    if (n["nbins"] && n["nbins"].IsScalar()) {
      m.nbins = {n["nbins"].as<int>()};
    } else {
      get(n, "nbins", m.nbins);
    }
    get(n, "threads", m.threads);
    c.mesh = m;
  }

  c.digest = fnv1a_hex(YAML::Dump(root));
  if (root["data"]) {
    auto d = root["data"];
    if (!c.thermal_measurements.empty()) d["measurements"] = c.thermal_measurements;
    if (!c.thermal_ambient.empty()) d["ambient"] = c.thermal_ambient;
    if (!c.thermal_errors.empty()) d["sensor_errors"] = c.thermal_errors;
    if (!c.squeeze_file.empty()) d["squeeze"] = c.squeeze_file;
  }
  c.text = YAML::Dump(root) + "\n";
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), fs::path(path).parent_path().string());
}

void RunConfig::validate() const {
  if (system != "thermal" && system != "viscous" && system != "gaussian-test") {
    throw ConfigError("unknown system '" + system + "'");
  }
  if (samplers.empty()) throw ConfigError("no samplers configured");
  for (const auto& s : samplers) {
    if (s != "mh" && s != "aism" && s != "nuts") throw ConfigError("unknown sampler '" + s + "'");
  }
  if (N < 200) throw ConfigError("N must be at least 200");
  if (M < 1) throw ConfigError("M must be at least 1");
  if (!seeds.empty()) {
    if (seeds.size() != M) throw ConfigError("seeds must list one seed per chain");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
      throw ConfigError("seeds must be distinct");
    }
  }
  for (auto n : prefixes) {
    if (n > N || n < 200) throw ConfigError("prefix " + std::to_string(n) + " outside [200, N]");
  }
  if (system == "gaussian-test") {
    if (gaussian_cov.size() != gaussian_mean.size()) throw ConfigError("gaussian.cov must be p x p");
    for (const auto& r : gaussian_cov) {
      if (r.size() != gaussian_mean.size()) throw ConfigError("gaussian.cov must be p x p");
    }
  }
  auto need = [](const std::string& p, const char* what) {
    if (!p.empty() && !fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p);
  };
  need(thermal_measurements, "thermal measurements");
  need(thermal_ambient, "thermal ambient series");
  need(thermal_errors, "sensor error lookup");
  need(squeeze_file, "squeeze data");
  if (!synthetic) {
    if (system == "thermal" && thermal_measurements.empty()) throw ConfigError("data.measurements is required");
    if (system == "viscous" && squeeze_file.empty()) throw ConfigError("data.squeeze is required");
  }
  if (mesh) {
    if (!(mesh->z > 0.0)) throw ConfigError("mesh.z must be positive");
    if (mesh->nbins.empty()) throw ConfigError("mesh.nbins is required");
  }
}

PriorSpec build_prior(const std::vector<PriorRow>& rows) {
  using prob::Distribution;
  PriorSpec s;
  for (const auto& r : rows) {
    Distribution d = [&] {
      if (r.dist == "normal") return Distribution::normal(r.mean, r.std);
      if (r.dist == "truncated_normal") {
        return Distribution::truncated_normal(r.mean, r.std, r.lower.value_or(-prob::kInf),
                                              r.upper.value_or(prob::kInf));
      }
      if (r.dist == "lognormal") return Distribution::lognormal_moments({r.mean, r.std});
      if (r.dist == "beta") {
        if (!r.a || !r.b) throw ConfigError("prior " + r.name + ": beta needs a and b");
        return Distribution::beta(*r.a, *r.b);
      }
      if (r.dist == "uniform") {
        if (!r.lower || !r.upper) throw ConfigError("prior " + r.name + ": uniform needs lower and upper");
        return Distribution::uniform(*r.lower, *r.upper);
      }
      throw ConfigError("prior " + r.name + ": unknown distribution '" + r.dist + "'");
    }();
    s.add(r.name, r.unit, d);
  }
  return s;
}

System build_system(const RunConfig& cfg) {
  if (cfg.system == "gaussian-test") {
    const Index p = static_cast<Index>(cfg.gaussian_mean.size());
    VectorXd mean = Eigen::Map<const VectorXd>(cfg.gaussian_mean.data(), p);
    MatrixXd cov(p, p);
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < p; ++j) cov(i, j) = cfg.gaussian_cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    System s = gaussian_test_system(mean, cov, cfg.gaussian_prior_sigma);
    if (!cfg.priors.empty()) s.prior = build_prior(cfg.priors);
    s.prior.check_layout(p);
    return s;
  }

  System s;
  s.name = cfg.system;
  s.prior = cfg.priors.empty() ? (cfg.system == "thermal" ? thermal_prior() : viscous_prior()) : build_prior(cfg.priors);
  const Index p = cfg.system == "thermal" ? 7 : 6;
  s.prior.check_layout(p);

  VectorXd truth = s.prior.nominal();
  if (cfg.truth) {
    if (static_cast<Index>(cfg.truth->size()) != p) throw ConfigError("data.truth has the wrong length");
    truth = Eigen::Map<const VectorXd>(cfg.truth->data(), p);
    if (!s.prior.in_support(truth)) throw ConfigError("data.truth lies outside the prior support");
  }
  prob::Rng rng(cfg.data_seed);

  if (cfg.system == "thermal") {
    if (cfg.synthetic) {
      const auto ambient = synthetic_ambient(cfg.thermal_t_end);
      const auto times = synthetic_thermal_times(cfg.thermal_t_end, cfg.thermal_per_sensor);
      s.model = thermal_model({}, ambient, times);
      const VectorXd sigma = VectorXd::Constant(s.model->predict(truth).size(), cfg.thermal_sigma);
      s.data = synth_data(*s.model, truth, sigma, rng);
    } else {
      const DatasetThermal d =
          ingest_thermal(cfg.thermal_measurements, cfg.thermal_ambient, cfg.thermal_errors, cfg.thermal_per_sensor);
      s.model = thermal_model({}, d.ambient, d.times);
      s.data = d.observations(cfg.thermal_sigma);
    }
    return s;
  }

  models::SqueezeOptions opt;
  opt.n_steps = cfg.squeeze_steps;
  if (cfg.synthetic) {
    s.model = squeeze_model(synthetic_squeeze_times(), opt);
    const VectorXd sigma = VectorXd::Constant(s.model->predict(truth).size(), cfg.squeeze_sigma);
    s.data = synth_data(*s.model, truth, sigma, rng);
  } else {
    const DatasetSqueeze d = ingest_squeeze(cfg.squeeze_file);
    s.model = squeeze_model(d.times, opt);
    s.data = d.observations();
  }
  return s;
}

}  // namespace mcbench::harness
