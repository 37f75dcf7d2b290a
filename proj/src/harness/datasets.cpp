#include "mcbench/harness/datasets.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mcbench::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string row_msg(const std::string& what, std::size_t line) {
  return what + " (row " + std::to_string(line) + ")";
}

struct UnitColumn {
  int index = -1;
  double scale = 1.0;
  double offset = 0.0;
};

// Column `base` followed by one of the unit suffixes.
UnitColumn unit_column(const CsvTable& t, const std::string& base,
                       const std::vector<std::pair<std::string, std::pair<double, double>>>& units) {
  for (const auto& [suffix, conv] : units) {
    const int i = t.find(base + "_" + suffix);
    if (i >= 0) return {i, conv.first, conv.second};
  }
  return {};
}

const std::vector<std::pair<std::string, std::pair<double, double>>> kTimeUnits{
    {"s", {1.0, 0.0}}, {"min", {60.0, 0.0}}, {"h", {3600.0, 0.0}}};
const std::vector<std::pair<std::string, std::pair<double, double>>> kTempUnits{{"C", {1.0, 0.0}},
                                                                                {"K", {1.0, -273.15}}};
const std::vector<std::pair<std::string, std::pair<double, double>>> kLengthUnits{
    {"m", {1.0, 0.0}}, {"mm", {1e-3, 0.0}}, {"um", {1e-6, 0.0}}};

double convert(const UnitColumn& c, double v) { return v * c.scale + c.offset; }

// Suffix-agnostic lookup for columns that repeat ("sensor1_C", "rep3_mm").
std::vector<std::pair<int, std::string>> prefixed_columns(const CsvTable& t, const std::string& prefix) {
  std::vector<std::pair<int, std::string>> out;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    const auto& h = t.header[i];
    if (h.rfind(prefix, 0) == 0) {
      const auto us = h.rfind('_');
      out.emplace_back(static_cast<int>(i), us == std::string::npos ? std::string{} : h.substr(us + 1));
    }
  }
  return out;
}

UnitColumn suffixed(int index, const std::string& suffix,
                    const std::vector<std::pair<std::string, std::pair<double, double>>>& units,
                    const std::string& name) {
  for (const auto& [s, conv] : units) {
    if (s == suffix) return {index, conv.first, conv.second};
  }
  throw InputError("column " + name + ": unknown unit suffix '" + suffix + "'");
}

std::vector<double> read_times(const CsvTable& t, const UnitColumn& c) {
  std::vector<double> times;
  times.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double v = convert(c, t.rows[r][static_cast<std::size_t>(c.index)]);
    if (!std::isfinite(v)) throw InputError(row_msg("missing time value", t.line[r]));
    if (!times.empty() && !(v > times.back())) throw InputError(row_msg("time is not increasing", t.line[r]));
    times.push_back(v);
  }
  return times;
}

UnitColumn require_time(const CsvTable& t) {
  const UnitColumn c = unit_column(t, "time", kTimeUnits);
  if (c.index < 0) throw InputError("missing time column (time_s, time_min or time_h)");
  return c;
}

}  // namespace

int CsvTable::find(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw InputError(origin + ": " + row_msg("expected " + std::to_string(t.header.size()) + " cells, got " +
                                                   std::to_string(cells.size()),
                                               lineno));
    }
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      if (c.empty() || c == "nan" || c == "NaN" || c == "NA") {
        row[i] = kNaN;
        continue;
      }
      char* end = nullptr;
      row[i] = std::strtod(c.c_str(), &end);
      if (end == c.c_str() || *end != '\0') {
        throw InputError(origin + ": " + row_msg("non-numeric cell '" + c + "' in column " + t.header[i], lineno));
      }
    }
    t.rows.push_back(std::move(row));
    t.line.push_back(lineno);
  }
  if (t.header.empty()) throw InputError(origin + ": empty file");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str(), path);
}

double ErrorLookup::at(double temp) const {
  if (temps.empty()) throw InputError("empty sensor error lookup");
  if (temp <= temps.front()) return sigmas.front();
  if (temp >= temps.back()) return sigmas.back();
  const auto it = std::upper_bound(temps.begin(), temps.end(), temp);
  const std::size_t j = static_cast<std::size_t>(it - temps.begin());
  const double w = (temp - temps[j - 1]) / (temps[j] - temps[j - 1]);
  return (1.0 - w) * sigmas[j - 1] + w * sigmas[j];
}

ErrorLookup ingest_error_lookup(const CsvTable& t) {
  const UnitColumn temp = unit_column(t, "temp", kTempUnits);
  const int sig = t.find("sigma_C") >= 0 ? t.find("sigma_C") : t.find("sigma_K");
  if (temp.index < 0 || sig < 0) throw InputError("error lookup needs temp_C and sigma_C columns");
  ErrorLookup e;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double x = convert(temp, t.rows[r][static_cast<std::size_t>(temp.index)]);
    const double s = t.rows[r][static_cast<std::size_t>(sig)];
    if (!e.temps.empty() && !(x > e.temps.back())) throw InputError(row_msg("temperature not increasing", t.line[r]));
    if (!(s > 0.0)) throw InputError(row_msg("sensor error must be positive", t.line[r]));
    e.temps.push_back(x);
    e.sigmas.push_back(s);
  }
  if (e.temps.empty()) throw InputError("empty sensor error lookup");
  return e;
}

ObservationSet DatasetThermal::observations(double default_sigma) const {
  VectorXd y(temps.size()), sigma(temps.size());
  Index q = 0;
  for (Index s = 0; s < temps.rows(); ++s)
    for (Index j = 0; j < temps.cols(); ++j, ++q) {
      y(q) = temps(s, j);
      sigma(q) = errors ? errors->at(temps(s, j)) : default_sigma;
    }
  return ObservationSet::diagonal(y, sigma);
}

DatasetThermal ingest_thermal(const CsvTable& meas, const CsvTable* ambient_table, std::size_t n_per_sensor) {
  if (n_per_sensor < 1) throw InputError("thermal ingestion: need at least one time per sensor");
  const UnitColumn tcol = require_time(meas);
  const std::vector<double> times = read_times(meas, tcol);
  if (times.size() < 2) throw InputError("thermal ingestion: fewer than two rows");

  // Sensor columns in file order.
  std::vector<UnitColumn> sensors;
  for (const auto& [idx, suffix] : prefixed_columns(meas, "sensor")) {
    sensors.push_back(suffixed(idx, suffix, kTempUnits, meas.header[static_cast<std::size_t>(idx)]));
  }
  if (sensors.empty()) throw InputError("thermal ingestion: missing sensor columns (sensor1_C, ...)");

  // The experiment clock starts at the first row.
  const double t0 = times.front();
  DatasetThermal d;
  const CsvTable& at = ambient_table ? *ambient_table : meas;
  const UnitColumn acol = unit_column(at, "ambient", kTempUnits);
  if (acol.index < 0) throw InputError("thermal ingestion: missing ambient column (ambient_C)");
  const std::vector<double> atimes = ambient_table ? read_times(at, require_time(at)) : times;
  for (std::size_t r = 0; r < at.rows.size(); ++r) {
    const double v = convert(acol, at.rows[r][static_cast<std::size_t>(acol.index)]);
    if (!std::isfinite(v)) continue;
    d.ambient.times.push_back(atimes[r] - t0);
    d.ambient.temps.push_back(v);
  }
  if (!d.ambient.times.empty() && d.ambient.times.front() > 0.0) {
    throw InputError("thermal ingestion: ambient series starts after the measurements");
  }
  d.ambient.validate();

  const double t1 = std::min(times.back(), d.ambient.t_end() + t0);
  std::vector<std::size_t> picked;
  for (std::size_t j = 0; j < n_per_sensor; ++j) {
    const double target = t0 + (static_cast<double>(j) + 1.0) * (t1 - t0) / static_cast<double>(n_per_sensor);
    std::size_t best = times.size();
    double dist = prob::kInf;
    for (std::size_t r = 0; r < times.size(); ++r) {
      if (times[r] > t1) break;
      bool complete = true;
      for (const auto& s : sensors) complete &= std::isfinite(meas.rows[r][static_cast<std::size_t>(s.index)]);
      if (!complete) continue;
      const double dd = std::abs(times[r] - target);
      if (dd < dist) {
        dist = dd;
        best = r;
      }
    }
    if (best == times.size()) throw InputError("thermal ingestion: no complete row near t = " + std::to_string(target));
    if (!picked.empty() && best <= picked.back()) continue;  // coarse files may collapse targets
    picked.push_back(best);
  }

  d.temps.resize(static_cast<Index>(sensors.size()), static_cast<Index>(picked.size()));
  for (std::size_t j = 0; j < picked.size(); ++j) {
    d.times.push_back(times[picked[j]] - t0);
    for (std::size_t s = 0; s < sensors.size(); ++s) {
      d.temps(static_cast<Index>(s), static_cast<Index>(j)) =
          convert(sensors[s], meas.rows[picked[j]][static_cast<std::size_t>(sensors[s].index)]);
    }
  }
  return d;
}

DatasetThermal ingest_thermal(const std::string& measurements_csv, const std::string& ambient_csv,
                              const std::string& error_csv, std::size_t n_per_sensor) {
  const CsvTable meas = read_csv(measurements_csv);
  DatasetThermal d;
  if (ambient_csv.empty()) {
    d = ingest_thermal(meas, nullptr, n_per_sensor);
  } else {
    const CsvTable amb = read_csv(ambient_csv);
    d = ingest_thermal(meas, &amb, n_per_sensor);
  }
  if (!error_csv.empty()) d.errors = ingest_error_lookup(read_csv(error_csv));
  return d;
}

ObservationSet DatasetSqueeze::observations() const {
  if (cov.rows() == radii.size() && !cov.isDiagonal(0.0)) return ObservationSet::full(radii, cov);
  return ObservationSet::diagonal(radii, cov.diagonal().cwiseSqrt());
}

DatasetSqueeze ingest_squeeze(const CsvTable& t) {
  const UnitColumn tcol = require_time(t);
  DatasetSqueeze d;
  d.times = read_times(t, tcol);
  const std::size_t n = d.times.size();
  if (n < 1) throw InputError("squeeze ingestion: no rows");

  const UnitColumn mean = unit_column(t, "radius", kLengthUnits);
  const UnitColumn ci = unit_column(t, "ci95", kLengthUnits);
  std::vector<UnitColumn> reps;
  for (const auto& [idx, suffix] : prefixed_columns(t, "rep")) {
    reps.push_back(suffixed(idx, suffix, kLengthUnits, t.header[static_cast<std::size_t>(idx)]));
  }
  if (mean.index < 0 && reps.empty()) throw InputError("squeeze ingestion: missing radius column (radius_mm or rep*_mm)");
  if (reps.size() < 2 && ci.index < 0) {
    throw InputError("squeeze ingestion: need a ci95 column or at least two repetition columns");
  }

  auto radius = [&](const UnitColumn& c, std::size_t r) {
    const double v = convert(c, t.rows[r][static_cast<std::size_t>(c.index)]);
    if (!(v > 0.0)) {
      throw InputError(row_msg("non-positive radius in column " + t.header[static_cast<std::size_t>(c.index)],
                               t.line[r]));
    }
    return v;
  };

  MatrixXd R(static_cast<Index>(n), static_cast<Index>(reps.size()));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < reps.size(); ++k) R(static_cast<Index>(r), static_cast<Index>(k)) = radius(reps[k], r);

  d.radii.resize(static_cast<Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    d.radii(static_cast<Index>(r)) = mean.index >= 0 ? radius(mean, r) : R.row(static_cast<Index>(r)).mean();
  }

  if (reps.size() >= 2) {
    const MatrixXd C = R.colwise() - R.rowwise().mean();
    d.cov = C * C.transpose() / static_cast<double>(reps.size() - 1);
    d.from_repetitions = true;
    // Fewer repetitions than times leaves the empirical covariance singular.
    Eigen::LLT<MatrixXd> llt(d.cov);
    if (llt.info() != Eigen::Success) d.cov = MatrixXd(d.cov.diagonal().asDiagonal());
    if (!(d.cov.diagonal().minCoeff() > 0.0)) throw InputError("squeeze ingestion: repeated radii have zero spread");
  } else {
    d.cov = MatrixXd::Zero(static_cast<Index>(n), static_cast<Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
      const double h = convert(ci, t.rows[r][static_cast<std::size_t>(ci.index)]);
      if (!(h > 0.0)) throw InputError(row_msg("confidence interval must be positive", t.line[r]));
      const double s = h / 1.96;
      d.cov(static_cast<Index>(r), static_cast<Index>(r)) = s * s;
    }
  }
  return d;
}

DatasetSqueeze ingest_squeeze(const std::string& csv) { return ingest_squeeze(read_csv(csv)); }

}  // namespace mcbench::harness
