#pragma once

// CSV ingestion for the two experimental data sets. Column names carry their
// unit as a suffix (time_s, time_min, time_h; *_C, *_K; *_m, *_mm, *_um) and
// everything is converted to SI (temperatures stay in degrees Celsius).

#include <optional>
#include <string>
#include <vector>

#include "mcbench/inference.hpp"
#include "mcbench/models/thermal.hpp"

namespace mcbench::harness {

/// Minimal CSV table: header plus numeric rows. Empty cells become NaN.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line;  // file line of each row

  /// Column index, or -1.
  int find(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<csv>");

struct ErrorLookup {
  std::vector<double> temps;
  std::vector<double> sigmas;
  double at(double temp) const;
};

struct DatasetThermal {
  models::AmbientSeries ambient;
  std::vector<double> times;  // shared by all sensors
  MatrixXd temps;             // sensors x times
  std::optional<ErrorLookup> errors;

  /// Sensor-major observation vector with sigma from the lookup or `default_sigma`.
  ObservationSet observations(double default_sigma = 0.2) const;
  std::size_t size() const { return static_cast<std::size_t>(temps.size()); }
};

struct DatasetSqueeze {
  std::vector<double> times;  // s
  VectorXd radii;             // m
  MatrixXd cov;               // m^2
  bool from_repetitions = false;

  ObservationSet observations() const;
};

/// Picks `n_per_sensor` rows nearest to the uniform targets
/// t0 + (j + 1)(t1 - t0) / n. `ambient_csv` may be empty when the measurement
/// file has an ambient column.
DatasetThermal ingest_thermal(const std::string& measurements_csv, const std::string& ambient_csv = {},
                              const std::string& error_csv = {}, std::size_t n_per_sensor = 10);
DatasetThermal ingest_thermal(const CsvTable& measurements, const CsvTable* ambient, std::size_t n_per_sensor = 10);

ErrorLookup ingest_error_lookup(const CsvTable& t);

/// Either a radius column with ci95, or repetition columns rep*.
DatasetSqueeze ingest_squeeze(const std::string& csv);
DatasetSqueeze ingest_squeeze(const CsvTable& t);

}  // namespace mcbench::harness
