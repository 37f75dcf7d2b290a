#include "mcbench/models/thermal.hpp"

namespace mcbench::models {

void ThermalGeometry::validate() const {
  if (!(R > 0.0) || !(L > 0.0)) throw ParameterError("thermal geometry: R and L must be positive");
  if (n_elements < 2) throw ParameterError("thermal geometry: need at least 2 elements");
  if (!(dt > 0.0)) throw ParameterError("thermal geometry: dt must be positive");
  if (sensor_heights.empty()) throw ParameterError("thermal geometry: no sensors");
  for (double x : sensor_heights) {
    if (!(x > 0.0 && x < L)) throw ParameterError("thermal geometry: sensor outside (0, L)");
  }
}

void AmbientSeries::validate() const {
  if (times.size() != temps.size()) throw InputError("ambient series: length mismatch");
  if (times.size() < 2) throw InputError("ambient series: need at least two points");
  if (times.front() > 0.0) throw InputError("ambient series: must start at t = 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw InputError("ambient series: times not strictly increasing at row " + std::to_string(i));
    }
  }
}

double AmbientSeries::at(double t) const {
  if (t <= times.front()) return temps.front();
  if (t >= times.back()) return temps.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return (1.0 - w) * temps[lo] + w * temps[hi];
}

double thermal_steady_state(double k, double h_source, double h_inf, double T_source,
                            double T_inf, double L, double x) {
  const double q = (T_source - T_inf) / (1.0 / h_source + L / k + 1.0 / h_inf);
  return T_source - q * (1.0 / h_source + x / k);
}

}  // namespace mcbench::models
