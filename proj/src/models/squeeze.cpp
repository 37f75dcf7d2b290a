#include "mcbench/models/squeeze.hpp"

namespace mcbench::models {

std::vector<double> exponential_time_grid(double dt0, double growth, double t_max) {
  if (!(dt0 > 0.0) || !(growth > 0.0)) throw ParameterError("time grid: dt0 and growth must be > 0");
  std::vector<double> t{0.0};
  double step = dt0;
  while (t.back() + step <= t_max * (1.0 + 1e-12)) {
    t.push_back(t.back() + step);
    step *= growth;
  }
  return t;
}

}  // namespace mcbench::models
