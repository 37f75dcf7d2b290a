#pragma once

// One-dimensional transient heat conduction in a paraffin column heated from
// below: linear finite elements in space, backward Euler in time.
//
//   rho cp dT/dt - k d2T/dx2 + (2 h_side / R)(T - T_inf(t)) = 0
//   k dT/dx(0) = h_source (T(0) - T_source)
//   k dT/dx(L) = h_inf (T_inf(t) - T(L))

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mcbench/autodiff.hpp"
#include "mcbench/errors.hpp"

namespace mcbench::models {

template <class T>
struct ThermalParams {
  T k;
  T rho;
  T cp;
  T h_source;
  T h_side;
  T h_inf;
  T T_source;

  static constexpr int size = 7;

  static ThermalParams from_vector(const Eigen::Matrix<T, Eigen::Dynamic, 1>& v) {
    if (v.size() != size) throw InputError("thermal parameter vector must have 7 entries");
    return {v(0), v(1), v(2), v(3), v(4), v(5), v(6)};
  }
};

inline const std::vector<std::string>& thermal_parameter_names() {
  static const std::vector<std::string> names{"k", "rho", "cp", "h_source", "h_side", "h_inf",
                                              "T_source"};
  return names;
}

struct ThermalGeometry {
  double R = 0.0286;
  double L = 0.0930;
  std::vector<double> sensor_heights{0.0050, 0.0258, 0.0450, 0.0665};
  int n_elements = 25;
  double dt = 20.0;

  void validate() const;
};

/// Piecewise-linear ambient temperature history.
struct AmbientSeries {
  std::vector<double> times;
  std::vector<double> temps;

  static AmbientSeries constant(double temp, double t_end) { return {{0.0, t_end}, {temp, temp}}; }

  void validate() const;
  double t_end() const { return times.back(); }
  /// Linear interpolation; clamps to the end values outside the recorded span.
  double at(double t) const;
};

namespace detail {

// Sensor value from nodal temperatures by the linear FE basis.
template <class T>
T sample_field(const std::vector<T>& u, double x, double h) {
  const int n_el = static_cast<int>(u.size()) - 1;
  int e = static_cast<int>(std::floor(x / h));
  e = std::clamp(e, 0, n_el - 1);
  const double xi = x / h - e;
  return (1.0 - xi) * u[e] + xi * u[e + 1];
}

}  // namespace detail

/// Temperatures at the sensors, interpolated linearly in time to `obs_times`.
/// Result is sensors x times.
template <class T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> thermal_predict(
    const ThermalParams<T>& p, const ThermalGeometry& g, const AmbientSeries& ambient,
    const std::vector<double>& obs_times) {
  using std::ceil;
  if (obs_times.empty()) throw InputError("thermal_predict: no observation times");
  const double t_last = *std::max_element(obs_times.begin(), obs_times.end());
  for (double t : obs_times) {
    if (t < 0.0 || t > ambient.t_end() * (1.0 + 1e-12)) {
      throw InputError("thermal_predict: observation time " + std::to_string(t) +
                       " s outside the ambient record");
    }
  }
  if (!(ad::value(p.k) > 0.0 && ad::value(p.rho) > 0.0 && ad::value(p.cp) > 0.0 &&
        ad::value(p.h_source) > 0.0 && ad::value(p.h_side) >= 0.0 && ad::value(p.h_inf) > 0.0)) {
    throw ParameterError("thermal_predict: non-positive material or transfer coefficient");
  }

  const int ne = g.n_elements;
  const int nn = ne + 1;
  const double h = g.L / ne;
  const T beta = 2.0 * p.h_side / g.R;
  const T m_diag = p.rho * p.cp * h / 3.0;  // interior nodes carry twice this
  const T m_off = p.rho * p.cp * h / 6.0;
  const T k_h = p.k / h;
  const T r_diag = beta * h / 3.0;
  const T r_off = beta * h / 6.0;

  // Time-independent parts of the step matrix, tridiagonal with constant off-diagonal.
  // A = M/dt + K + Rxn + boundary terms.
  auto assemble = [&](double dt, std::vector<T>& diag, T& off) {
    diag.assign(nn, T(0.0));
    for (int i = 0; i < nn; ++i) {
      const double w = (i == 0 || i == ne) ? 1.0 : 2.0;
      diag[i] = w * (m_diag / dt + k_h + r_diag);
    }
    diag[0] = diag[0] + p.h_source;
    diag[ne] = diag[ne] + p.h_inf;
    off = m_off / dt - k_h + r_off;
  };

  // Thomas factorisation: stores the modified super-diagonal and inverse pivots.
  struct Factor {
    std::vector<T> c;
    std::vector<T> inv;
    T off;
  };
  auto factor = [&](const std::vector<T>& diag, const T& off) {
    Factor f{std::vector<T>(nn), std::vector<T>(nn), off};
    T denom = diag[0];
    for (int i = 0; i < nn; ++i) {
      if (i > 0) denom = diag[i] - off * f.c[i - 1];
      if (!(ad::value(denom) != 0.0)) throw EvaluationError("thermal_predict: singular step matrix");
      f.inv[i] = 1.0 / denom;
      f.c[i] = off * f.inv[i];
    }
    return f;
  };
  auto solve = [&](const Factor& f, std::vector<T>& d) {
    d[0] = d[0] * f.inv[0];
    for (int i = 1; i < nn; ++i) d[i] = (d[i] - f.off * d[i - 1]) * f.inv[i];
    for (int i = nn - 2; i >= 0; --i) d[i] = d[i] - f.c[i] * d[i + 1];
  };

  std::vector<T> diag;
  T off;
  assemble(g.dt, diag, off);
  const Factor full = factor(diag, off);

  const int n_full = static_cast<int>(std::floor(t_last / g.dt + 1e-9));
  const double rem = t_last - n_full * g.dt;
  const bool partial = rem > 1e-9 * g.dt;
  const int n_steps = n_full + (partial ? 1 : 0);

  std::vector<T> u(nn, T(ambient.at(0.0)));
  std::vector<T> rhs(nn);
  const std::size_t ns = g.sensor_heights.size();

  std::vector<double> step_t;
  std::vector<std::vector<T>> step_s;  // sensor values per stored step
  step_t.reserve(n_steps + 1);
  step_s.reserve(n_steps + 1);
  auto record = [&](double t) {
    std::vector<T> s(ns);
    for (std::size_t j = 0; j < ns; ++j) s[j] = detail::sample_field(u, g.sensor_heights[j], h);
    step_t.push_back(t);
    step_s.push_back(std::move(s));
  };
  record(0.0);

  Factor last;
  if (partial) {
    std::vector<T> d2;
    T o2;
    assemble(rem, d2, o2);
    last = factor(d2, o2);
  }

  double t = 0.0;
  for (int n = 0; n < n_steps; ++n) {
    const bool is_last = partial && n == n_steps - 1;
    const double dt = is_last ? rem : g.dt;
    const Factor& f = is_last ? last : full;
    t = is_last ? t_last : (n + 1) * g.dt;
    const double tinf = ambient.at(t);

    // rhs = M/dt u + reaction load + boundary loads
    for (int i = 0; i < nn; ++i) {
      const double w = (i == 0 || i == ne) ? 1.0 : 2.0;
      T acc = w * m_diag / dt * u[i];
      if (i > 0) acc = acc + m_off / dt * u[i - 1];
      if (i < ne) acc = acc + m_off / dt * u[i + 1];
      rhs[i] = acc + beta * (0.5 * w * h) * tinf;
    }
    rhs[0] = rhs[0] + p.h_source * p.T_source;
    rhs[ne] = rhs[ne] + p.h_inf * tinf;
    solve(f, rhs);
    std::swap(u, rhs);
    record(t);
  }

  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> out(ns, obs_times.size());
  for (std::size_t q = 0; q < obs_times.size(); ++q) {
    const double to = obs_times[q];
    auto it = std::upper_bound(step_t.begin(), step_t.end(), to);
    std::size_t hi = static_cast<std::size_t>(it - step_t.begin());
    if (hi >= step_t.size()) hi = step_t.size() - 1;
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double span = step_t[hi] - step_t[lo];
    const double w = span > 0.0 ? std::clamp((to - step_t[lo]) / span, 0.0, 1.0) : 1.0;
    for (std::size_t j = 0; j < ns; ++j) out(j, q) = (1.0 - w) * step_s[lo][j] + w * step_s[hi][j];
  }
  return out;
}

/// Steady conduction through source film, column and top film with no side loss.
/// Returns the temperature at height x.
double thermal_steady_state(double k, double h_source, double h_inf, double T_source,
                            double T_inf, double L, double x);

/// Adapter with the parameter vector ordered as thermal_parameter_names().
/// Output is sensor-major: all times of sensor 0, then sensor 1, ...
struct ThermalModel {
  ThermalGeometry geometry;
  AmbientSeries ambient;
  std::vector<double> obs_times;

  template <class T>
  Eigen::Matrix<T, Eigen::Dynamic, 1> operator()(const Eigen::Matrix<T, Eigen::Dynamic, 1>& theta) const {
    const auto m = thermal_predict(ThermalParams<T>::from_vector(theta), geometry, ambient, obs_times);
    Eigen::Matrix<T, Eigen::Dynamic, 1> out(m.size());
    Eigen::Index q = 0;
    for (Eigen::Index j = 0; j < m.rows(); ++j)
      for (Eigen::Index c = 0; c < m.cols(); ++c) out(q++) = m(j, c);
    return out;
  }
};

}  // namespace mcbench::models
