#pragma once

// Squeeze flow of a Newtonian droplet between two plates under a constant load,
// in the lubrication limit with a capillary correction at the free surface.
// The fluid volume V fixes R = sqrt(V / (pi H)).

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "mcbench/autodiff.hpp"
#include "mcbench/errors.hpp"

namespace mcbench::models {

template <class T>
struct SqueezeParams {
  T F;
  T V;
  T R0;
  T eta;
  T gamma;
  T alpha;

  static constexpr int size = 6;

  static SqueezeParams from_vector(const Eigen::Matrix<T, Eigen::Dynamic, 1>& v) {
    if (v.size() != size) throw InputError("squeeze parameter vector must have 6 entries");
    return {v(0), v(1), v(2), v(3), v(4), v(5)};
  }
};

inline const std::vector<std::string>& squeeze_parameter_names() {
  static const std::vector<std::string> names{"F", "V", "R0", "eta", "gamma", "alpha"};
  return names;
}

enum class SqueezeIntegrator {
  // Forward Euler on w = H^-4, for which the pure-squeeze term is constant.
  InverseQuartic,
  // Forward Euler on H directly; needs far smaller steps for the same accuracy.
  Height,
};

struct SqueezeOptions {
  int n_steps = 40000;
  SqueezeIntegrator integrator = SqueezeIntegrator::InverseQuartic;
};

/// dH/dt for layer height H.
template <class T>
T squeeze_height_rate(const SqueezeParams<T>& p, const T& H) {
  using std::sqrt;
  if (!(ad::value(H) > 0.0)) throw DomainError("squeeze_height_rate: height must be positive");
  constexpr double pi = std::numbers::pi;
  const T R = sqrt(p.V / (pi * H));
  const T R2 = R * R;
  const T kappa = 2.0 * p.alpha / H;
  const T H3 = H * H * H;
  return (8.0 / 3.0) * (-p.F * H3 / (4.0 * pi * p.eta * R2 * R2) + kappa * p.gamma * H3 / (2.0 * p.eta * R2));
}

template <class T>
struct SqueezeTrajectory {
  std::vector<T> H;
  std::vector<T> R;
};

/// Height and radius at each observation time (ascending, >= 0).
template <class T>
SqueezeTrajectory<T> squeeze_trajectory(const SqueezeParams<T>& p, const std::vector<double>& obs_times,
                                        const SqueezeOptions& opt = {}) {
  using std::sqrt;
  constexpr double pi = std::numbers::pi;
  if (!(ad::value(p.V) > 0.0 && ad::value(p.R0) > 0.0 && ad::value(p.eta) > 0.0)) {
    throw ParameterError("squeeze: V, R0 and eta must be positive");
  }
  if (opt.n_steps < 1) throw ConfigError("squeeze: n_steps must be >= 1");
  for (std::size_t i = 0; i < obs_times.size(); ++i) {
    if (obs_times[i] < 0.0 || (i > 0 && obs_times[i] < obs_times[i - 1])) {
      throw InputError("squeeze: observation times must be ascending and non-negative");
    }
  }

  const T H0 = p.V / (pi * p.R0 * p.R0);
  SqueezeTrajectory<T> out;
  out.H.reserve(obs_times.size());
  out.R.reserve(obs_times.size());
  auto emit = [&](const T& H) {
    out.H.push_back(H);
    out.R.push_back(sqrt(p.V / (pi * H)));
  };
  if (obs_times.empty()) return out;
  const double t_end = obs_times.back();
  if (t_end == 0.0) {
    for (std::size_t i = 0; i < obs_times.size(); ++i) {
      out.H.push_back(H0);
      out.R.push_back(p.R0);
    }
    return out;
  }
  const double dt = t_end / opt.n_steps;

  // State variable u (w or H), advanced step by step; observations are read off by
  // linear interpolation of u between the bracketing steps.
  const bool quartic = opt.integrator == SqueezeIntegrator::InverseQuartic;
  T c1, c2;
  if (quartic) {
    c1 = (8.0 / 3.0) * pi * p.F / (4.0 * p.eta * p.V * p.V);
    c2 = (8.0 / 3.0) * pi * p.alpha * p.gamma / (p.eta * p.V);
  }
  auto to_height = [&](const T& u) -> T {
    if (quartic) return 1.0 / sqrt(sqrt(u));
    return u;
  };
  T u = quartic ? 1.0 / (H0 * H0 * H0 * H0) : H0;

  std::size_t q = 0;
  while (q < obs_times.size() && obs_times[q] == 0.0) {
    out.H.push_back(H0);
    out.R.push_back(p.R0);
    ++q;
  }
  for (int n = 0; n < opt.n_steps && q < obs_times.size(); ++n) {
    const double t0 = n * dt;
    const double t1 = (n + 1 == opt.n_steps) ? t_end : (n + 1) * dt;
    T next;
    if (quartic) {
      next = u + dt * (4.0 * c1 - 4.0 * c2 * sqrt(u));
    } else {
      next = u + dt * squeeze_height_rate(p, u);
    }
    if (!(ad::value(next) > 0.0) || !std::isfinite(ad::value(next))) {
      throw EvaluationError("squeeze: integration broke down at t = " + std::to_string(t1) + " s");
    }
    while (q < obs_times.size() && obs_times[q] <= t1) {
      const double w = (obs_times[q] - t0) / (t1 - t0);
      emit(to_height((1.0 - w) * u + w * next));
      ++q;
    }
    u = next;
  }
  return out;
}

/// Radius at each observation time.
template <class T>
Eigen::Matrix<T, Eigen::Dynamic, 1> squeeze_predict(const SqueezeParams<T>& p,
                                                    const std::vector<double>& obs_times,
                                                    const SqueezeOptions& opt = {}) {
  const auto tr = squeeze_trajectory(p, obs_times, opt);
  Eigen::Matrix<T, Eigen::Dynamic, 1> out(tr.R.size());
  for (std::size_t i = 0; i < tr.R.size(); ++i) out(i) = tr.R[i];
  return out;
}

/// Adapter with the parameter vector ordered as squeeze_parameter_names().
struct SqueezeModel {
  std::vector<double> obs_times;
  SqueezeOptions options;

  template <class T>
  Eigen::Matrix<T, Eigen::Dynamic, 1> operator()(const Eigen::Matrix<T, Eigen::Dynamic, 1>& theta) const {
    return squeeze_predict(SqueezeParams<T>::from_vector(theta), obs_times, options);
  }
};

/// Observation grid t_{i+1} = t_i + growth^i dt0 starting from t_0 = 0.
std::vector<double> exponential_time_grid(double dt0, double growth, double t_max);

}  // namespace mcbench::models
