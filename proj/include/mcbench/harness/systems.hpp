#pragma once

// The three inference problems the campaign knows: the thermal column, the
// viscous squeeze flow and an analytic Gaussian test target.

#include <memory>
#include <string>
#include <vector>

#include "mcbench/inference.hpp"
#include "mcbench/models/squeeze.hpp"
#include "mcbench/models/thermal.hpp"

namespace mcbench::harness {

PriorSpec thermal_prior();
PriorSpec viscous_prior();

/// Broad independent normal prior used by the Gaussian test system.
PriorSpec gaussian_test_prior(Index p, double sigma = 5.0);

struct System {
  std::string name;
  PriorSpec prior;
  std::shared_ptr<const ForwardModel> model;
  ObservationSet data;

  PosteriorTarget target(Space s = Space::Unconstrained) const { return {prior, model, data, s}; }
  /// Original-space log posterior without touching an eval counter; safe to call concurrently.
  double log_posterior(const VectorXd& theta) const;
};

std::shared_ptr<const ForwardModel> thermal_model(const models::ThermalGeometry& g, const models::AmbientSeries& a,
                                                  std::vector<double> obs_times);
std::shared_ptr<const ForwardModel> squeeze_model(std::vector<double> obs_times, models::SqueezeOptions opt = {});

/// Identity model with y = mean, Sigma_y = cov.
System gaussian_test_system(const VectorXd& mean, const MatrixXd& cov, double prior_sigma = 5.0);

/// Exact posterior moments of the Gaussian test system.
std::pair<VectorXd, MatrixXd> gaussian_test_posterior(const System& s);

/// Smooth daily ambient cycle used for synthetic thermal runs.
models::AmbientSeries synthetic_ambient(double t_end, double mean = 20.0, double amplitude = 1.5);

/// Ten observation times per sensor over `t_end`.
std::vector<double> synthetic_thermal_times(double t_end, std::size_t n = 10);

/// Exponential grid 1 s, growth 1.5 up to 260 s.
std::vector<double> synthetic_squeeze_times();

/// Model at theta_true plus independent Gaussian noise noise_scale * sigma;
/// the likelihood uses sigma either way.
ObservationSet synth_data(const ForwardModel& model, const VectorXd& theta_true, const VectorXd& sigma,
                          prob::Rng& rng, double noise_scale = 1.0);

}  // namespace mcbench::harness
