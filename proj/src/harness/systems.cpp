#include "mcbench/harness/systems.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>

namespace mcbench::harness {

using prob::Distribution;

namespace {

Distribution tn_table(double mean, double sd) { return Distribution::truncated_normal(mean, sd, 0.1 * mean, 10.0 * mean); }

}  // namespace

PriorSpec thermal_prior() {
  PriorSpec s;
  s.add("k", "W/(m C)", tn_table(0.300, 0.030));
  s.add("rho", "kg/m^3", tn_table(900.0, 90.0));
  s.add("cp", "J/(kg C)", tn_table(2500.0, 250.0));
  s.add("h_source", "W/(m^2 C)", tn_table(100.0, 50.0));
  s.add("h_side", "W/(m^2 C)", tn_table(1.0, 0.5));
  s.add("h_inf", "W/(m^2 C)", tn_table(10.0, 5.0));
  s.add("T_source", "C", Distribution::normal(40.0, 0.19));
  return s;
}

PriorSpec viscous_prior() {
  PriorSpec s;
  s.add("F", "N", Distribution::truncated_normal(2.8, 0.10, 0.0, prob::kInf));
  s.add("V", "m^3", Distribution::lognormal_moments({0.20e-6, 0.022e-6}));
  s.add("R0", "m", Distribution::lognormal_moments({7.6e-3, 0.15e-3}));
  s.add("eta", "Pa s", Distribution::lognormal_moments({0.87, 0.012}));
  s.add("gamma", "N m", Distribution::lognormal_moments({4.54e-2, 2.53e-3}));
  s.add("alpha", "-", Distribution::beta(3.0, 8.0));
  return s;
}

PriorSpec gaussian_test_prior(Index p, double sigma) {
  PriorSpec s;
  for (Index i = 0; i < p; ++i) s.add("x" + std::to_string(i + 1), "-", Distribution::normal(0.0, sigma));
  return s;
}

double System::log_posterior(const VectorXd& theta) const {
  const double lp = prior.log_prior(theta);
  if (!std::isfinite(lp)) return lp;
  try {
    return lp + data.misfit(model->predict(theta));
  } catch (const EvaluationError&) {
    return -prob::kInf;
  } catch (const DomainError&) {
    return -prob::kInf;
  }
}

std::shared_ptr<const ForwardModel> thermal_model(const models::ThermalGeometry& g, const models::AmbientSeries& a,
                                                  std::vector<double> obs_times) {
  g.validate();
  a.validate();
  models::ThermalModel m{g, a, std::move(obs_times)};
  return make_model(std::move(m), 7);
}

std::shared_ptr<const ForwardModel> squeeze_model(std::vector<double> obs_times, models::SqueezeOptions opt) {
  models::SqueezeModel m{std::move(obs_times), opt};
  return make_model(std::move(m), 6);
}

namespace {

struct IdentityModel {
  template <class T>
  Eigen::Matrix<T, Eigen::Dynamic, 1> operator()(const Eigen::Matrix<T, Eigen::Dynamic, 1>& theta) const {
    return theta;
  }
};

}  // namespace

System gaussian_test_system(const VectorXd& mean, const MatrixXd& cov, double prior_sigma) {
  const Index p = mean.size();
  if (cov.rows() != p || cov.cols() != p) throw ConfigError("gaussian-test: covariance shape does not match the mean");
  System s;
  s.name = "gaussian-test";
  s.prior = gaussian_test_prior(p, prior_sigma);
  s.model = make_model(IdentityModel{}, p);
  s.data = ObservationSet::full(mean, cov);
  return s;
}

std::pair<VectorXd, MatrixXd> gaussian_test_posterior(const System& s) {
  const Index p = s.prior.size();
  MatrixXd prior_prec = MatrixXd::Zero(p, p);
  VectorXd prior_term = VectorXd::Zero(p);
  for (Index i = 0; i < p; ++i) {
    const auto& d = s.prior[i].prior;
    prior_prec(i, i) = 1.0 / (d.p2() * d.p2());
    prior_term(i) = d.p1() * prior_prec(i, i);
  }
  const MatrixXd data_prec = s.data.covariance().llt().solve(MatrixXd::Identity(p, p));
  const MatrixXd cov = (data_prec + prior_prec).llt().solve(MatrixXd::Identity(p, p));
  const VectorXd mean = cov * (data_prec * s.data.y() + prior_term);
  return {mean, cov};
}

models::AmbientSeries synthetic_ambient(double t_end, double mean, double amplitude) {
  models::AmbientSeries a;
  const int n = std::max(2, static_cast<int>(std::ceil(t_end / 600.0)) + 1);
  for (int i = 0; i < n; ++i) {
    const double t = t_end * i / (n - 1);
    a.times.push_back(t);
    a.temps.push_back(mean + amplitude * std::sin(2.0 * std::numbers::pi * t / 86400.0));
  }
  return a;
}

std::vector<double> synthetic_thermal_times(double t_end, std::size_t n) {
  std::vector<double> t;
  for (std::size_t j = 0; j < n; ++j) t.push_back(t_end * static_cast<double>(j + 1) / static_cast<double>(n));
  return t;
}

std::vector<double> synthetic_squeeze_times() { return models::exponential_time_grid(1.0, 1.5, 260.0); }

ObservationSet synth_data(const ForwardModel& model, const VectorXd& theta_true, const VectorXd& sigma,
                          prob::Rng& rng, double noise_scale) {
  VectorXd y = model.predict(theta_true);
  if (sigma.size() != y.size()) throw InputError("synth_data: sigma does not match the model output");
  std::normal_distribution<double> n01;
  for (Index i = 0; i < y.size(); ++i) y(i) += noise_scale * sigma(i) * n01(rng);
  return ObservationSet::diagonal(y, sigma);
}

}  // namespace mcbench::harness
