#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mcbench/models/squeeze.hpp"
#include "mcbench/models/thermal.hpp"

using namespace mcbench;
using namespace mcbench::models;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double pi = std::numbers::pi;

ThermalParams<double> table1() { return {0.300, 900.0, 2500.0, 100.0, 1.0, 10.0, 40.0}; }

SqueezeParams<double> table2() { return {2.8, 0.20e-6, 7.6e-3, 0.87, 4.54e-2, 0.273}; }

std::vector<double> uniform_times(double t_end, int n) {
  std::vector<double> t;
  for (int i = 1; i <= n; ++i) t.push_back(t_end * i / n);
  return t;
}

AmbientSeries drifting_ambient(double t_end) {
  AmbientSeries a;
  for (int i = 0; i <= 100; ++i) {
    const double t = t_end * i / 100.0;
    a.times.push_back(t);
    a.temps.push_back(20.0 + 1.5 * std::sin(2 * pi * t / 86400.0));
  }
  return a;
}

}  // namespace

TEST_CASE("thermal equilibrium is invariant") {
  const auto p = table1();
  const auto amb = AmbientSeries::constant(p.T_source, 20000.0);
  const MatrixXd T = thermal_predict(p, ThermalGeometry{}, amb, uniform_times(20000.0, 10));
  CHECK(T.rows() == 4);
  CHECK(T.cols() == 10);
  CHECK((T.array() - p.T_source).abs().maxCoeff() < 1e-10);
}

TEST_CASE("thermal steady state matches the series-resistance formula") {
  auto p = table1();
  p.h_side = 0.0;
  const double Tinf = 20.0;
  ThermalGeometry g;
  g.n_elements = 200;
  g.dt = 200.0;
  const double t_end = 2.0e6;
  const MatrixXd T = thermal_predict(p, g, AmbientSeries::constant(Tinf, t_end), {t_end});
  for (std::size_t s = 0; s < g.sensor_heights.size(); ++s) {
    const double x = g.sensor_heights[s];
    const double exact = thermal_steady_state(p.k, p.h_source, p.h_inf, p.T_source, Tinf, g.L, x);
    // q = (Ts - Tinf) / (1/h_s + L/k + 1/h_inf), T = Ts - q (1/h_s + x/k), written out again here
    const double q = (p.T_source - Tinf) / (1 / p.h_source + g.L / p.k + 1 / p.h_inf);
    CHECK(exact == doctest::Approx(p.T_source - q * (1 / p.h_source + x / p.k)).epsilon(1e-14));
    CAPTURE(x);
    CHECK(std::abs(T(static_cast<Eigen::Index>(s), 0) - exact) < 0.005 * std::abs(exact));
    CHECK(std::abs(T(static_cast<Eigen::Index>(s), 0) - exact) < 0.005 * (p.T_source - Tinf));
  }
}

TEST_CASE("thermal maximum principle") {
  const double t_end = 14 * 3600.0;
  const auto amb = drifting_ambient(t_end);
  const auto p = table1();
  const MatrixXd T = thermal_predict(p, ThermalGeometry{}, amb, uniform_times(t_end, 200));
  double lo = p.T_source, hi = p.T_source;
  for (double v : amb.temps) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(T.allFinite());
  CHECK(T.minCoeff() >= lo - 1e-9);
  CHECK(T.maxCoeff() <= hi + 1e-9);
  // The 40-observation layout at the table means stays in [T_inf(0), T_source] with a 1 C margin.
  const MatrixXd obs = thermal_predict(p, ThermalGeometry{}, amb, uniform_times(t_end, 10));
  CHECK(obs.size() == 40);
  CHECK(obs.minCoeff() >= amb.temps.front() - 1.0);
  CHECK(obs.maxCoeff() <= p.T_source + 1.0);
}

TEST_CASE("backward Euler converges at first order") {
  const double t_end = 4 * 3600.0;
  const auto amb = drifting_ambient(t_end);
  const auto p = table1();
  const auto times = uniform_times(t_end, 4);
  ThermalGeometry g;
  g.dt = 2.5;
  const MatrixXd ref = thermal_predict(p, g, amb, times);
  std::vector<double> err;
  for (double dt : {160.0, 80.0, 40.0, 20.0}) {
    g.dt = dt;
    err.push_back((thermal_predict(p, g, amb, times) - ref).cwiseAbs().maxCoeff());
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double ratio = err[i - 1] / err[i];
    CAPTURE(ratio);
    CHECK(ratio > 1.6);
    CHECK(ratio < 2.4);
  }
}

TEST_CASE("doubling the FE mesh barely moves the observations") {
  const double t_end = 14 * 3600.0;
  const auto amb = drifting_ambient(t_end);
  ThermalGeometry g25, g50;
  g50.n_elements = 50;
  const auto times = uniform_times(t_end, 10);
  const MatrixXd a = thermal_predict(table1(), g25, amb, times);
  const MatrixXd b = thermal_predict(table1(), g50, amb, times);
  CHECK((a - b).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("thermal model evaluates identically in dual arithmetic") {
  const double t_end = 6 * 3600.0;
  ThermalModel m{ThermalGeometry{}, drifting_ambient(t_end), uniform_times(t_end, 10)};
  VectorXd th(7);
  th << 0.31, 880.0, 2400.0, 90.0, 1.2, 9.0, 40.1;
  const VectorXd plain = m(th);
  const auto dual = m(ad::seed<7>(th));
  for (Eigen::Index i = 0; i < plain.size(); ++i) CHECK(dual(i).val == plain(i));
  // Sensor-major layout.
  const MatrixXd grid = thermal_predict(ThermalParams<double>::from_vector(th), m.geometry, m.ambient, m.obs_times);
  CHECK(plain(3) == grid(0, 3));
  CHECK(plain(10) == grid(1, 0));
}

TEST_CASE("thermal input validation") {
  const auto amb = AmbientSeries::constant(20.0, 1000.0);
  CHECK_THROWS_AS(thermal_predict(table1(), ThermalGeometry{}, amb, {1500.0}), InputError);
  CHECK_THROWS_AS(thermal_predict(table1(), ThermalGeometry{}, amb, {-1.0}), InputError);
  auto bad = table1();
  bad.k = -0.1;
  CHECK_THROWS_AS(thermal_predict(bad, ThermalGeometry{}, amb, {10.0}), ParameterError);
  ThermalGeometry g;
  g.sensor_heights = {0.2};
  CHECK_THROWS_AS(g.validate(), ParameterError);
  AmbientSeries a{{0.0, 5.0, 5.0}, {1.0, 2.0, 3.0}};
  CHECK_THROWS_AS(a.validate(), InputError);
  CHECK(AmbientSeries{{0.0, 10.0}, {0.0, 10.0}}.at(2.5) == doctest::Approx(2.5));
}

TEST_CASE("capillary pressure can balance the load") {
  auto p = table2();
  const double H = 5e-4;
  const double R = std::sqrt(p.V / (pi * H));
  const double kappa = 2 * p.alpha / H;
  p.F = 2 * pi * kappa * p.gamma * R * R;
  const double squeeze = (8.0 / 3.0) * p.F * H * H * H / (4 * pi * p.eta * R * R * R * R);
  CHECK(std::abs(squeeze_height_rate(p, H)) < 1e-13 * squeeze);
}

TEST_CASE("height rate matches a direct evaluation") {
  const auto p = table2();
  const double H0 = p.V / (pi * p.R0 * p.R0);
  // Independent long-double evaluation, factored differently.
  const long double V = p.V, H = H0, F = p.F, eta = p.eta, g = p.gamma, a = p.alpha;
  const long double R2 = V / (3.14159265358979323846264338327950288L * H);
  const long double expect =
      (8.0L / 3.0L) * (H * H * H / eta) *
      (-F / (4.0L * 3.14159265358979323846264338327950288L * R2 * R2) + (2.0L * a / H) * g / (2.0L * R2));
  CHECK(squeeze_height_rate(p, H0) == doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));
  CHECK(squeeze_height_rate(p, H0) < 0.0);

  auto dry = p;
  dry.gamma = 0.0;
  for (double h : {1e-5, 1e-4, 1e-3, 1e-2}) CHECK(squeeze_height_rate(dry, h) < 0.0);
  CHECK_THROWS_AS(squeeze_height_rate(p, 0.0), DomainError);
  CHECK_THROWS_AS(squeeze_height_rate(p, -1e-4), DomainError);
}

TEST_CASE("squeeze trajectory basics") {
  const auto p = table2();
  const VectorXd r0 = squeeze_predict(p, {0.0});
  CHECK(r0(0) == p.R0);

  auto dry = p;
  dry.gamma = 0.0;
  const auto times = exponential_time_grid(1.0, 1.5, 260.0);
  const VectorXd r = squeeze_predict(dry, times);
  for (Eigen::Index i = 1; i < r.size(); ++i) CHECK(r(i) > r(i - 1));

  const auto tr = squeeze_trajectory(p, times);
  for (std::size_t i = 0; i < tr.H.size(); ++i) {
    CHECK(std::abs(pi * tr.R[i] * tr.R[i] * tr.H[i] - p.V) <= 1e-12 * p.V);
  }
}

TEST_CASE("exponential observation grid") {
  const auto t = exponential_time_grid(1.0, 1.5, 260.0);
  CHECK(t.front() == 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) {
    CHECK(t[i] - t[i - 1] == doctest::Approx(std::pow(1.5, static_cast<double>(i - 1))));
  }
  CHECK(t.back() <= 260.0);
}

TEST_CASE("squeeze step halving") {
  const auto times = exponential_time_grid(1.0, 1.5, 260.0);
  const auto p = table2();
  SqueezeOptions a, b;
  b.n_steps = 2 * a.n_steps;
  const double ra = squeeze_predict(p, times, a)(static_cast<Eigen::Index>(times.size()) - 1);
  const double rb = squeeze_predict(p, times, b)(static_cast<Eigen::Index>(times.size()) - 1);
  CHECK(std::abs(ra - rb) < 1e-6 * rb);

  // The literal height integration converges to the same trajectory.
  SqueezeOptions h;
  h.integrator = SqueezeIntegrator::Height;
  h.n_steps = 4000000;
  const double rh = squeeze_predict(p, times, h)(static_cast<Eigen::Index>(times.size()) - 1);
  CHECK(std::abs(rh - rb) < 1e-5 * rb);
}

TEST_CASE("squeeze breakdown names the time") {
  auto p = table2();
  p.gamma = 50.0;
  p.alpha = 1.0;
  SqueezeOptions o;
  o.n_steps = 2;
  try {
    squeeze_predict(p, {100.0}, o);
    FAIL("expected an evaluation error");
  } catch (const EvaluationError& e) {
    CHECK(std::string(e.what()).find("t = ") != std::string::npos);
  }
  CHECK_THROWS_AS(squeeze_predict(p, {2.0, 1.0}), InputError);
}

TEST_CASE("squeeze model evaluates identically in dual arithmetic") {
  SqueezeModel m{exponential_time_grid(1.0, 1.5, 260.0), {}};
  VectorXd th(6);
  th << 2.85, 0.21e-6, 7.5e-3, 0.872, 4.4e-2, 0.3;
  const VectorXd plain = m(th);
  const auto dual = m(ad::seed<6>(th));
  for (Eigen::Index i = 0; i < plain.size(); ++i) CHECK(dual(i).val == plain(i));
}
