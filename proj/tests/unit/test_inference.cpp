#include <doctest.h>

#include <cmath>
#include <random>

#include "mcbench/harness/config.hpp"
#include "mcbench/samplers.hpp"
#include "oracles.hpp"

using namespace mcbench;
using namespace mcbench::harness;
using prob::Distribution;

namespace {

System make(const std::string& name) {
  RunConfig cfg;
  cfg.system = name;
  return build_system(cfg);
}

struct Identity {
  template <class T>
  VectorX<T> operator()(const VectorX<T>& t) const {
    return t;
  }
};

double mode_of(const Distribution& d) {
  switch (d.kind()) {
    case prob::Kind::LogNormal: return std::exp(d.p1() - d.p2() * d.p2());
    case prob::Kind::Beta: return (d.p1() - 1) / (d.p1() + d.p2() - 2);
    default: return d.p1();
  }
}

}  // namespace

TEST_CASE("transform round trips and fixed points") {
  const auto eta = Distribution::lognormal_moments({0.87, 0.012});
  CHECK(default_transform(eta) == Transform::Log);
  CHECK(transform::inverse(Transform::Log, 0.0, prob::kInf, 0.87) == doctest::Approx(-0.13926).epsilon(1e-4));
  CHECK(transform::forward(Transform::Log, 0.0, prob::kInf, transform::inverse(Transform::Log, 0.0, prob::kInf, 0.87)) ==
        doctest::Approx(0.87).epsilon(1e-14));

  CHECK(default_transform(Distribution::beta(3, 8)) == Transform::Logit);
  CHECK(transform::inverse(Transform::Logit, 0.0, 1.0, 0.5) == doctest::Approx(0.0).epsilon(1e-15));

  const auto k = Distribution::truncated_normal(0.3, 0.03, 0.03, 3.0);
  CHECK(default_transform(k) == Transform::ScaledLogit);
  const double yk = transform::inverse(Transform::ScaledLogit, 0.03, 3.0, 0.3);
  CHECK(yk == doctest::Approx(-2.302585).epsilon(1e-5));
  CHECK(transform::forward(Transform::ScaledLogit, 0.03, 3.0, yk) == doctest::Approx(0.3).epsilon(1e-14));

  CHECK(default_transform(Distribution::normal(0, 1)) == Transform::Identity);
  CHECK(default_transform(Distribution::truncated_normal(2.8, 0.1, 0.0, prob::kInf)) == Transform::Log);

  CHECK_THROWS_AS(transform::inverse(Transform::Log, 0.0, prob::kInf, -1.0), DomainError);
  CHECK_THROWS_AS(transform::inverse(Transform::Logit, 0.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(transform::inverse(Transform::ScaledLogit, 0.03, 3.0, 3.5), DomainError);
}

TEST_CASE("prior round trip over random draws") {
  prob::Rng rng(5);
  for (const auto& prior : {thermal_prior(), viscous_prior()}) {
    for (int i = 0; i < 500; ++i) {
      const VectorXd th = prior.draw(rng);
      const VectorXd back = prior.from_unconstrained(prior.to_unconstrained(th));
      for (Index j = 0; j < th.size(); ++j) CHECK(std::abs(back(j) - th(j)) <= 1e-12 * std::abs(th(j)));
    }
  }
  CHECK_THROWS_AS(thermal_prior().to_unconstrained(VectorXd::Constant(7, 0.01)), DomainError);
}

TEST_CASE("log prior separability and support") {
  for (const auto& prior : {thermal_prior(), viscous_prior()}) {
    VectorXd mode(prior.size());
    double sum = 0.0;
    for (Index i = 0; i < prior.size(); ++i) {
      mode(i) = mode_of(prior[i].prior);
      sum += prior[i].prior.log_density(mode(i));
    }
    CHECK(std::isfinite(sum));
    CHECK(prior.log_prior(mode) == doctest::Approx(sum).epsilon(1e-14));
  }
  VectorXd th = thermal_prior().means();
  th(0) = 0.02;
  CHECK(thermal_prior().log_prior(th) == -prob::kInf);
  VectorXd v = viscous_prior().means();
  v(5) = 1.2;
  CHECK(viscous_prior().log_prior(v) == -prob::kInf);
  CHECK_THROWS_AS(thermal_prior().log_prior(VectorXd(3)), InputError);

  VectorXd table(7);
  table << 0.300, 900.0, 2500.0, 100.0, 1.0, 10.0, 40.0;
  CHECK(thermal_prior().nominal() == table);
  CHECK(thermal_prior().means()(4) > 1.0);
  CHECK(viscous_prior().nominal()(5) == doctest::Approx(3.0 / 11.0));
}

TEST_CASE("gaussian likelihood values and scaling") {
  const auto model = make_model(Identity{}, 2);
  PriorSpec prior;
  prior.add("a", "-", Distribution::normal(0, 10)).add("b", "-", Distribution::normal(0, 10));
  PosteriorTarget t(prior, model, ObservationSet::diagonal(VectorXd::Zero(2), VectorXd::Ones(2)));
  CHECK(t.log_likelihood(VectorXd::Ones(2)) == doctest::Approx(-1.0).epsilon(1e-15));

  // Thermal, table means, synthetic noisy data.
  const System sys = make("thermal");
  PosteriorTarget tt = sys.target();
  const VectorXd mean = sys.prior.means();
  const double l1 = tt.log_likelihood(mean);
  CHECK(l1 < 0.0);
  CHECK(std::isfinite(l1));
  const VectorXd sigma = sys.data.covariance().diagonal().cwiseSqrt();
  PosteriorTarget t2 = tt.with_data(ObservationSet::diagonal(sys.data.y(), 2.0 * sigma));
  CHECK(t2.log_likelihood(mean) == doctest::Approx(0.25 * l1).epsilon(1e-13));

  // Scaling the covariance by c scales the log-likelihood by 1/c.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.5, 4.0);
  MatrixXd cov(3, 3);
  cov << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 1.5;
  const auto obs = ObservationSet::full(VectorXd::LinSpaced(3, 0, 1), cov);
  for (int i = 0; i < 50; ++i) {
    const double c = u(rng);
    VectorXd d(3);
    d << u(rng), -u(rng), u(rng);
    CHECK(obs.scaled(c).misfit(d) == doctest::Approx(obs.misfit(d) / c).epsilon(1e-13));
  }

  // Zero noise gives a vanishing residual.
  prob::Rng r(1);
  const auto clean = synth_data(*sys.model, mean, sigma, r, 0.0);
  CHECK(tt.with_data(clean).log_likelihood(mean) == 0.0);
}

TEST_CASE("short-circuit outside the support") {
  const System sys = make("viscous");
  PosteriorTarget t = sys.target(Space::Constrained);
  VectorXd v = sys.prior.means();
  v(5) = 1.2;
  CHECK(t.log_posterior(v) == -prob::kInf);
  CHECK(t.evals() == 0);
  CHECK(t.short_circuits() == 1);
  CHECK(t.log_density(v) == -prob::kInf);
  CHECK(t.evals() == 0);
}

TEST_CASE("counter law over a random sequence of calls") {
  const System sys = make("thermal");
  PosteriorTarget t = sys.target();
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> op(0, 3);
  std::uint64_t expected = 0, last = 0;
  prob::Rng draw(4);
  for (int i = 0; i < 60; ++i) {
    const VectorXd th = sys.prior.draw(draw);
    const VectorXd phi = sys.prior.to_unconstrained(th);
    VectorXd g;
    switch (op(rng)) {
      case 0: t.log_likelihood(th); ++expected; break;
      case 1: t.log_posterior(th); ++expected; break;
      case 2: t.log_density(phi); ++expected; break;
      case 3: t.log_density_gradient(phi, g); ++expected; break;
    }
    CHECK(t.evals() >= last);
    last = t.evals();
  }
  CHECK(t.evals() == expected);
  CHECK(t.short_circuits() == 0);
  auto c = t.clone();
  CHECK(c->evals() == 0);
}

TEST_CASE("unconstrained gradient matches finite differences at the prior mean") {
  for (const char* name : {"thermal", "viscous"}) {
    CAPTURE(name);
    const System sys = make(name);
    PosteriorTarget t = sys.target();
    const VectorXd phi = sys.prior.to_unconstrained(sys.prior.means());
    VectorXd g;
    const auto before = t.evals();
    const double v = t.log_density_gradient(phi, g);
    CHECK(t.evals() == before + 1);
    CHECK(v == doctest::Approx(t.log_density(phi)).epsilon(1e-12));
    const VectorXd fd = oracle::central_difference([&](const VectorXd& x) { return t.log_density(x); }, phi);
    CHECK(oracle::gradient_error(g, fd) < 1e-5);
  }
}

TEST_CASE("identity transform adds no Jacobian term") {
  const PriorSpec s = gaussian_test_prior(3);
  VectorXd phi(3);
  phi << -1.0, 0.5, 7.0;
  CHECK(s.log_jacobian(phi) == 0.0);
  CHECK(s.from_unconstrained(phi) == phi);
}

TEST_CASE("mismatched transform is rejected") {
  PriorSpec s;
  CHECK_THROWS_AS(s.add("x", "-", Distribution::normal(0, 1), Transform::Logit), ConfigError);
}

TEST_CASE("sampling in either space targets the same marginal") {
  PriorSpec prior;
  prior.add("x", "-", Distribution::lognormal(0.0, 0.5));
  VectorXd y(1), sd(1);
  y << 1.2;
  sd << 0.3;
  PosteriorTarget unc(prior, make_model(Identity{}, 1), ObservationSet::diagonal(y, sd));
  PosteriorTarget con = unc.with_space(Space::Constrained);

  const std::size_t n = 100000, burn = 1000;
  const auto marginal = [&](Target& t, double step, std::uint64_t seed, double start) {
    prob::Rng rng(seed);
    MHConfig cfg;
    cfg.proposal_cov = MatrixXd::Constant(1, 1, step * step);
    cfg.n_samples = n + burn;
    cfg.start = VectorXd::Constant(1, start);
    const Chain c = mh_run(t, cfg, rng);
    return std::vector<double>(c.states.data() + burn, c.states.data() + c.size());
  };
  const auto a = marginal(con, 0.6, 1, 1.0);
  const auto b = marginal(unc, 0.6, 2, 0.0);
  const double ks = oracle::ks_distance(a, b);
  CAPTURE(ks);
  CHECK(ks < 0.02);
}
