#include "mcbench/inference.hpp"

#include <cmath>

namespace mcbench {

std::string_view to_string(Transform t) {
  switch (t) {
    case Transform::Identity: return "identity";
    case Transform::Log: return "log";
    case Transform::Logit: return "logit";
    case Transform::ScaledLogit: return "scaled_logit";
  }
  return "unknown";
}

Transform transform_from_string(std::string_view s) {
  if (s == "identity") return Transform::Identity;
  if (s == "log") return Transform::Log;
  if (s == "logit") return Transform::Logit;
  if (s == "scaled_logit") return Transform::ScaledLogit;
  throw ConfigError("unknown transform '" + std::string(s) + "'");
}

Transform default_transform(const prob::Distribution& d) {
  const bool lo = std::isfinite(d.support_lower());
  const bool hi = std::isfinite(d.support_upper());
  if (d.kind() == prob::Kind::Beta) return Transform::Logit;
  if (lo && hi) return Transform::ScaledLogit;
  if (lo) return Transform::Log;
  if (hi) throw ParameterError("no built-in transform for a support bounded only above");
  return Transform::Identity;
}

namespace transform {

double inverse(Transform t, double lo, double hi, double x) {
  auto logit = [](double s) { return std::log(s) - std::log1p(-s); };
  switch (t) {
    case Transform::Identity:
      return x;
    case Transform::Log:
      if (!(x > lo)) throw DomainError("log transform: value at or below the lower bound");
      return std::log(x - lo);
    case Transform::Logit:
      if (!(x > 0.0 && x < 1.0)) throw DomainError("logit transform: value outside (0, 1)");
      return logit(x);
    case Transform::ScaledLogit:
      if (!(x > lo && x < hi)) throw DomainError("scaled logit transform: value outside bounds");
      return logit((x - lo) / (hi - lo));
  }
  return x;
}

}  // namespace transform

// ---------------------------------------------------------------------------

PriorSpec::PriorSpec(std::vector<ParameterSpec> params) : params_(std::move(params)) {
  for (const auto& p : params_) {
    const bool lo = std::isfinite(p.prior.support_lower());
    const bool hi = std::isfinite(p.prior.support_upper());
    bool ok = true;
    switch (p.transform) {
      case Transform::Identity: ok = !lo && !hi; break;
      case Transform::Log: ok = lo && !hi; break;
      case Transform::Logit:
        ok = p.prior.support_lower() == 0.0 && p.prior.support_upper() == 1.0;
        break;
      case Transform::ScaledLogit: ok = lo && hi; break;
    }
    if (!ok) {
      throw ConfigError("parameter '" + p.name + "': transform " + std::string(to_string(p.transform)) +
                        " does not match the support of " + p.prior.describe());
    }
  }
}

PriorSpec& PriorSpec::add(std::string name, std::string unit, prob::Distribution prior,
                          std::optional<Transform> t) {
  const Transform tr = t ? *t : default_transform(prior);
  auto params = params_;
  params.push_back({std::move(name), std::move(unit), prior, tr});
  *this = PriorSpec(std::move(params));
  return *this;
}

std::vector<std::string> PriorSpec::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.name);
  return out;
}

void PriorSpec::check_layout(Index n) const {
  if (n != size()) {
    throw InputError("parameter vector has " + std::to_string(n) + " entries, layout expects " +
                     std::to_string(size()));
  }
}

bool PriorSpec::in_support(const VectorXd& theta) const {
  check_layout(theta.size());
  for (Index i = 0; i < size(); ++i) {
    if (!std::isfinite((*this)[i].prior.log_density(theta(i)))) return false;
  }
  return true;
}

VectorXd PriorSpec::to_unconstrained(const VectorXd& theta) const {
  check_layout(theta.size());
  VectorXd y(theta.size());
  for (Index i = 0; i < size(); ++i) {
    const auto& p = (*this)[i];
    y(i) = transform::inverse(p.transform, p.prior.support_lower(), p.prior.support_upper(), theta(i));
  }
  return y;
}

VectorXd PriorSpec::draw(prob::Rng& rng) const {
  VectorXd x(size());
  for (Index i = 0; i < size(); ++i) x(i) = (*this)[i].prior.draw(rng);
  return x;
}

VectorXd PriorSpec::means() const {
  VectorXd x(size());
  for (Index i = 0; i < size(); ++i) x(i) = (*this)[i].prior.mean();
  return x;
}

VectorXd PriorSpec::nominal() const {
  VectorXd x(size());
  for (Index i = 0; i < size(); ++i) {
    const auto& d = (*this)[i].prior;
    x(i) = d.kind() == prob::Kind::TruncatedNormal ? d.p1() : d.mean();
  }
  return x;
}

// ---------------------------------------------------------------------------

ObservationSet ObservationSet::diagonal(VectorXd y, const VectorXd& sigma) {
  if (sigma.size() != y.size()) throw InputError("observation set: sigma length mismatch");
  if ((sigma.array() <= 0.0).any()) throw InputError("observation set: sigma must be positive");
  ObservationSet o;
  o.y_ = std::move(y);
  o.cov_ = sigma.array().square().matrix().asDiagonal();
  o.diagonal_ = true;
  o.inv_var_ = sigma.array().square().inverse().matrix();
  return o;
}

ObservationSet ObservationSet::full(VectorXd y, MatrixXd cov) {
  if (cov.rows() != y.size() || cov.cols() != y.size()) {
    throw InputError("observation set: covariance shape mismatch");
  }
  if (!cov.isApprox(cov.transpose(), 1e-12)) throw InputError("observation set: covariance not symmetric");
  ObservationSet o;
  o.y_ = std::move(y);
  o.cov_ = std::move(cov);
  const MatrixXd off = o.cov_ - MatrixXd(o.cov_.diagonal().asDiagonal());
  if (off.isZero(0.0)) {
    if ((o.cov_.diagonal().array() <= 0.0).any()) throw InputError("observation set: covariance not SPD");
    o.diagonal_ = true;
    o.inv_var_ = o.cov_.diagonal().array().inverse().matrix();
    return o;
  }
  o.diagonal_ = false;
  o.llt_.compute(o.cov_);
  if (o.llt_.info() != Eigen::Success) throw InputError("observation set: covariance not SPD");
  return o;
}

double ObservationSet::misfit(const VectorXd& d) const {
  if (d.size() != y_.size()) throw InputError("prediction length does not match the data");
  const VectorXd r = d - y_;
  if (diagonal_) return -0.5 * (r.array().square() * inv_var_.array()).sum();
  return -0.5 * r.dot(llt_.solve(r));
}

VectorXd ObservationSet::weighted_residual(const VectorXd& d) const {
  if (d.size() != y_.size()) throw InputError("prediction length does not match the data");
  const VectorXd r = y_ - d;
  if (diagonal_) return (r.array() * inv_var_.array()).matrix();
  return llt_.solve(r);
}

ObservationSet ObservationSet::scaled(double c) const {
  if (!(c > 0.0)) throw InputError("observation set: scale must be positive");
  return diagonal_ ? diagonal(y_, (cov_.diagonal() * c).cwiseSqrt()) : full(y_, cov_ * c);
}

// ---------------------------------------------------------------------------

double Target::log_density_gradient(const VectorXd&, VectorXd&) {
  throw ConfigError("target does not provide gradients");
}

std::vector<std::string> Target::names() const {
  std::vector<std::string> out;
  for (Index i = 0; i < dim(); ++i) out.push_back("theta" + std::to_string(i + 1));
  return out;
}

FunctionTarget::FunctionTarget(Index dim, Density f, Init init, Gradient g)
    : dim_(dim), f_(std::move(f)), init_(std::move(init)), g_(std::move(g)) {}

double FunctionTarget::log_density(const VectorXd& x) {
  count_eval();
  return f_(x);
}

double FunctionTarget::log_density_gradient(const VectorXd& x, VectorXd& grad) {
  if (!g_) return Target::log_density_gradient(x, grad);
  count_eval();
  return g_(x, grad);
}

std::unique_ptr<Target> FunctionTarget::clone() const {
  auto t = std::make_unique<FunctionTarget>(dim_, f_, init_, g_);
  return t;
}

// ---------------------------------------------------------------------------

PosteriorTarget::PosteriorTarget(PriorSpec prior, std::shared_ptr<const ForwardModel> model,
                                 ObservationSet data, Space space)
    : prior_(std::move(prior)), model_(std::move(model)), data_(std::move(data)), space_(space) {
  if (!model_) throw ConfigError("posterior target: no forward model");
  if (model_->n_params() != prior_.size()) {
    throw ConfigError("posterior target: model and prior disagree on the parameter count");
  }
}

double PosteriorTarget::log_likelihood(const VectorXd& theta) {
  prior_.check_layout(theta.size());
  count_eval();
  const VectorXd d = model_->predict(theta);
  if (!d.allFinite()) throw EvaluationError("forward model returned non-finite values");
  return data_.misfit(d);
}

double PosteriorTarget::log_posterior(const VectorXd& theta) {
  const double lp = log_prior(theta);
  if (!std::isfinite(lp)) {
    count_short_circuit();
    return -prob::kInf;
  }
  return lp + log_likelihood(theta);
}

double PosteriorTarget::log_posterior_gradient(const VectorXd& phi, VectorXd& grad) {
  prior_.check_layout(phi.size());
  const Index p = phi.size();
  // Prior and transform terms by dual numbers in the unconstrained coordinates.
  const auto seeded = ad::seed<Eigen::Dynamic>(phi);
  const VectorX<ad::Dual<>> x = prior_.from_unconstrained(seeded);
  const ad::Dual<> lp = prior_.log_prior(x) + prior_.log_jacobian(seeded);
  VectorXd theta(p), dtheta(p);
  for (Index i = 0; i < p; ++i) {
    theta(i) = x(i).val;
    dtheta(i) = ad::tangent_of(x(i), p)(i);
  }
  if (!std::isfinite(lp.val)) {
    count_short_circuit();
    grad = VectorXd::Zero(p);
    return -prob::kInf;
  }
  count_eval();
  const auto [d, jac] = model_->predict_jacobian(theta);
  if (!d.allFinite() || !jac.allFinite()) throw EvaluationError("forward model returned non-finite values");
  const VectorXd g_theta = jac.transpose() * data_.weighted_residual(d);
  grad = ad::tangent_of(lp, p) + (dtheta.array() * g_theta.array()).matrix();
  return lp.val + data_.misfit(d);
}

double PosteriorTarget::log_density(const VectorXd& x) {
  if (space_ == Space::Constrained) return log_posterior(x);
  const VectorXd theta = prior_.from_unconstrained(x);
  const double lp = log_posterior(theta);
  if (!std::isfinite(lp)) return lp;
  return lp + prior_.log_jacobian(x);
}

double PosteriorTarget::log_density_gradient(const VectorXd& x, VectorXd& grad) {
  if (space_ == Space::Constrained) return Target::log_density_gradient(x, grad);
  return log_posterior_gradient(x, grad);
}

VectorXd PosteriorTarget::to_original(const VectorXd& x) const {
  return space_ == Space::Constrained ? x : prior_.from_unconstrained(x);
}

VectorXd PosteriorTarget::from_original(const VectorXd& theta) const {
  return space_ == Space::Constrained ? theta : prior_.to_unconstrained(theta);
}

VectorXd PosteriorTarget::initial_point(prob::Rng& rng) {
  // Redraw the rare prior samples that sit on a boundary the transform cannot map.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const VectorXd theta = prior_.draw(rng);
    try {
      return from_original(theta);
    } catch (const DomainError&) {
    }
  }
  throw ConfigError("could not draw an interior starting point from the prior");
}

std::unique_ptr<Target> PosteriorTarget::clone() const {
  return std::make_unique<PosteriorTarget>(prior_, model_, data_, space_);
}

PosteriorTarget PosteriorTarget::with_space(Space s) const { return {prior_, model_, data_, s}; }

PosteriorTarget PosteriorTarget::with_data(ObservationSet d) const {
  return {prior_, model_, std::move(d), space_};
}

}  // namespace mcbench
