#pragma once

// Priors, likelihoods and the log-posterior that samplers see.
//
// Samplers work against the abstract Target: a log density over some space,
// a model-evaluation counter, and a map back to the original parameters.
// PosteriorTarget is the Bayesian instance built from a PriorSpec, a forward
// model and an ObservationSet; by default it exposes the unconstrained space.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mcbench/autodiff.hpp"
#include "mcbench/probability.hpp"

namespace mcbench {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
template <class T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Transforms

enum class Transform { Identity, Log, Logit, ScaledLogit };

std::string_view to_string(Transform t);
Transform transform_from_string(std::string_view s);

/// Natural transform for a prior's support: Identity on R, Log for a lower bound
/// only, Logit on [0, 1], ScaledLogit on a finite interval.
Transform default_transform(const prob::Distribution& d);

namespace transform {

template <class T>
T log_sigmoid(const T& x) {
  using std::exp;
  using std::log1p;
  if (x < 0.0) return x - log1p(exp(x));
  return -log1p(exp(-x));
}

/// y -> x for one component with support [lo, hi].
template <class T>
T forward(Transform t, double lo, double hi, const T& y) {
  using std::exp;
  switch (t) {
    case Transform::Identity: return y;
    case Transform::Log: return lo + exp(y);
    case Transform::Logit: return exp(log_sigmoid(y));
    case Transform::ScaledLogit: return lo + (hi - lo) * exp(log_sigmoid(y));
  }
  return y;
}

/// log |dx/dy|.
template <class T>
T log_jacobian(Transform t, double lo, double hi, const T& y) {
  using std::log;
  switch (t) {
    case Transform::Identity: return T(0.0);
    case Transform::Log: return y;
    case Transform::Logit: return log_sigmoid(y) + log_sigmoid(-y);
    case Transform::ScaledLogit: return log(hi - lo) + log_sigmoid(y) + log_sigmoid(-y);
  }
  return T(0.0);
}

/// x -> y; throws DomainError outside the open support.
double inverse(Transform t, double lo, double hi, double x);

}  // namespace transform

// ---------------------------------------------------------------------------
// Priors

struct ParameterSpec {
  std::string name;
  std::string unit;
  prob::Distribution prior;
  Transform transform;
};

class PriorSpec {
 public:
  PriorSpec() = default;
  explicit PriorSpec(std::vector<ParameterSpec> params);

  /// Appends a parameter; an unset transform takes default_transform(prior).
  PriorSpec& add(std::string name, std::string unit, prob::Distribution prior,
                 std::optional<Transform> t = std::nullopt);

  Index size() const { return static_cast<Index>(params_.size()); }
  const ParameterSpec& operator[](Index i) const { return params_[static_cast<std::size_t>(i)]; }
  const std::vector<ParameterSpec>& params() const { return params_; }
  std::vector<std::string> names() const;

  /// Sum of log prior densities in the original space; -inf outside the support.
  template <class T>
  T log_prior(const VectorX<T>& theta) const {
    check_layout(theta.size());
    T out(0.0);
    for (Index i = 0; i < size(); ++i) {
      const T li = (*this)[i].prior.log_density(theta(i));
      if (!std::isfinite(ad::value(li))) return T(-prob::kInf);
      out = out + li;
    }
    return out;
  }

  bool in_support(const VectorXd& theta) const;

  VectorXd to_unconstrained(const VectorXd& theta) const;

  template <class T>
  VectorX<T> from_unconstrained(const VectorX<T>& phi) const {
    check_layout(phi.size());
    VectorX<T> x(phi.size());
    for (Index i = 0; i < size(); ++i) {
      const auto& p = (*this)[i];
      x(i) = transform::forward(p.transform, p.prior.support_lower(), p.prior.support_upper(), phi(i));
    }
    return x;
  }

  template <class T>
  T log_jacobian(const VectorX<T>& phi) const {
    check_layout(phi.size());
    T out(0.0);
    for (Index i = 0; i < size(); ++i) {
      const auto& p = (*this)[i];
      out = out + transform::log_jacobian(p.transform, p.prior.support_lower(),
                                          p.prior.support_upper(), phi(i));
    }
    return out;
  }

  VectorXd draw(prob::Rng& rng) const;
  VectorXd means() const;
  /// Table values: the location of truncated normals, the mean otherwise.
  VectorXd nominal() const;

  void check_layout(Index n) const;

 private:
  std::vector<ParameterSpec> params_;
};

// ---------------------------------------------------------------------------
// Data

class ObservationSet {
 public:
  ObservationSet() = default;
  /// Diagonal noise with the given standard deviations.
  static ObservationSet diagonal(VectorXd y, const VectorXd& sigma);
  static ObservationSet full(VectorXd y, MatrixXd cov);

  Index size() const { return y_.size(); }
  const VectorXd& y() const { return y_; }
  const MatrixXd& covariance() const { return cov_; }
  bool is_diagonal() const { return diagonal_; }

  /// -1/2 r^T Sigma^-1 r for residual r = d - y.
  double misfit(const VectorXd& d) const;
  /// Sigma^-1 (y - d), the likelihood gradient w.r.t. the prediction.
  VectorXd weighted_residual(const VectorXd& d) const;

  /// Same data with the covariance multiplied by c.
  ObservationSet scaled(double c) const;

 private:
  VectorXd y_;
  MatrixXd cov_;
  bool diagonal_ = true;
  VectorXd inv_var_;
  Eigen::LLT<MatrixXd> llt_;
};

// ---------------------------------------------------------------------------
// Forward models

class ForwardModel {
 public:
  virtual ~ForwardModel() = default;
  virtual Index n_params() const = 0;
  virtual VectorXd predict(const VectorXd& theta) const = 0;
  /// Predictions and their Jacobian from one dual-number pass.
  virtual std::pair<VectorXd, MatrixXd> predict_jacobian(const VectorXd& theta) const = 0;
};

/// Wraps a functor with a templated `VectorX<T> operator()(const VectorX<T>&) const`.
template <class F>
class ScalarModel final : public ForwardModel {
 public:
  ScalarModel(F f, Index p) : f_(std::move(f)), p_(p) {}

  Index n_params() const override { return p_; }
  const F& functor() const { return f_; }

  VectorXd predict(const VectorXd& theta) const override { return f_(theta); }

  std::pair<VectorXd, MatrixXd> predict_jacobian(const VectorXd& theta) const override {
    return ad::with_static_dim(p_, [&]<int N>() {
      const auto out = f_(ad::seed<N>(theta));
      VectorXd val(out.size());
      MatrixXd jac(out.size(), p_);
      for (Index r = 0; r < out.size(); ++r) {
        val(r) = out(r).val;
        jac.row(r) = ad::tangent_of<N>(out(r), p_).transpose();
      }
      return std::pair<VectorXd, MatrixXd>{std::move(val), std::move(jac)};
    });
  }

 private:
  F f_;
  Index p_;
};

template <class F>
std::shared_ptr<const ForwardModel> make_model(F f, Index p) {
  return std::make_shared<const ScalarModel<F>>(std::move(f), p);
}

// ---------------------------------------------------------------------------
// Targets

class Target {
 public:
  virtual ~Target() = default;

  virtual Index dim() const = 0;
  /// Log density in the sampling space; -inf outside the support.
  virtual double log_density(const VectorXd& x) = 0;
  virtual bool has_gradient() const { return false; }
  /// Log density and its gradient in the sampling space.
  virtual double log_density_gradient(const VectorXd& x, VectorXd& grad);
  /// Sampling-space point mapped to the original parameters.
  virtual VectorXd to_original(const VectorXd& x) const { return x; }
  virtual VectorXd from_original(const VectorXd& theta) const { return theta; }
  /// Starting point in the sampling space (typically a prior draw).
  virtual VectorXd initial_point(prob::Rng& rng) = 0;
  virtual std::vector<std::string> names() const;
  virtual std::unique_ptr<Target> clone() const = 0;

  /// Model evaluations so far: one per likelihood or gradient call.
  std::uint64_t evals() const { return evals_; }
  /// Density queries answered without a model evaluation (out of support).
  std::uint64_t short_circuits() const { return short_circuits_; }
  void reset_counters() { evals_ = 0; short_circuits_ = 0; }

 protected:
  void count_eval() { ++evals_; }
  void count_short_circuit() { ++short_circuits_; }

 private:
  std::uint64_t evals_ = 0;
  std::uint64_t short_circuits_ = 0;
};

/// Target from plain callables; each density call counts as one evaluation.
class FunctionTarget final : public Target {
 public:
  using Density = std::function<double(const VectorXd&)>;
  using Gradient = std::function<double(const VectorXd&, VectorXd&)>;
  using Init = std::function<VectorXd(prob::Rng&)>;

  FunctionTarget(Index dim, Density f, Init init, Gradient g = {});

  Index dim() const override { return dim_; }
  double log_density(const VectorXd& x) override;
  bool has_gradient() const override { return static_cast<bool>(g_); }
  double log_density_gradient(const VectorXd& x, VectorXd& grad) override;
  VectorXd initial_point(prob::Rng& rng) override { return init_(rng); }
  std::unique_ptr<Target> clone() const override;

 private:
  Index dim_;
  Density f_;
  Init init_;
  Gradient g_;
};

enum class Space { Unconstrained, Constrained };

class PosteriorTarget final : public Target {
 public:
  PosteriorTarget(PriorSpec prior, std::shared_ptr<const ForwardModel> model, ObservationSet data,
                  Space space = Space::Unconstrained);

  const PriorSpec& prior() const { return prior_; }
  const ObservationSet& data() const { return data_; }
  const ForwardModel& model() const { return *model_; }
  std::shared_ptr<const ForwardModel> model_ptr() const { return model_; }
  Space space() const { return space_; }

  double log_prior(const VectorXd& theta) const { return prior_.log_prior(theta); }
  /// Gaussian log-likelihood up to a constant; one model evaluation.
  double log_likelihood(const VectorXd& theta);
  /// log prior + log likelihood; skips the model outside the prior support.
  double log_posterior(const VectorXd& theta);
  /// Gradient of the unconstrained log density; one model evaluation.
  double log_posterior_gradient(const VectorXd& phi, VectorXd& grad);

  Index dim() const override { return prior_.size(); }
  double log_density(const VectorXd& x) override;
  bool has_gradient() const override { return space_ == Space::Unconstrained; }
  double log_density_gradient(const VectorXd& x, VectorXd& grad) override;
  VectorXd to_original(const VectorXd& x) const override;
  VectorXd from_original(const VectorXd& theta) const override;
  VectorXd initial_point(prob::Rng& rng) override;
  std::vector<std::string> names() const override { return prior_.names(); }
  std::unique_ptr<Target> clone() const override;

  /// Same prior, model and data viewed in another space; counters start at zero.
  PosteriorTarget with_space(Space s) const;
  PosteriorTarget with_data(ObservationSet d) const;

 private:
  PriorSpec prior_;
  std::shared_ptr<const ForwardModel> model_;
  ObservationSet data_;
  Space space_;
};

}  // namespace mcbench
