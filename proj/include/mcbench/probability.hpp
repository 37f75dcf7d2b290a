#pragma once

// Univariate distributions used as priors: log-density (templated on the
// scalar so priors differentiate under autodiff), sampling, and moments.

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <string_view>

#include "mcbench/errors.hpp"

namespace mcbench::prob {

using Rng = std::mt19937_64;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

enum class Kind { Normal, TruncatedNormal, LogNormal, Beta, Uniform };

std::string_view to_string(Kind k);
Kind kind_from_string(std::string_view s);

/// Mean and standard deviation in the parameter's own units.
struct MomentPair {
  double mean = 0.0;
  double std = 0.0;
};

/// Log-space location/scale of a log-normal.
struct LogSpaceParams {
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
};

/// Standard normal CDF, via erfc for accuracy in the lower tail.
double normal_cdf(double x);
/// Standard normal survival function 1 - Phi(x).
double normal_sf(double x);
/// Inverse of the standard normal CDF on (0, 1).
double normal_quantile(double p);

/// Log-space parameters whose log-normal reproduces the given moments.
/// sigma_hat^2 = ln(1 + std^2/mean^2), mu_hat = ln(mean) - sigma_hat^2/2.
LogSpaceParams lognormal_from_moments(const MomentPair& m);

/// Immutable tagged distribution. Construct through the named factories,
/// which validate the parameters.
class Distribution {
 public:
  static Distribution normal(double mean, double std);
  /// Normal(mean, std) truncated to [lower, upper]; bounds may be infinite.
  static Distribution truncated_normal(double mean, double std, double lower, double upper);
  /// Log-normal given log-space parameters.
  static Distribution lognormal(double mu_hat, double sigma_hat);
  /// Log-normal whose real-space moments equal `m`.
  static Distribution lognormal_moments(const MomentPair& m);
  static Distribution beta(double a, double b);
  static Distribution uniform(double lower, double upper);

  Kind kind() const { return kind_; }
  /// Normal / truncated-normal location, log-normal mu_hat, beta a.
  double p1() const { return p1_; }
  /// Normal / truncated-normal scale, log-normal sigma_hat, beta b.
  double p2() const { return p2_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }

  /// Closed support bounds (infinite where unbounded).
  double support_lower() const;
  double support_upper() const;
  /// True for points where the density is defined (may still be zero at an edge).
  bool in_support(double x) const;

  double mean() const;
  double stddev() const;

  /// Natural log of the density; -inf outside the support.
  template <class T>
  T log_density(const T& x) const;

  /// One draw from the distribution.
  double draw(Rng& rng) const;

  std::string describe() const;

 private:
  Distribution(Kind k, double p1, double p2, double lo, double hi);

  Kind kind_;
  double p1_;
  double p2_;
  double lower_;
  double upper_;
  double log_norm_ = 0.0;  // additive constant of the log density
};

/// Free-function spelling of Distribution::log_density.
template <class T>
T log_density(const Distribution& d, const T& x) {
  return d.log_density(x);
}

inline double log_density(const Distribution& d, double x) { return d.log_density(x); }

inline double draw(const Distribution& d, Rng& rng) { return d.draw(rng); }

template <class T>
T Distribution::log_density(const T& x) const {
  using std::log;
  const double xv = [&] {
    if constexpr (std::is_same_v<T, double>) {
      return x;
    } else {
      return x.val;
    }
  }();
  switch (kind_) {
    case Kind::Normal:
    case Kind::TruncatedNormal: {
      if (kind_ == Kind::TruncatedNormal && (xv < lower_ || xv > upper_)) return T(-kInf);
      const T z = (x - p1_) / p2_;
      return -0.5 * z * z + log_norm_;
    }
    case Kind::LogNormal: {
      if (!(xv > 0.0)) return T(-kInf);
      const T lx = log(x);
      const T z = (lx - p1_) / p2_;
      return -0.5 * z * z - lx + log_norm_;
    }
    case Kind::Beta: {
      if (xv < 0.0 || xv > 1.0) return T(-kInf);
      if ((xv == 0.0 && p1_ > 1.0) || (xv == 1.0 && p2_ > 1.0)) return T(-kInf);
      T out = T(log_norm_);
      if (p1_ != 1.0) out = out + (p1_ - 1.0) * log(x);
      if (p2_ != 1.0) out = out + (p2_ - 1.0) * log(1.0 - x);
      return out;
    }
    case Kind::Uniform:
      if (xv < lower_ || xv > upper_) return T(-kInf);
      return T(log_norm_);
  }
  return T(-kInf);
}

}  // namespace mcbench::prob
