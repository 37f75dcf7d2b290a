#include "mcbench/probability.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace mcbench::prob {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kSqrt2Pi = 2.50662827463100050242;

// log(Phi(b) - Phi(a)) evaluated on whichever tail keeps precision.
double log_normal_mass(double a, double b) {
  if (a > 0.0) return std::log(normal_sf(a) - normal_sf(b));
  return std::log(normal_cdf(b) - normal_cdf(a));
}

// Initial guess for the normal quantile from Acklam's rational approximation.
double quantile_guess(double p) {
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::Normal: return "normal";
    case Kind::TruncatedNormal: return "truncated_normal";
    case Kind::LogNormal: return "lognormal";
    case Kind::Beta: return "beta";
    case Kind::Uniform: return "uniform";
  }
  return "unknown";
}

Kind kind_from_string(std::string_view s) {
  if (s == "normal") return Kind::Normal;
  if (s == "truncated_normal") return Kind::TruncatedNormal;
  if (s == "lognormal") return Kind::LogNormal;
  if (s == "beta") return Kind::Beta;
  if (s == "uniform") return Kind::Uniform;
  throw ParameterError("unknown distribution kind '" + std::string(s) + "'");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw DomainError("normal_quantile: probability outside [0, 1]");
  }
  double x = quantile_guess(p);
  // Halley refinement; the residual is taken on the tail that keeps precision.
  for (int it = 0; it < 2; ++it) {
    const double e = x < 0.0 ? normal_cdf(x) - p : (1.0 - p) - normal_sf(x);
    const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

LogSpaceParams lognormal_from_moments(const MomentPair& m) {
  if (!(m.mean > 0.0)) throw ParameterError("lognormal_from_moments: mean must be positive");
  if (m.std < 0.0) throw ParameterError("lognormal_from_moments: negative std");
  const double cv = m.std / m.mean;
  const double s2 = std::log1p(cv * cv);
  return {std::log(m.mean) - 0.5 * s2, std::sqrt(s2)};
}

Distribution::Distribution(Kind k, double p1, double p2, double lo, double hi)
    : kind_(k), p1_(p1), p2_(p2), lower_(lo), upper_(hi) {
  switch (kind_) {
    case Kind::Normal:
      log_norm_ = -std::log(p2_) - kLogSqrt2Pi;
      break;
    case Kind::TruncatedNormal:
      log_norm_ = -std::log(p2_) - kLogSqrt2Pi -
                  log_normal_mass((lower_ - p1_) / p2_, (upper_ - p1_) / p2_);
      break;
    case Kind::LogNormal:
      log_norm_ = -std::log(p2_) - kLogSqrt2Pi;
      break;
    case Kind::Beta:
      log_norm_ = std::lgamma(p1_ + p2_) - std::lgamma(p1_) - std::lgamma(p2_);
      break;
    case Kind::Uniform:
      log_norm_ = -std::log(upper_ - lower_);
      break;
  }
}

Distribution Distribution::normal(double mean, double std) {
  if (!(std > 0.0) || !std::isfinite(mean)) throw ParameterError("normal: std must be > 0");
  return {Kind::Normal, mean, std, -kInf, kInf};
}

Distribution Distribution::truncated_normal(double mean, double std, double lower, double upper) {
  if (!(std > 0.0) || !std::isfinite(mean)) {
    throw ParameterError("truncated_normal: std must be > 0");
  }
  if (!(lower < upper)) throw ParameterError("truncated_normal: lower must be < upper");
  const double mass = std::exp(log_normal_mass((lower - mean) / std, (upper - mean) / std));
  if (!(mass > 0.0)) throw ParameterError("truncated_normal: bounds carry no probability mass");
  return {Kind::TruncatedNormal, mean, std, lower, upper};
}

Distribution Distribution::lognormal(double mu_hat, double sigma_hat) {
  if (!(sigma_hat > 0.0) || !std::isfinite(mu_hat)) {
    throw ParameterError("lognormal: sigma_hat must be > 0");
  }
  return {Kind::LogNormal, mu_hat, sigma_hat, 0.0, kInf};
}

Distribution Distribution::lognormal_moments(const MomentPair& m) {
  const auto ls = lognormal_from_moments(m);
  return lognormal(ls.mu_hat, ls.sigma_hat);
}

Distribution Distribution::beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ParameterError("beta: shapes must be > 0");
  return {Kind::Beta, a, b, 0.0, 1.0};
}

Distribution Distribution::uniform(double lower, double upper) {
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw ParameterError("uniform: need finite lower < upper");
  }
  return {Kind::Uniform, 0.0, 0.0, lower, upper};
}

double Distribution::support_lower() const {
  switch (kind_) {
    case Kind::Normal: return -kInf;
    case Kind::LogNormal: return 0.0;
    case Kind::Beta: return 0.0;
    default: return lower_;
  }
}

double Distribution::support_upper() const {
  switch (kind_) {
    case Kind::Normal: return kInf;
    case Kind::LogNormal: return kInf;
    case Kind::Beta: return 1.0;
    default: return upper_;
  }
}

bool Distribution::in_support(double x) const {
  if (kind_ == Kind::LogNormal) return x > 0.0;
  return x >= support_lower() && x <= support_upper();
}

double Distribution::mean() const {
  switch (kind_) {
    case Kind::Normal: return p1_;
    case Kind::TruncatedNormal: {
      const double a = (lower_ - p1_) / p2_;
      const double b = (upper_ - p1_) / p2_;
      const double z = std::exp(log_normal_mass(a, b));
      const double pa = std::isfinite(a) ? std::exp(-0.5 * a * a) / kSqrt2Pi : 0.0;
      const double pb = std::isfinite(b) ? std::exp(-0.5 * b * b) / kSqrt2Pi : 0.0;
      return p1_ + p2_ * (pa - pb) / z;
    }
    case Kind::LogNormal: return std::exp(p1_ + 0.5 * p2_ * p2_);
    case Kind::Beta: return p1_ / (p1_ + p2_);
    case Kind::Uniform: return 0.5 * (lower_ + upper_);
  }
  return 0.0;
}

double Distribution::stddev() const {
  switch (kind_) {
    case Kind::Normal: return p2_;
    case Kind::TruncatedNormal: {
      const double a = (lower_ - p1_) / p2_;
      const double b = (upper_ - p1_) / p2_;
      const double z = std::exp(log_normal_mass(a, b));
      const double pa = std::isfinite(a) ? std::exp(-0.5 * a * a) / kSqrt2Pi : 0.0;
      const double pb = std::isfinite(b) ? std::exp(-0.5 * b * b) / kSqrt2Pi : 0.0;
      const double apa = std::isfinite(a) ? a * pa : 0.0;
      const double bpb = std::isfinite(b) ? b * pb : 0.0;
      const double r = (pa - pb) / z;
      return p2_ * std::sqrt(1.0 + (apa - bpb) / z - r * r);
    }
    case Kind::LogNormal: {
      const double s2 = p2_ * p2_;
      return std::sqrt(std::expm1(s2)) * std::exp(p1_ + 0.5 * s2);
    }
    case Kind::Beta: {
      const double s = p1_ + p2_;
      return std::sqrt(p1_ * p2_ / (s * s * (s + 1.0)));
    }
    case Kind::Uniform: return (upper_ - lower_) / std::sqrt(12.0);
  }
  return 0.0;
}

double Distribution::draw(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  switch (kind_) {
    case Kind::Normal: return std::normal_distribution<double>(p1_, p2_)(rng);
    case Kind::TruncatedNormal: {
      // Inverse CDF of the truncated law; an upper-tail window is inverted
      // through the survival function so deep truncations keep precision.
      const double a = (lower_ - p1_) / p2_;
      const double b = (upper_ - p1_) / p2_;
      const double u = unif(rng);
      double z;
      if (a > 0.0) {
        const double qa = normal_sf(a);
        const double qb = normal_sf(b);
        z = -normal_quantile(qa - u * (qa - qb));
      } else {
        const double pa = normal_cdf(a);
        const double pb = normal_cdf(b);
        z = normal_quantile(pa + u * (pb - pa));
      }
      return std::clamp(p1_ + p2_ * z, lower_, upper_);
    }
    case Kind::LogNormal: return std::exp(std::normal_distribution<double>(p1_, p2_)(rng));
    case Kind::Beta: {
      const double x = std::gamma_distribution<double>(p1_, 1.0)(rng);
      const double y = std::gamma_distribution<double>(p2_, 1.0)(rng);
      return x / (x + y);
    }
    case Kind::Uniform: return lower_ + (upper_ - lower_) * unif(rng);
  }
  return 0.0;
}

std::string Distribution::describe() const {
  std::ostringstream os;
  os << to_string(kind_) << '(';
  switch (kind_) {
    case Kind::Normal: os << "mean=" << p1_ << ", std=" << p2_; break;
    case Kind::TruncatedNormal:
      os << "mean=" << p1_ << ", std=" << p2_ << ", lower=" << lower_ << ", upper=" << upper_;
      break;
    case Kind::LogNormal: os << "mu_hat=" << p1_ << ", sigma_hat=" << p2_; break;
    case Kind::Beta: os << "a=" << p1_ << ", b=" << p2_; break;
    case Kind::Uniform: os << "lower=" << lower_ << ", upper=" << upper_; break;
  }
  os << ')';
  return os.str();
}

}  // namespace mcbench::prob
