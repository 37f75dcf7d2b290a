#pragma once

// Forward-mode automatic differentiation with dual numbers.
//
// A Dual<N> carries a value and N tangents, one per seeded input, so a single
// pass through a scalar-templated computation yields the full gradient.
// N = Eigen::Dynamic is supported; in that case a zero-length tangent stands
// for a constant and mixes freely with seeded values.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <utility>

#include "mcbench/errors.hpp"

namespace mcbench::ad {

template <int N = Eigen::Dynamic>
struct Dual {
  using Tangent = Eigen::Matrix<double, N, 1>;

  double val = 0.0;
  Tangent der;

  Dual() : der(zero_tangent()) {}
  Dual(double v) : val(v), der(zero_tangent()) {}  // NOLINT: implicit by design of scalar templating
  Dual(double v, Tangent d) : val(v), der(std::move(d)) {}

  /// Seeded input: tangent is the i-th unit vector of length `size`.
  static Dual variable(double v, Eigen::Index i, Eigen::Index size) {
    Tangent d = Tangent::Zero(size);
    d(i) = 1.0;
    return {v, std::move(d)};
  }

  Dual& operator+=(const Dual& o) { *this = *this + o; return *this; }
  Dual& operator-=(const Dual& o) { *this = *this - o; return *this; }
  Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

  static Tangent zero_tangent() {
    if constexpr (N == Eigen::Dynamic) {
      return Tangent();
    } else {
      return Tangent::Zero();
    }
  }
};

namespace detail {

// ca*a + cb*b, treating an empty dynamic tangent as zero.
template <int N>
typename Dual<N>::Tangent combine(double ca, const typename Dual<N>::Tangent& a, double cb,
                                  const typename Dual<N>::Tangent& b) {
  if constexpr (N == Eigen::Dynamic) {
    if (a.size() == 0) return cb * b;
    if (b.size() == 0) return ca * a;
  }
  return ca * a + cb * b;
}

// Chain rule for unary functions: f'(x) * dx.
template <int N>
Dual<N> chain(const Dual<N>& x, double fx, double dfx) {
  return {fx, dfx * x.der};
}

}  // namespace detail

template <int N>
Dual<N> operator+(const Dual<N>& a, const Dual<N>& b) {
  return {a.val + b.val, detail::combine<N>(1.0, a.der, 1.0, b.der)};
}
template <int N>
Dual<N> operator-(const Dual<N>& a, const Dual<N>& b) {
  return {a.val - b.val, detail::combine<N>(1.0, a.der, -1.0, b.der)};
}
template <int N>
Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
  return {a.val * b.val, detail::combine<N>(b.val, a.der, a.val, b.der)};
}
template <int N>
Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
  const double inv = 1.0 / b.val;
  const double q = a.val / b.val;
  return {q, detail::combine<N>(inv, a.der, -q * inv, b.der)};
}
template <int N>
Dual<N> operator-(const Dual<N>& a) {
  return {-a.val, -a.der};
}
template <int N>
Dual<N> operator+(const Dual<N>& a) {
  return a;
}

template <int N>
Dual<N> operator+(const Dual<N>& a, double b) { return {a.val + b, a.der}; }
template <int N>
Dual<N> operator+(double a, const Dual<N>& b) { return {a + b.val, b.der}; }
template <int N>
Dual<N> operator-(const Dual<N>& a, double b) { return {a.val - b, a.der}; }
template <int N>
Dual<N> operator-(double a, const Dual<N>& b) { return {a - b.val, -b.der}; }
template <int N>
Dual<N> operator*(const Dual<N>& a, double b) { return {a.val * b, b * a.der}; }
template <int N>
Dual<N> operator*(double a, const Dual<N>& b) { return {a * b.val, a * b.der}; }
template <int N>
Dual<N> operator/(const Dual<N>& a, double b) { return {a.val / b, a.der / b}; }
template <int N>
Dual<N> operator/(double a, const Dual<N>& b) {
  const double q = a / b.val;
  return {q, (-q / b.val) * b.der};
}

// Comparisons see only the value, so branching never depends on tangents.
template <int N> bool operator<(const Dual<N>& a, const Dual<N>& b) { return a.val < b.val; }
template <int N> bool operator>(const Dual<N>& a, const Dual<N>& b) { return a.val > b.val; }
template <int N> bool operator<=(const Dual<N>& a, const Dual<N>& b) { return a.val <= b.val; }
template <int N> bool operator>=(const Dual<N>& a, const Dual<N>& b) { return a.val >= b.val; }
template <int N> bool operator==(const Dual<N>& a, const Dual<N>& b) { return a.val == b.val; }
template <int N> bool operator!=(const Dual<N>& a, const Dual<N>& b) { return a.val != b.val; }
template <int N> bool operator<(const Dual<N>& a, double b) { return a.val < b; }
template <int N> bool operator>(const Dual<N>& a, double b) { return a.val > b; }
template <int N> bool operator<=(const Dual<N>& a, double b) { return a.val <= b; }
template <int N> bool operator>=(const Dual<N>& a, double b) { return a.val >= b; }
template <int N> bool operator<(double a, const Dual<N>& b) { return a < b.val; }
template <int N> bool operator>(double a, const Dual<N>& b) { return a > b.val; }
template <int N> bool operator<=(double a, const Dual<N>& b) { return a <= b.val; }
template <int N> bool operator>=(double a, const Dual<N>& b) { return a >= b.val; }

template <int N>
Dual<N> exp(const Dual<N>& x) {
  const double e = std::exp(x.val);
  return detail::chain(x, e, e);
}
template <int N>
Dual<N> log(const Dual<N>& x) {
  return detail::chain(x, std::log(x.val), 1.0 / x.val);
}
template <int N>
Dual<N> log1p(const Dual<N>& x) {
  return detail::chain(x, std::log1p(x.val), 1.0 / (1.0 + x.val));
}
template <int N>
Dual<N> sqrt(const Dual<N>& x) {
  const double s = std::sqrt(x.val);
  return detail::chain(x, s, 0.5 / s);
}
template <int N>
Dual<N> pow(const Dual<N>& x, double p) {
  const double v = std::pow(x.val, p);
  return detail::chain(x, v, p * std::pow(x.val, p - 1.0));
}
template <int N>
Dual<N> pow(const Dual<N>& x, const Dual<N>& p) {
  return exp(p * log(x));
}
template <int N>
Dual<N> pow(double x, const Dual<N>& p) {
  const double v = std::pow(x, p.val);
  return detail::chain(p, v, v * std::log(x));
}
template <int N>
Dual<N> erf(const Dual<N>& x) {
  constexpr double two_over_sqrt_pi = 1.1283791670955126;
  return detail::chain(x, std::erf(x.val), two_over_sqrt_pi * std::exp(-x.val * x.val));
}
template <int N>
Dual<N> erfc(const Dual<N>& x) {
  constexpr double two_over_sqrt_pi = 1.1283791670955126;
  return detail::chain(x, std::erfc(x.val), -two_over_sqrt_pi * std::exp(-x.val * x.val));
}
template <int N>
Dual<N> abs(const Dual<N>& x) {
  return x.val < 0.0 ? -x : x;
}
template <int N>
Dual<N> tanh(const Dual<N>& x) {
  const double t = std::tanh(x.val);
  return detail::chain(x, t, 1.0 - t * t);
}
template <int N>
bool isfinite(const Dual<N>& x) {
  return std::isfinite(x.val) && x.der.allFinite();
}

/// Value part of a plain or dual scalar.
inline double value(double x) { return x; }
template <int N>
double value(const Dual<N>& x) { return x.val; }

template <class T>
inline constexpr bool is_dual_v = false;
template <int N>
inline constexpr bool is_dual_v<Dual<N>> = true;

/// Calls fn.template operator()<N>() with N = p for small p, Eigen::Dynamic otherwise,
/// so hot loops get fixed-size tangents without allocation.
template <class Fn>
decltype(auto) with_static_dim(Eigen::Index p, Fn&& fn) {
  switch (p) {
    case 1: return fn.template operator()<1>();
    case 2: return fn.template operator()<2>();
    case 3: return fn.template operator()<3>();
    case 4: return fn.template operator()<4>();
    case 5: return fn.template operator()<5>();
    case 6: return fn.template operator()<6>();
    case 7: return fn.template operator()<7>();
    case 8: return fn.template operator()<8>();
    default: return fn.template operator()<Eigen::Dynamic>();
  }
}

/// Seeds every component of `x` as an independent variable.
template <int N>
Eigen::Matrix<Dual<N>, Eigen::Dynamic, 1> seed(const Eigen::VectorXd& x) {
  const Eigen::Index p = x.size();
  Eigen::Matrix<Dual<N>, Eigen::Dynamic, 1> out(p);
  for (Eigen::Index i = 0; i < p; ++i) out(i) = Dual<N>::variable(x(i), i, p);
  return out;
}

/// Tangent vector of a result as a dense gradient (zeros for constants).
template <int N>
Eigen::VectorXd tangent_of(const Dual<N>& y, Eigen::Index p) {
  if (y.der.size() == 0) return Eigen::VectorXd::Zero(p);
  return y.der;
}

/// Value and gradient of a scalar function in one forward pass.
/// `f` must be callable with an Eigen vector of Dual<N> and return Dual<N>.
template <int N = Eigen::Dynamic, class F>
std::pair<double, Eigen::VectorXd> value_and_gradient(F&& f, const Eigen::VectorXd& theta) {
  const auto y = f(seed<N>(theta));
  if (!std::isfinite(y.val) || !y.der.allFinite()) {
    throw EvaluationError("non-finite value or tangent in dual evaluation");
  }
  return {y.val, tangent_of<N>(y, theta.size())};
}

template <int N = Eigen::Dynamic, class F>
Eigen::VectorXd gradient(F&& f, const Eigen::VectorXd& theta) {
  return value_and_gradient<N>(std::forward<F>(f), theta).second;
}

}  // namespace mcbench::ad

namespace Eigen {

template <int N>
struct NumTraits<mcbench::ad::Dual<N>> : NumTraits<double> {
  using Real = mcbench::ad::Dual<N>;
  using NonInteger = mcbench::ad::Dual<N>;
  using Nested = mcbench::ad::Dual<N>;
  using Literal = double;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 3,
    MulCost = 3
  };
};

template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<mcbench::ad::Dual<N>, double, BinaryOp> {
  using ReturnType = mcbench::ad::Dual<N>;
};
template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<double, mcbench::ad::Dual<N>, BinaryOp> {
  using ReturnType = mcbench::ad::Dual<N>;
};

}  // namespace Eigen
