#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

// Central differences with a relative step h * max(1, |x_i|).
template <class F>
Eigen::VectorXd central_difference(F&& f, const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x(i)));
    Eigen::VectorXd a = x, b = x;
    a(i) += step;
    b(i) -= step;
    g(i) = (f(a) - f(b)) / (a(i) - b(i));
  }
  return g;
}

// Fourth-order five-point stencil. The larger default step keeps roundoff
// noise in the function (time-stepped models carry ~1e-9) out of the result.
template <class F>
Eigen::VectorXd five_point_difference(F&& f, const Eigen::VectorXd& x, double h = 1e-3) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x(i)));
    auto at = [&](double k) {
      Eigen::VectorXd y = x;
      y(i) += k * step;
      return f(y);
    };
    g(i) = (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * step);
  }
  return g;
}

// Worst componentwise relative error; components below `floor` in magnitude
// are compared absolutely.
inline double gradient_error(const Eigen::VectorXd& g, const Eigen::VectorXd& ref, double floor = 1e-12) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double d = std::abs(g(i) - ref(i));
    worst = std::max(worst, std::abs(ref(i)) < floor ? d : d / std::abs(ref(i)));
  }
  return worst;
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// Brute-force lag-t autocorrelation: lag covariance over (N - t), variance over N.
inline double autocorrelation(const std::vector<double>& x, std::size_t t) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0, ct = 0.0;
  for (std::size_t i = 0; i < n; ++i) c0 += (x[i] - mean) * (x[i] - mean);
  for (std::size_t i = 0; i + t < n; ++i) ct += (x[i] - mean) * (x[i + t] - mean);
  return (ct / static_cast<double>(n - t)) / (c0 / static_cast<double>(n));
}

}  // namespace oracle
