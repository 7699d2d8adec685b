#pragma once
// Independent reference computations used only by the tests.

#include <rotdecon/types.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using rotdecon::Matrix;
using rotdecon::Vector;

/// Adaptive Gauss-Kronrod on [a, b] (bounds may be infinite).
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, tol);
}

/// Two-sided one-sample Kolmogorov-Smirnov p-value (Stephens' approximation).
inline double ks_pvalue(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  const double lam = (sn + 0.12 + 0.11 / sn) * d;
  double q = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    q += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

/// Textbook recursive Cox-de Boor B_{j,p}(x) on an explicit knot vector
/// (right-continuous, with the last nonempty interval closed).
inline double cox_de_boor(const std::vector<double>& t, int j, int p, double x) {
  if (p == 0) {
    const bool last = (x == t.back()) && t[j] < t[j + 1] && t[j + 1] == t.back();
    return ((t[j] <= x && x < t[j + 1]) || last) ? 1.0 : 0.0;
  }
  double v = 0.0;
  const double d1 = t[j + p] - t[j];
  const double d2 = t[j + p + 1] - t[j + 1];
  if (d1 > 0.0) v += (x - t[j]) / d1 * cox_de_boor(t, j, p - 1, x);
  if (d2 > 0.0) v += (t[j + p + 1] - x) / d2 * cox_de_boor(t, j + 1, p - 1, x);
  return v;
}

/// Chi-square upper tail probability.
inline double chi2_sf(double x, double dof) { return boost::math::gamma_q(dof / 2.0, x / 2.0); }

/// Rodrigues formula exp([w]_x) for w in R^3.
inline Matrix so3_exp(const Vector& w) {
  const double th = w.norm();
  Matrix k(3, 3);
  k << 0, -w(2), w(1), w(2), 0, -w(0), -w(1), w(0), 0;
  Matrix r = Matrix::Identity(3, 3);
  if (th < 1e-12) return r + k;
  return r + std::sin(th) / th * k + (1.0 - std::cos(th)) / (th * th) * k * k;
}

}  // namespace oracle
