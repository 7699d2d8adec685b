#include "rotdecon/normal.hpp"

#include "rotdecon/types.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>

namespace rotdecon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailSwitch = -30.0;

// Mills-ratio series for log Phi(z), z << 0.
double lower_tail_logcdf(double z) {
  const double z2 = z * z;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= -(2.0 * k - 1.0) / z2;
    sum += term;
  }
  return -0.5 * z2 - kLogSqrt2Pi - std::log(-z) + std::log(sum);
}

}  // namespace

double norm_logpdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double norm_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double norm_logcdf(double z) {
  if (std::isnan(z)) return z;
  if (z == -kInf) return -kInf;
  if (z < kTailSwitch) return lower_tail_logcdf(z);
  if (z > 5.0) return std::log1p(-norm_sf(z));
  return std::log(norm_cdf(z));
}

double norm_logsf(double z) { return norm_logcdf(-z); }

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double norm_log_diff_cdf(double a, double b) {
  if (std::isnan(a) || std::isnan(b) || a > b) throw DomainError("norm_log_diff_cdf: need a <= b");
  if (a == b) return -kInf;
  if (b <= 0.0) {
    // Both in the lower half: log Phi(b) + log(1 - Phi(a)/Phi(b)).
    const double lb = norm_logcdf(b);
    const double la = norm_logcdf(a);
    return lb + std::log1p(-std::exp(la - lb));
  }
  if (a >= 0.0) {
    const double la = norm_logsf(a);
    const double lb = norm_logsf(b);
    return la + std::log1p(-std::exp(lb - la));
  }
  // Straddles zero: the mass is at least Phi(b) - 1/2 + 1/2 - Phi(a), no cancellation.
  return std::log(1.0 - norm_cdf(a) - norm_sf(b));
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("norm_quantile: p must lie in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double norm_quantile_logp(double log_p) {
  if (!(log_p < 0.0)) throw DomainError("norm_quantile_logp: need log_p < 0");
  if (log_p > -700.0) {
    const double p = std::exp(log_p);
    if (p < 0.5) return norm_quantile(p);
    const double q = -std::expm1(log_p);
    return -boost::math::quantile(boost::math::normal_distribution<double>(), q);
  }
  // Deep lower tail: asymptotic start, Newton on log Phi.
  const double t = -2.0 * log_p;
  double z = -std::sqrt(t - std::log(t) - std::log(2.0 * M_PI));
  for (int it = 0; it < 50; ++it) {
    const double f = norm_logcdf(z) - log_p;
    const double slope = std::exp(norm_logpdf(z) - norm_logcdf(z));
    const double step = f / slope;
    z -= step;
    if (std::abs(step) <= 1e-15 * std::abs(z)) break;
  }
  return z;
}

}  // namespace rotdecon
