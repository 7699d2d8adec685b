#include "rotdecon/truncnorm.hpp"

#include "rotdecon/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rotdecon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double open_uniform(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  while (u <= 0.0) u = unif(rng);
  return u;
}

}  // namespace

TruncatedNormal::TruncatedNormal(double mu, double sigma2, double lower, double upper)
    : mu_(mu), lower_(lower), upper_(upper) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2) || !std::isfinite(mu))
    throw DomainError("TruncatedNormal: need finite mu and sigma2 > 0");
  if (std::isnan(lower) || std::isnan(upper) || !(lower < upper))
    throw DomainError("TruncatedNormal: need lower < upper");
  sigma_ = std::sqrt(sigma2);
  alpha_ = (lower - mu) / sigma_;
  beta_ = (upper - mu) / sigma_;
  log_mass_ = norm_log_diff_cdf(alpha_, beta_);
  if (!std::isfinite(log_mass_)) throw DomainError("TruncatedNormal: no mass inside the bounds");
}

double tnorm_log_mass(double mu, double sigma2, double lower, double upper) {
  const double s = std::sqrt(sigma2);
  return norm_log_diff_cdf((lower - mu) / s, (upper - mu) / s);
}

double TruncatedNormal::logpdf(double x) const {
  if (!(x >= lower_ && x <= upper_)) return -kInf;
  const double z = (x - mu_) / sigma_;
  return norm_logpdf(z) - std::log(sigma_) - log_mass_;
}

double TruncatedNormal::pdf(double x) const { return std::exp(logpdf(x)); }

double TruncatedNormal::cdf(double x) const {
  if (x <= lower_) return 0.0;
  if (x >= upper_) return 1.0;
  const double z = (x - mu_) / sigma_;
  return std::min(1.0, std::exp(norm_log_diff_cdf(alpha_, z) - log_mass_));
}

double TruncatedNormal::sf(double x) const {
  if (x <= lower_) return 1.0;
  if (x >= upper_) return 0.0;
  const double z = (x - mu_) / sigma_;
  return std::min(1.0, std::exp(norm_log_diff_cdf(z, beta_) - log_mass_));
}

double TruncatedNormal::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("TruncatedNormal::quantile: p must lie in (0,1)");
  double z;
  if (beta_ <= 0.0) {
    const double lp = log_add_exp(norm_logcdf(alpha_) + std::log1p(-p), norm_logcdf(beta_) + std::log(p));
    z = norm_quantile_logp(std::min(lp, -1e-300));
  } else if (alpha_ >= 0.0) {
    const double lq = log_add_exp(norm_logsf(alpha_) + std::log1p(-p), norm_logsf(beta_) + std::log(p));
    z = -norm_quantile_logp(std::min(lq, -1e-300));
  } else {
    const double mass = std::exp(log_mass_);
    const double below = norm_cdf(alpha_) + p * mass;
    if (below <= 0.5) {
      z = norm_quantile(below);
    } else {
      z = -norm_quantile(norm_sf(beta_) + (1.0 - p) * mass);
    }
  }
  z = std::clamp(z, alpha_, beta_);
  return std::clamp(mu_ + sigma_ * z, lower_, upper_);
}

double TruncatedNormal::sample(Rng& rng) const { return quantile(open_uniform(rng)); }

void TruncNormMixture::validate() const {
  const auto k = weights.size();
  if (k < 1 || mu.size() != k || sigma2.size() != k) throw DomainError("TruncNormMixture: size mismatch");
  if (!(lower < upper)) throw DomainError("TruncNormMixture: need lower < upper");
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12)
    throw DomainError("TruncNormMixture: weights must lie on the simplex");
  if (!(sigma2.array() > 0.0).all()) throw DomainError("TruncNormMixture: sigma2 must be positive");
}

double TruncNormMixture::logpdf(double x) const {
  double acc = -kInf;
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    if (weights(k) <= 0.0) continue;
    acc = log_add_exp(acc, std::log(weights(k)) + TruncatedNormal(mu(k), sigma2(k), lower, upper).logpdf(x));
  }
  return acc;
}

double TruncNormMixture::pdf(double x) const { return std::exp(logpdf(x)); }

double TruncNormMixture::cdf(double x) const {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < weights.size(); ++k)
    if (weights(k) > 0.0) acc += weights(k) * TruncatedNormal(mu(k), sigma2(k), lower, upper).cdf(x);
  return std::min(acc, 1.0);
}

double TruncNormMixture::sf(double x) const {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < weights.size(); ++k)
    if (weights(k) > 0.0) acc += weights(k) * TruncatedNormal(mu(k), sigma2(k), lower, upper).sf(x);
  return std::min(acc, 1.0);
}

double TruncNormMixture::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("TruncNormMixture::quantile: p must lie in (0,1)");
  // The mixture quantile lies between the smallest and largest component quantiles.
  double lo = kInf, hi = -kInf;
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    if (weights(k) <= 0.0) continue;
    const double q = TruncatedNormal(mu(k), sigma2(k), lower, upper).quantile(p);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  // Residual evaluated on the side of the distribution with more precision.
  const bool upper_side = p > 0.5;
  auto resid = [&](double x) { return upper_side ? (1.0 - p) - sf(x) : cdf(x) - p; };
  if (hi - lo <= 0.0) return lo;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(x)); ++it) {
    const double r = resid(x);
    if (r == 0.0) return x;
    if (r < 0.0) lo = x; else hi = x;
    const double dens = pdf(x);
    double next = dens > 0.0 ? x - r / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

double TruncNormMixture::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  Eigen::Index k = 0;
  for (; k + 1 < weights.size(); ++k) {
    acc += weights(k);
    if (u < acc) break;
  }
  return TruncatedNormal(mu(k), sigma2(k), lower, upper).sample(rng);
}

}  // namespace rotdecon
