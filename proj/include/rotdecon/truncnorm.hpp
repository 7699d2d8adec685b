#pragma once

#include "rotdecon/types.hpp"

namespace rotdecon {

/// Normal(mu, sigma2) restricted to [lower, upper]. Bounds may be infinite.
class TruncatedNormal {
 public:
  TruncatedNormal(double mu, double sigma2, double lower, double upper);

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  /// log of the mass the untruncated normal puts on [lower, upper].
  double log_mass() const { return log_mass_; }

  double logpdf(double x) const;
  double pdf(double x) const;
  double cdf(double x) const;
  double sf(double x) const;
  double quantile(double p) const;
  double sample(Rng& rng) const;

 private:
  double mu_, sigma_, lower_, upper_;
  double alpha_, beta_;
  double log_mass_;
};

/// log of the normalizing mass of TN(mu, sigma2, [lower, upper]).
double tnorm_log_mass(double mu, double sigma2, double lower, double upper);

/// Mixture of truncated normals sharing the bounds.
struct TruncNormMixture {
  Vector weights;
  Vector mu;
  Vector sigma2;
  double lower{0.0};
  double upper{1.0};

  void validate() const;
  double logpdf(double x) const;
  double pdf(double x) const;
  double cdf(double x) const;
  double sf(double x) const;
  /// Bisection with Newton polish; |cdf(q) - p| small, x tolerance 1e-12.
  double quantile(double p) const;
  double sample(Rng& rng) const;
};

}  // namespace rotdecon
