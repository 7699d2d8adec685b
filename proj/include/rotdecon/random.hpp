#pragma once

#include "rotdecon/types.hpp"

namespace rotdecon {

// Distribution objects are built per call so the generator state alone
// determines the stream (needed for checkpoint/resume).

double std_normal(Rng& rng);
/// Uniform on the open interval (0,1).
double uniform01(Rng& rng);
/// log of a Gamma(shape, 1) draw; stable for tiny shapes.
double log_gamma_sample(double shape, Rng& rng);
/// Dirichlet(alpha) draw, computed in log space.
Vector dirichlet_sample(const Vector& alpha, Rng& rng);
/// Index drawn with probabilities proportional to exp(log_weights).
int categorical_log(const Vector& log_weights, Rng& rng);

/// Mean-one log-normal length factor: log r ~ N(-s2/2, s2).
struct LogNormalLength {
  double s2{};

  double log_mean() const { return -0.5 * s2; }
  double logpdf(double r) const;
  double sample(Rng& rng) const;
};

}  // namespace rotdecon
