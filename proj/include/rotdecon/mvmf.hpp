#pragma once

#include "rotdecon/types.hpp"

namespace rotdecon {

/// Matrix von Mises-Fisher law on d x d orthogonal matrices with density
/// proportional to etr(F Q^T), F = diag(f).
struct MvMFParams {
  Vector f;

  void validate() const;
};

/// Large-concentration approximation of log M(F), where M(F) is the integral
/// of etr(F Q^T) against the Haar probability measure on O(d).
double mvmf_log_norm_const(const Vector& f);

/// d log M / d f_l = 1 - sum_{k != l} 1 / (2 (f_l + f_k)).
Vector mvmf_log_norm_const_grad(const Vector& f);

/// Approximate E(Q_ll); the same expression as the gradient above.
/// Throws RegimeError if any entry is <= 0.
Vector mvmf_expected_diag(const Vector& f);

/// Draw from MvMF(diag(f)) by Gibbs sweeps over pairs of columns, started at I.
Matrix mvmf_sample(const Vector& f, Rng& rng, int sweeps = 50);

/// Haar-distributed element of O(d) (QR of a Gaussian matrix, sign-fixed R).
Matrix haar_orthogonal(int d, Rng& rng);

/// log I_0(x) for x >= 0, finite for large x.
double log_bessel_i0(double x);

/// Von Mises angle with location mu and concentration kappa, in (-pi, pi].
double von_mises_sample(double mu, double kappa, Rng& rng);

/// Wood's rejection sampler. conc = 0 gives the uniform law on the sphere.
Vector vmf_sample(const Vector& mean_dir, double conc, Rng& rng);

struct VmfFit {
  Vector mean_dir;
  double conc{};
};

/// Columns of `samples` are unit vectors. Mean direction is the normalized
/// resultant; concentration from the approximation rbar (d - rbar^2) / (1 - rbar^2).
VmfFit vmf_mle(const Matrix& samples);

}  // namespace rotdecon
