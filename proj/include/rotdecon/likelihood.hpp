#pragma once

#include "rotdecon/model.hpp"

namespace rotdecon {

/// Quantities of f(w | x) that depend on x only.
struct SubjectGeometry {
  Vector f;         ///< kappa_l(x_l)
  Vector e;         ///< approximate E(Q_ll) = 1 / C_ll
  double log_m{};   ///< approximate log M(F)
  double s2{};      ///< s^2(||x|| / d)
  double norm_x{};
  bool valid{};     ///< false if the concentration regime or s^2 > 0 fails
};

SubjectGeometry subject_geometry(const HeteroFuncs& hetero, const Vector& x);

/// C(x) = diag(1 / E(Q_ll)). Throws RegimeError outside the regime.
Matrix scaling_matrix(const HeteroFuncs& hetero, const Vector& x);

/// log f(w | x): trace(G(C^{-1} w, x) F) - log M(F) - log r* plus the
/// log-normal density of log r* with mean -s^2/2 and variance s^2,
/// r* = ||C^{-1} w|| / ||x||.
double cond_loglik(const Vector& w, const Vector& x, const SubjectGeometry& geom);
/// Throws DomainError for zero vectors and RegimeError outside the regime.
double cond_loglik(const Vector& w, const Vector& x, const HeteroFuncs& hetero);

/// Sum over the replicates of one subject; -inf outside the regime.
double subject_loglik(const Matrix& w, const Vector& x, const HeteroFuncs& hetero);

/// log r* for every replicate of a subject (the only w-dependence of the
/// s^2 block). Used by the beta_s update.
Vector subject_log_ratios(const Matrix& w, const SubjectGeometry& geom);

/// d/ds2 of the log-normal block summed over log ratios `lr`.
double lognormal_block_ds2(const Vector& lr, double s2);
double lognormal_block(const Vector& lr, double s2);

/// Negative log posterior of beta_s given x (likelihood through the s^2
/// block plus the truncated-normal prior, up to constants) and its gradient.
/// `log_ratios[i]` holds subject i's log r* values, `args[i]` = ||x_i|| / d.
struct BetaSTerms {
  std::vector<Vector> log_ratios;
  std::vector<double> args;
};
double beta_s_neg_log_post(const Vector& beta_s, const CubicBasis& basis, const BetaSTerms& terms,
                           const Vector& mu_s, double sigma_s_sq);
Vector grad_beta_s(const Vector& beta_s, const CubicBasis& basis, const BetaSTerms& terms, const Vector& mu_s,
                   double sigma_s_sq);

/// Sufficient statistics of the values assigned to one atom.
struct AtomStats {
  double n{};
  double s1{};
  double s2{};
};

/// Negative log full conditional of one atom in (mu, eta = log sigma^2)
/// coordinates, including the Jacobian of the log transform.
double atom_neg_log_post(double mu, double eta, const AtomStats& st, const Hyperparameters& hyper, double lower,
                         double upper);
Vector grad_atoms(double mu, double eta, const AtomStats& st, const Hyperparameters& hyper, double lower,
                  double upper);

/// Full joint log posterior: replicate likelihood, copula density of every
/// x_i, truncated-normal priors on the spline coefficients, normal prior on
/// the atom means and inverse-gamma prior on the atom variances.
double joint_log_posterior(const ModelParams& params, const LatentState& latent, const ReplicateDataset& data);

/// Approximate cov(w | x) from the variance of diag(Q) alone: rotation
/// part C diag(x) V diag(x) C scaled by exp(s^2), plus (exp(s^2) - 1) x x^T.
/// Misses the O(1 / f) off-diagonal rotation variance; see cond_cov_full.
Matrix cond_cov_diagnostic(const Vector& f, const Vector& x, double s2);

/// First-order covariance that also keeps the off-diagonal rotation
/// variance: cov(Q x)_ll ~ sum_{k != l} x_k^2 / (f_l + f_k) and
/// cov(Q x)_lk ~ -x_l x_k / (f_l + f_k), plus the diag(x) V diag(x) term.
Matrix cond_cov_full(const Vector& f, const Vector& x, double s2);

/// h_l = x_l^{-2} E(Q_ll)^2 / sum_{k != l} 1 / (2 (f_l + f_k)^2).
Vector standardization_h(const Vector& f, const Vector& x);

}  // namespace rotdecon
