#pragma once

#include "rotdecon/model.hpp"
#include "rotdecon/types.hpp"

namespace rotdecon {

struct InitConfig {
  double rescale_target{10.0};  ///< largest replicate per dimension after rescaling
  double lower{0.0};
  double upper{10.0};
  int num_intervals{10};        ///< spline intervals; basis size is this + 3
  int num_atoms{10};
  int warm_start_sweeps{500};   ///< conjugate atom sweeps with x held fixed
  int kmeans_restarts{20};
  double spline_penalty{1.0};   ///< weight of the second-difference rows added to NNLS (0 = plain NNLS)
};

/// Per-dimension multiplicative rescaling w_l -> factor_l * w_l.
struct Rescaling {
  Vector factor;

  ReplicateDataset apply(const ReplicateDataset& data) const;
  /// Maps a latent point from original to model units.
  Vector to_model(const Vector& x) const { return factor.cwiseProduct(x); }
  /// log of the Jacobian prod_l factor_l.
  double log_jacobian() const { return factor.array().log().sum(); }
};

/// factor_l = target / max_{i,j} |w_{l,i,j}|.
Rescaling fit_rescaling(const ReplicateDataset& data, double target);

/// d x n matrix of within-subject replicate means.
Matrix subject_means(const ReplicateDataset& data);

struct InitResult {
  ModelParams params;
  LatentState latent;
  Matrix kappa_targets;  ///< d x n pointwise targets fed to NNLS
  Vector s2_targets;     ///< n pointwise targets fed to NNLS
};

/// Starting state for already rescaled data: x at subject means (pulled
/// inside the bounds), spline coefficients by NNLS on per-subject vMF and
/// log-length targets, atoms from k-means followed by conjugate sweeps,
/// R = I. Prior hyperparameters are centred at these estimates.
InitResult initialize(const ReplicateDataset& data, const InitConfig& cfg, Rng& rng);

}  // namespace rotdecon
