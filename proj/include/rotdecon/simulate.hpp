#pragma once

#include "rotdecon/copula.hpp"
#include "rotdecon/model.hpp"
#include "rotdecon/types.hpp"

#include <cstdint>

namespace rotdecon {

enum class ErrorCase { well_specified, mis_specified };

struct SimScenario {
  int n{1000};
  int m{3};
  int d{3};
  ErrorCase error_case{ErrorCase::well_specified};
  double kappa_scale{60.0};    ///< kappa_l(x) = kappa_scale / x_l
  double s_scale{150.0};       ///< s(||x|| / d) = ||x|| / s_scale
  double misspec_scale{4.0};   ///< w = x + (x / misspec_scale) o eps
  /// Use log-mean +s^2/2 for the length factor (so E r = exp(s^2)) instead
  /// of the mean-one -s^2/2.
  bool lognormal_positive_drift{false};
  std::uint64_t seed{1};

  void validate() const;
};

/// d = 3: correlations 0.7^|i-j|, weights (.25, .5, .25), per-dimension
/// means (2,2,3), (2,3,5), (2,2,5), variance 0.75^2, bounds [0, 6].
/// Other d: same correlation structure and weights, means Unif(1, 10),
/// bounds [0, 10]. Per-dimension atoms are laid out as d blocks of 3 shared
/// atoms, with dimension l putting its weights on block l.
JointDensityModel generate_truth_config(int d, Rng& rng);

/// n draws from the copula model, returned as d x n.
Matrix generate_latent(const JointDensityModel& truth, int n, Rng& rng);

/// One replicate r C Q x with kappa_l = kappa_scale / x_l.
Vector wellspec_replicate(const Vector& x, const SimScenario& sc, Rng& rng);
ReplicateDataset generate_replicates_wellspec(const Matrix& x, const SimScenario& sc, Rng& rng);
ReplicateDataset generate_replicates_misspec(const Matrix& x, const SimScenario& sc, Rng& rng);

struct SimulatedData {
  JointDensityModel truth;
  Matrix x;  ///< d x n
  ReplicateDataset data;
};

/// Truth, latent values and replicates, all from sc.seed.
SimulatedData simulate(const SimScenario& sc);

}  // namespace rotdecon
