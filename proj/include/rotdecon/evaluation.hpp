#pragma once

#include "rotdecon/copula.hpp"
#include "rotdecon/sampler.hpp"
#include "rotdecon/types.hpp"

#include <vector>

namespace rotdecon {

/// Posterior-mean density at a set of points (columns of `points`).
struct DensityEstimate {
  Matrix points;
  Vector values;
  Matrix per_draw;  ///< draws x points, filled on request
};

/// Densities of the retained draws.
std::vector<JointDensityModel> draw_models(const PosteriorDraws& draws);

/// Average of exp(copula_log_density) over the models. `scale` maps points
/// into model units (x -> scale o x) and multiplies by the Jacobian; an
/// empty scale means the identity.
DensityEstimate estimate_density(const std::vector<JointDensityModel>& models, const Matrix& points,
                                 const Vector& scale = Vector(), bool keep_per_draw = false);
DensityEstimate estimate_density(const PosteriorDraws& draws, const Matrix& points, const Vector& scale = Vector(),
                                 bool keep_per_draw = false);

/// Posterior-mean marginal density of dimension l on a grid.
Vector estimate_marginal(const std::vector<JointDensityModel>& models, int l, const Vector& grid,
                         const Vector& scale = Vector());

/// Density of one model at the points (no averaging).
Vector model_density(const JointDensityModel& model, const Matrix& points);

/// mean_m (f(x_m) - fhat(x_m))^2 / p0(x_m).
double ise_joint(const Vector& f_true, const Vector& f_est, const Vector& p0);

/// sum_{i >= 1} (f(x_i) - fhat(x_i))^2 (x_i - x_{i-1}) on a sorted grid.
double ise_marginal(const Vector& f_true, const Vector& f_est, const Vector& grid);

struct HarmonicEvidence {
  double log_evidence{};
  double mc_se{};  ///< delta-method standard error of log_evidence
};

/// -log mean exp(-loglik), max-shifted.
HarmonicEvidence harmonic_log_evidence(const std::vector<double>& loglik);

struct BayesFactor {
  double value{};
  double log_value{};
  double log_mc_se{};
};

/// Harmonic-mean Bayes factor of model a over model b (>= 100 draws each).
BayesFactor bayes_factor_harmonic(const std::vector<double>& loglik_a, const std::vector<double>& loglik_b);

struct ScalingFit {
  double slope{};
  double intercept{};
  double slope_se{};
};

/// Least-squares fit of log t on log d (at least 3 points).
ScalingFit runtime_scaling(const std::vector<double>& dims, const std::vector<double>& seconds);

/// Median, used to summarize ISEs across replications.
double median(std::vector<double> v);

}  // namespace rotdecon
