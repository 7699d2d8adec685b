#pragma once

#include "rotdecon/truncnorm.hpp"
#include "rotdecon/types.hpp"

#include <vector>

namespace rotdecon {

/// Hyperspherical angles of a unit-row lower-triangular factor V, R = V V^T.
/// Row m (zero-based, m >= 1) holds m angles; the last one lives in
/// [0, 2 pi], the others in [0, pi].
struct CorrelationAngles {
  int d{};
  std::vector<std::vector<double>> zeta;  ///< zeta[m][s], s < m; zeta[0] empty

  /// All angles pi/2, i.e. R = I.
  static CorrelationAngles identity(int d);
  int count() const { return d * (d - 1) / 2; }
  static double upper_bound(int m, int s) { return s == m - 1 ? 2.0 * M_PI : M_PI; }
  bool in_support() const;
};

Matrix angles_to_cholesky(const CorrelationAngles& angles);
Matrix angles_to_correlation(const CorrelationAngles& angles);
/// Inverse map through the Cholesky factor of a positive definite correlation matrix.
CorrelationAngles correlation_to_angles(const Matrix& r);

/// Inverse and log-determinant of R, with a diagonal lift (and rescaling to
/// unit diagonal) when the smallest eigenvalue is below 1e-8.
struct CorrelationFactor {
  Matrix inverse;
  double log_det{};
  bool regularized{};
};
CorrelationFactor factor_correlation(const Matrix& r);

/// Gaussian copula over truncated-normal mixtures with shared atoms and
/// per-dimension weights (row l of `weights` is the simplex for dimension l).
struct JointDensityModel {
  Vector mu;        ///< K atom means
  Vector sigma2;    ///< K atom variances
  Matrix weights;   ///< d x K
  double lower{0.0};
  double upper{1.0};
  CorrelationAngles angles;

  int dim() const { return static_cast<int>(weights.rows()); }
  TruncNormMixture marginal(int l) const;
  void validate() const;
};

/// Normal score Phi^{-1}(F(x)) with F clipped to [1e-15, 1 - 1e-15]; taken
/// from the survival side above the median.
double normal_score(const TruncNormMixture& m, double x);

/// Status of a density evaluation at x.
enum class DensityStatus { ok, boundary };

/// log f_x(x) = -0.5 log|R| - 0.5 y^T (R^{-1} - I) y + sum_l log f_l(x_l).
/// Points on or outside the bounds give -inf with status `boundary`.
double copula_log_density(const JointDensityModel& model, const Vector& x, DensityStatus* status = nullptr);

/// Same, reusing a precomputed factor of R.
double copula_log_density(const JointDensityModel& model, const CorrelationFactor& factor, const Vector& x,
                          DensityStatus* status = nullptr);

Vector copula_sample(const JointDensityModel& model, Rng& rng);

/// Caches per-atom truncation masses, log weights and the factor of R for
/// repeated evaluation under one fixed model.
class MixtureEvaluator {
 public:
  explicit MixtureEvaluator(const JointDensityModel& model);

  int dim() const { return static_cast<int>(log_w_.rows()); }
  double logpdf(int l, double x) const;
  double cdf(int l, double x) const;
  double sf(int l, double x) const;
  double score(int l, double x) const;
  /// Normal scores of all coordinates.
  Vector scores(const Vector& x) const;
  double log_density(const Vector& x, DensityStatus* status = nullptr) const;
  const CorrelationFactor& factor() const { return factor_; }

 private:
  Vector mu_, sigma_, log_mass_;
  Matrix w_, log_w_;
  double lower_, upper_;
  CorrelationFactor factor_;
};

/// Log of the exact multivariate-normal target for the angles given normal
/// scores: -(n/2) log|R| - 0.5 tr(R^{-1} S), S = sum_i y_i y_i^T. A singular R
/// gives -inf when n > 0.
double angles_log_target(const CorrelationAngles& angles, const Matrix& scatter, int n);

}  // namespace rotdecon
