#pragma once

#include "rotdecon/copula.hpp"
#include "rotdecon/spline.hpp"
#include "rotdecon/types.hpp"

#include <string>
#include <vector>

namespace rotdecon {

/// Replicates per subject; w[i] is d x m_i (one column per replicate).
struct ReplicateDataset {
  int d{};
  std::vector<Matrix> w;
  std::vector<std::string> subject_ids;

  int n() const { return static_cast<int>(w.size()); }
  int total_replicates() const;
  /// Throws ValidationError on shape problems, non-finite values or m_i < 3.
  void validate() const;
};

/// kappa_l(x) = B(x)^T beta_kappa.row(l), s^2(||x|| / d) = B(||x|| / d)^T beta_s.
struct HeteroFuncs {
  CubicBasis basis;
  Matrix beta_kappa;  ///< d x K_kappa
  Vector beta_s;      ///< K_s

  Vector kappa(const Vector& x) const;
  double s2(const Vector& x) const;
  double s2_argument(const Vector& x) const { return x.norm() / static_cast<double>(x.size()); }
};

/// Prior hyperparameters. Truncated-normal priors on the spline
/// coefficients use fixed variances.
struct Hyperparameters {
  double mu0{0.0};
  double sigma0_sq{1.0};
  double a0{1.0};
  double b0{1.0};
  double alpha{1.0};  ///< Dirichlet concentration: each weight gets alpha / K
  Vector mu_s;
  double sigma_s_sq{1.0};
  Matrix mu_kappa;    ///< d x K_kappa
  Vector sigma_kappa_sq;  ///< per dimension
};

struct ModelParams {
  HeteroFuncs hetero;
  Vector mu;        ///< K shared atom means
  Vector sigma2;    ///< K shared atom variances
  Matrix weights;   ///< d x K
  CorrelationAngles angles;
  Hyperparameters hyper;
  double lower{0.0};
  double upper{10.0};

  int dim() const { return static_cast<int>(weights.rows()); }
  int num_atoms() const { return static_cast<int>(mu.size()); }
  JointDensityModel density() const;
};

struct LatentState {
  Matrix x;              ///< d x n
  Eigen::MatrixXi labels;  ///< d x n, zero-based atom index
};

}  // namespace rotdecon
