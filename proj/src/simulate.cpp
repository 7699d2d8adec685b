#include "rotdecon/simulate.hpp"

#include "rotdecon/mvmf.hpp"
#include "rotdecon/random.hpp"

#include <cmath>

namespace rotdecon {

void SimScenario::validate() const {
  if (n < 1) throw ValidationError("scenario: n must be at least 1");
  if (m < 3) throw ValidationError("scenario: m must be at least 3");
  if (d < 2) throw ValidationError("scenario: d must be at least 2");
  if (!(kappa_scale > 0.0) || !(s_scale > 0.0) || !(misspec_scale > 0.0))
    throw ValidationError("scenario: scales must be positive");
}

JointDensityModel generate_truth_config(int d, Rng& rng) {
  if (d < 2) throw DomainError("generate_truth_config: d must be at least 2");
  constexpr int kPerDim = 3;
  Matrix means(d, kPerDim);
  JointDensityModel m;
  if (d == 3) {
    means << 2, 2, 3, 2, 3, 5, 2, 2, 5;
    m.lower = 0.0;
    m.upper = 6.0;
  } else {
    std::uniform_real_distribution<double> unif(1.0, 10.0);
    for (int l = 0; l < d; ++l)
      for (int k = 0; k < kPerDim; ++k) means(l, k) = unif(rng);
    m.lower = 0.0;
    m.upper = 10.0;
  }
  const int k_total = d * kPerDim;
  m.mu.resize(k_total);
  m.sigma2 = Vector::Constant(k_total, 0.75 * 0.75);
  m.weights = Matrix::Zero(d, k_total);
  const double pi[kPerDim] = {0.25, 0.5, 0.25};
  for (int l = 0; l < d; ++l)
    for (int k = 0; k < kPerDim; ++k) {
      m.mu(l * kPerDim + k) = means(l, k);
      m.weights(l, l * kPerDim + k) = pi[k];
    }
  Matrix r(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) r(i, j) = std::pow(0.7, std::abs(i - j));
  m.angles = correlation_to_angles(r);
  return m;
}

Matrix generate_latent(const JointDensityModel& truth, int n, Rng& rng) {
  Matrix x(truth.dim(), n);
  for (int i = 0; i < n; ++i) x.col(i) = copula_sample(truth, rng);
  return x;
}

Vector wellspec_replicate(const Vector& x, const SimScenario& sc, Rng& rng) {
  if (!(x.array() > 0.0).all()) throw DomainError("wellspec_replicate: latent entries must be positive");
  const Vector f = sc.kappa_scale * x.cwiseInverse();
  const Vector e = mvmf_expected_diag(f);
  const double s = x.norm() / sc.s_scale;
  const double s2 = s * s;
  const double log_mean = sc.lognormal_positive_drift ? 0.5 * s2 : -0.5 * s2;
  const double r = std::exp(log_mean + s * std_normal(rng));
  const Matrix q = mvmf_sample(f, rng);
  return r * (q * x).cwiseQuotient(e);
}

ReplicateDataset generate_replicates_wellspec(const Matrix& x, const SimScenario& sc, Rng& rng) {
  ReplicateDataset data;
  data.d = static_cast<int>(x.rows());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    Matrix w(x.rows(), sc.m);
    for (int j = 0; j < sc.m; ++j) w.col(j) = wellspec_replicate(x.col(i), sc, rng);
    data.w.push_back(std::move(w));
    data.subject_ids.push_back(std::to_string(i + 1));
  }
  return data;
}

ReplicateDataset generate_replicates_misspec(const Matrix& x, const SimScenario& sc, Rng& rng) {
  ReplicateDataset data;
  data.d = static_cast<int>(x.rows());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    Matrix w(x.rows(), sc.m);
    for (int j = 0; j < sc.m; ++j)
      for (Eigen::Index l = 0; l < x.rows(); ++l) w(l, j) = x(l, i) + x(l, i) / sc.misspec_scale * std_normal(rng);
    data.w.push_back(std::move(w));
    data.subject_ids.push_back(std::to_string(i + 1));
  }
  return data;
}

SimulatedData simulate(const SimScenario& sc) {
  sc.validate();
  Rng rng(sc.seed);
  SimulatedData out;
  out.truth = generate_truth_config(sc.d, rng);
  out.x = generate_latent(out.truth, sc.n, rng);
  out.data = sc.error_case == ErrorCase::well_specified ? generate_replicates_wellspec(out.x, sc, rng)
                                                        : generate_replicates_misspec(out.x, sc, rng);
  return out;
}

}  // namespace rotdecon
