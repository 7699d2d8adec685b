#include "rotdecon/copula.hpp"

#include "rotdecon/normal.hpp"
#include "rotdecon/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rotdecon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kClip = 1e-15;
constexpr double kMinEig = 1e-8;

}  // namespace

CorrelationAngles CorrelationAngles::identity(int d) {
  if (d < 1) throw DomainError("CorrelationAngles: d must be positive");
  CorrelationAngles a;
  a.d = d;
  a.zeta.resize(d);
  for (int m = 1; m < d; ++m) a.zeta[m].assign(m, M_PI / 2.0);
  return a;
}

bool CorrelationAngles::in_support() const {
  if (static_cast<int>(zeta.size()) != d) return false;
  for (int m = 0; m < d; ++m) {
    if (static_cast<int>(zeta[m].size()) != m) return false;
    for (int s = 0; s < m; ++s)
      if (!(zeta[m][s] >= 0.0 && zeta[m][s] <= upper_bound(m, s))) return false;
  }
  return true;
}

Matrix angles_to_cholesky(const CorrelationAngles& angles) {
  if (!angles.in_support()) throw DomainError("angles_to_cholesky: angles outside their support");
  const int d = angles.d;
  Matrix v = Matrix::Zero(d, d);
  v(0, 0) = 1.0;
  for (int m = 1; m < d; ++m) {
    double prod = 1.0;
    for (int k = 0; k < m; ++k) {
      v(m, k) = std::cos(angles.zeta[m][k]) * prod;
      prod *= std::sin(angles.zeta[m][k]);
    }
    v(m, m) = prod;
  }
  return v;
}

Matrix angles_to_correlation(const CorrelationAngles& angles) {
  const Matrix v = angles_to_cholesky(angles);
  Matrix r = v * v.transpose();
  r.diagonal().setOnes();
  return r;
}

CorrelationAngles correlation_to_angles(const Matrix& r) {
  const auto d = static_cast<int>(r.rows());
  Eigen::LLT<Matrix> llt(r);
  if (llt.info() != Eigen::Success) throw DomainError("correlation_to_angles: matrix is not positive definite");
  Matrix l = llt.matrixL();
  for (int m = 0; m < d; ++m) l.row(m) /= l.row(m).norm();
  CorrelationAngles a = CorrelationAngles::identity(d);
  for (int m = 1; m < d; ++m) {
    for (int k = 0; k < m - 1; ++k) {
      const double rest = l.row(m).segment(k + 1, m - k).norm();
      a.zeta[m][k] = std::atan2(rest, l(m, k));
    }
    double last = std::atan2(l(m, m), l(m, m - 1));
    if (last < 0.0) last += 2.0 * M_PI;
    a.zeta[m][m - 1] = last;
  }
  return a;
}

CorrelationFactor factor_correlation(const Matrix& r) {
  const auto d = r.rows();
  CorrelationFactor out;
  Matrix use = r;
  Eigen::SelfAdjointEigenSolver<Matrix> es(r, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < kMinEig) {
    use.diagonal().array() += kMinEig - min_eig;
    const Vector s = use.diagonal().cwiseSqrt().cwiseInverse();
    use = s.asDiagonal() * use * s.asDiagonal();
    out.regularized = true;
  }
  Eigen::LLT<Matrix> llt(use);
  out.inverse = llt.solve(Matrix::Identity(d, d));
  out.log_det = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
  return out;
}

TruncNormMixture JointDensityModel::marginal(int l) const {
  TruncNormMixture m;
  m.weights = weights.row(l).transpose();
  m.mu = mu;
  m.sigma2 = sigma2;
  m.lower = lower;
  m.upper = upper;
  return m;
}

void JointDensityModel::validate() const {
  if (weights.cols() != mu.size() || sigma2.size() != mu.size()) throw DomainError("JointDensityModel: atom count mismatch");
  if (angles.d != dim()) throw DomainError("JointDensityModel: angle dimension mismatch");
  for (int l = 0; l < dim(); ++l) marginal(l).validate();
  if (!angles.in_support()) throw DomainError("JointDensityModel: angles outside their support");
}

double normal_score(const TruncNormMixture& m, double x) {
  const double c = m.cdf(x);
  if (c < 0.5) return norm_quantile(std::max(c, kClip));
  return -norm_quantile(std::max(m.sf(x), kClip));
}

double copula_log_density(const JointDensityModel& model, const CorrelationFactor& factor, const Vector& x,
                          DensityStatus* status) {
  const int d = model.dim();
  if (status) *status = DensityStatus::ok;
  for (int l = 0; l < d; ++l) {
    if (!(x(l) > model.lower && x(l) < model.upper)) {
      if (status) *status = DensityStatus::boundary;
      return -kInf;
    }
  }
  Vector y(d);
  double marg = 0.0;
  for (int l = 0; l < d; ++l) {
    const TruncNormMixture m = model.marginal(l);
    y(l) = normal_score(m, x(l));
    marg += m.logpdf(x(l));
  }
  const double quad = y.dot(factor.inverse * y) - y.squaredNorm();
  return -0.5 * factor.log_det - 0.5 * quad + marg;
}

double copula_log_density(const JointDensityModel& model, const Vector& x, DensityStatus* status) {
  return copula_log_density(model, factor_correlation(angles_to_correlation(model.angles)), x, status);
}

Vector copula_sample(const JointDensityModel& model, Rng& rng) {
  const int d = model.dim();
  const Matrix v = angles_to_cholesky(model.angles);
  Vector z(d);
  for (int l = 0; l < d; ++l) z(l) = std_normal(rng);
  const Vector g = v * z;
  Vector x(d);
  for (int l = 0; l < d; ++l) {
    const double p = std::clamp(norm_cdf(g(l)), 1e-16, 1.0 - 1e-16);
    x(l) = model.marginal(l).quantile(p);
  }
  return x;
}

MixtureEvaluator::MixtureEvaluator(const JointDensityModel& model)
    : mu_(model.mu), w_(model.weights), lower_(model.lower), upper_(model.upper) {
  const auto k = mu_.size();
  sigma_ = model.sigma2.cwiseSqrt();
  log_mass_.resize(k);
  for (Eigen::Index j = 0; j < k; ++j)
    log_mass_(j) = norm_log_diff_cdf((lower_ - mu_(j)) / sigma_(j), (upper_ - mu_(j)) / sigma_(j));
  log_w_ = w_.array().log().matrix();
  factor_ = factor_correlation(angles_to_correlation(model.angles));
}

double MixtureEvaluator::logpdf(int l, double x) const {
  if (!(x >= lower_ && x <= upper_)) return -kInf;
  double acc = -kInf;
  for (Eigen::Index k = 0; k < mu_.size(); ++k) {
    if (!(w_(l, k) > 0.0)) continue;
    const double z = (x - mu_(k)) / sigma_(k);
    acc = log_add_exp(acc, log_w_(l, k) + norm_logpdf(z) - std::log(sigma_(k)) - log_mass_(k));
  }
  return acc;
}

double MixtureEvaluator::cdf(int l, double x) const {
  if (x <= lower_) return 0.0;
  if (x >= upper_) return 1.0;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < mu_.size(); ++k) {
    if (!(w_(l, k) > 0.0)) continue;
    const double a = (lower_ - mu_(k)) / sigma_(k), z = (x - mu_(k)) / sigma_(k);
    acc += w_(l, k) * std::exp(norm_log_diff_cdf(a, z) - log_mass_(k));
  }
  return std::min(acc, 1.0);
}

double MixtureEvaluator::sf(int l, double x) const {
  if (x <= lower_) return 1.0;
  if (x >= upper_) return 0.0;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < mu_.size(); ++k) {
    if (!(w_(l, k) > 0.0)) continue;
    const double z = (x - mu_(k)) / sigma_(k), b = (upper_ - mu_(k)) / sigma_(k);
    acc += w_(l, k) * std::exp(norm_log_diff_cdf(z, b) - log_mass_(k));
  }
  return std::min(acc, 1.0);
}

double MixtureEvaluator::score(int l, double x) const {
  const double c = cdf(l, x);
  if (c < 0.5) return norm_quantile(std::max(c, kClip));
  return -norm_quantile(std::max(sf(l, x), kClip));
}

Vector MixtureEvaluator::scores(const Vector& x) const {
  Vector y(x.size());
  for (Eigen::Index l = 0; l < x.size(); ++l) y(l) = score(static_cast<int>(l), x(l));
  return y;
}

double MixtureEvaluator::log_density(const Vector& x, DensityStatus* status) const {
  const int d = dim();
  if (status) *status = DensityStatus::ok;
  for (int l = 0; l < d; ++l) {
    if (!(x(l) > lower_ && x(l) < upper_)) {
      if (status) *status = DensityStatus::boundary;
      return -kInf;
    }
  }
  double marg = 0.0;
  Vector y(d);
  for (int l = 0; l < d; ++l) {
    y(l) = score(l, x(l));
    marg += logpdf(l, x(l));
  }
  const double quad = y.dot(factor_.inverse * y) - y.squaredNorm();
  return -0.5 * factor_.log_det - 0.5 * quad + marg;
}

double angles_log_target(const CorrelationAngles& angles, const Matrix& scatter, int n) {
  if (n == 0) return 0.0;
  const Matrix v = angles_to_cholesky(angles);
  const Vector diag = v.diagonal().cwiseAbs();
  if (diag.minCoeff() <= 1e-12) return -kInf;
  const Matrix vinv = v.triangularView<Eigen::Lower>().solve(Matrix::Identity(angles.d, angles.d));
  const double trace = (vinv * scatter * vinv.transpose()).trace();
  return -n * diag.array().log().sum() - 0.5 * trace;
}

}  // namespace rotdecon
