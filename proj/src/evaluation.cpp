#include "rotdecon/evaluation.hpp"

#include "rotdecon/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rotdecon {

namespace {

Vector effective_scale(const Vector& scale, int d) { return scale.size() == 0 ? Vector::Ones(d) : scale; }

}  // namespace

std::vector<JointDensityModel> draw_models(const PosteriorDraws& draws) {
  std::vector<JointDensityModel> out;
  out.reserve(draws.draws.size());
  for (const auto& dr : draws.draws) out.push_back(dr.params.density());
  return out;
}

Vector model_density(const JointDensityModel& model, const Matrix& points) {
  const MixtureEvaluator ev(model);
  Vector v(points.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j) v(j) = std::exp(ev.log_density(points.col(j)));
  return v;
}

DensityEstimate estimate_density(const std::vector<JointDensityModel>& models, const Matrix& points,
                                 const Vector& scale, bool keep_per_draw) {
  if (models.empty()) throw DomainError("estimate_density: no draws");
  const int d = models.front().dim();
  if (points.rows() != d) throw DomainError("estimate_density: point dimension mismatch");
  const Vector c = effective_scale(scale, d);
  const double jac = c.prod();
  const Matrix scaled = c.asDiagonal() * points;
  DensityEstimate est;
  est.points = points;
  est.values = Vector::Zero(points.cols());
  if (keep_per_draw) est.per_draw.resize(static_cast<Eigen::Index>(models.size()), points.cols());
  for (std::size_t t = 0; t < models.size(); ++t) {
    const Vector v = jac * model_density(models[t], scaled);
    est.values += v;
    if (keep_per_draw) est.per_draw.row(static_cast<Eigen::Index>(t)) = v.transpose();
  }
  est.values /= static_cast<double>(models.size());
  return est;
}

DensityEstimate estimate_density(const PosteriorDraws& draws, const Matrix& points, const Vector& scale,
                                 bool keep_per_draw) {
  return estimate_density(draw_models(draws), points, scale, keep_per_draw);
}

Vector estimate_marginal(const std::vector<JointDensityModel>& models, int l, const Vector& grid, const Vector& scale) {
  if (models.empty()) throw DomainError("estimate_marginal: no draws");
  const Vector c = effective_scale(scale, models.front().dim());
  Vector acc = Vector::Zero(grid.size());
  for (const auto& m : models) {
    const TruncNormMixture mix = m.marginal(l);
    for (Eigen::Index j = 0; j < grid.size(); ++j) acc(j) += c(l) * mix.pdf(c(l) * grid(j));
  }
  return acc / static_cast<double>(models.size());
}

double ise_joint(const Vector& f_true, const Vector& f_est, const Vector& p0) {
  if (f_true.size() != f_est.size() || f_true.size() != p0.size() || f_true.size() == 0)
    throw DomainError("ise_joint: vectors must be non-empty and aligned");
  if (!(p0.array() > 0.0).all()) throw DomainError("ise_joint: p0 must be positive");
  return ((f_true - f_est).array().square() / p0.array()).mean();
}

double ise_marginal(const Vector& f_true, const Vector& f_est, const Vector& grid) {
  if (f_true.size() != f_est.size() || f_true.size() != grid.size()) throw DomainError("ise_marginal: size mismatch");
  for (Eigen::Index i = 1; i < grid.size(); ++i)
    if (!(grid(i) > grid(i - 1))) throw DomainError("ise_marginal: grid must be strictly increasing");
  double acc = 0.0;
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    const double diff = f_true(i) - f_est(i);
    acc += diff * diff * (grid(i) - grid(i - 1));
  }
  return acc;
}

HarmonicEvidence harmonic_log_evidence(const std::vector<double>& loglik) {
  if (loglik.empty()) throw DomainError("harmonic_log_evidence: no draws");
  for (double v : loglik)
    if (!std::isfinite(v)) throw DomainError("harmonic_log_evidence: non-finite log-likelihood");
  const double shift = -*std::min_element(loglik.begin(), loglik.end());
  const auto n = static_cast<double>(loglik.size());
  double s = 0.0, s2 = 0.0;
  for (double v : loglik) {
    const double e = std::exp(-v - shift);
    s += e;
    s2 += e * e;
  }
  const double mean = s / n;
  const double var = std::max(s2 / n - mean * mean, 0.0);
  HarmonicEvidence h;
  h.log_evidence = -(std::log(mean) + shift);
  h.mc_se = std::sqrt(var / n) / mean;
  return h;
}

BayesFactor bayes_factor_harmonic(const std::vector<double>& loglik_a, const std::vector<double>& loglik_b) {
  if (loglik_a.size() < 100 || loglik_b.size() < 100) throw DomainError("bayes_factor_harmonic: need >= 100 draws per model");
  const HarmonicEvidence a = harmonic_log_evidence(loglik_a), b = harmonic_log_evidence(loglik_b);
  BayesFactor bf;
  bf.log_value = a.log_evidence - b.log_evidence;
  bf.value = std::exp(bf.log_value);
  bf.log_mc_se = std::hypot(a.mc_se, b.mc_se);
  return bf;
}

ScalingFit runtime_scaling(const std::vector<double>& dims, const std::vector<double>& seconds) {
  if (dims.size() != seconds.size() || dims.size() < 3) throw DomainError("runtime_scaling: need >= 3 aligned points");
  const auto n = static_cast<Eigen::Index>(dims.size());
  Matrix a(n, 2);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(dims[static_cast<std::size_t>(i)] > 0.0) || !(seconds[static_cast<std::size_t>(i)] > 0.0))
      throw DomainError("runtime_scaling: dimensions and times must be positive");
    a(i, 0) = 1.0;
    a(i, 1) = std::log(dims[static_cast<std::size_t>(i)]);
    y(i) = std::log(seconds[static_cast<std::size_t>(i)]);
  }
  const Vector coef = a.colPivHouseholderQr().solve(y);
  ScalingFit fit;
  fit.intercept = coef(0);
  fit.slope = coef(1);
  if (n > 2) {
    const double rss = (y - a * coef).squaredNorm();
    const Matrix cov = (a.transpose() * a).inverse() * (rss / static_cast<double>(n - 2));
    fit.slope_se = std::sqrt(cov(1, 1));
  }
  return fit;
}

double median(std::vector<double> v) {
  if (v.empty()) throw DomainError("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace rotdecon
