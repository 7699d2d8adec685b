#include "rotdecon/random.hpp"

#include "rotdecon/normal.hpp"

#include <cmath>
#include <limits>

namespace rotdecon {

double std_normal(Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  return nd(rng);
}

double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  while (u <= 0.0) u = unif(rng);
  return u;
}

double log_gamma_sample(double shape, Rng& rng) {
  if (!(shape > 0.0)) throw DomainError("log_gamma_sample: shape must be positive");
  if (shape >= 1.0) {
    std::gamma_distribution<double> g(shape, 1.0);
    return std::log(g(rng));
  }
  // G(a) = G(a+1) * U^{1/a}
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  const double lg = std::log(g(rng));
  return lg + std::log(uniform01(rng)) / shape;
}

Vector dirichlet_sample(const Vector& alpha, Rng& rng) {
  const auto k = alpha.size();
  if (k < 1) throw DomainError("dirichlet_sample: empty alpha");
  Vector lg(k);
  for (Eigen::Index i = 0; i < k; ++i) lg(i) = log_gamma_sample(alpha(i), rng);
  const double m = lg.maxCoeff();
  Vector w = (lg.array() - m).exp().matrix();
  return w / w.sum();
}

int categorical_log(const Vector& log_weights, Rng& rng) {
  const double m = log_weights.maxCoeff();
  if (!std::isfinite(m)) throw DomainError("categorical_log: no finite weight");
  const Vector p = (log_weights.array() - m).exp().matrix();
  const double u = uniform01(rng) * p.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p(i);
    if (u <= acc) return static_cast<int>(i);
  }
  for (Eigen::Index i = p.size() - 1; i >= 0; --i)
    if (p(i) > 0.0) return static_cast<int>(i);
  return 0;
}

double LogNormalLength::logpdf(double r) const {
  if (!(r > 0.0)) return -std::numeric_limits<double>::infinity();
  const double lr = std::log(r);
  const double dev = lr - log_mean();
  return -lr - 0.5 * std::log(2.0 * M_PI * s2) - dev * dev / (2.0 * s2);
}

double LogNormalLength::sample(Rng& rng) const {
  return std::exp(log_mean() + std::sqrt(s2) * std_normal(rng));
}

}  // namespace rotdecon
