#include "rotdecon/mvmf.hpp"

#include "rotdecon/random.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace rotdecon {

void MvMFParams::validate() const {
  if (f.size() < 2) throw DomainError("MvMFParams: need d >= 2");
  if (!f.allFinite() || !(f.array() > 0.0).all()) throw DomainError("MvMFParams: concentrations must be finite and positive");
}

double mvmf_log_norm_const(const Vector& f) {
  MvMFParams{f}.validate();
  const auto d = static_cast<double>(f.size());
  double c = (-d * (d + 5.0) / 4.0 + d * d / 2.0) * std::log(2.0) - 0.5 * d * std::log(M_PI);
  for (int j = 1; j <= f.size(); ++j) c += std::lgamma((d - j + 1.0) / 2.0);
  double pair = 0.0;
  for (Eigen::Index l = 0; l < f.size(); ++l)
    for (Eigen::Index k = l + 1; k < f.size(); ++k) pair += std::log(f(l) + f(k));
  return c + f.sum() - 0.5 * pair;
}

Vector mvmf_log_norm_const_grad(const Vector& f) {
  MvMFParams{f}.validate();
  Vector g = Vector::Ones(f.size());
  for (Eigen::Index l = 0; l < f.size(); ++l)
    for (Eigen::Index k = 0; k < f.size(); ++k)
      if (k != l) g(l) -= 0.5 / (f(l) + f(k));
  return g;
}

Vector mvmf_expected_diag(const Vector& f) {
  Vector e = mvmf_log_norm_const_grad(f);
  if (!(e.array() > 0.0).all()) throw RegimeError("mvmf_expected_diag: approximation regime violated");
  return e;
}

double log_bessel_i0(double x) {
  x = std::abs(x);
  if (x < 500.0) return std::log(std::cyl_bessel_i(0.0, x));
  // Hankel expansion of exp(-x) I_0(x) sqrt(2 pi x).
  const double t = 1.0 / (8.0 * x);
  const double s = 1.0 + t * (1.0 + t * (4.5 + t * (37.5 + t * 459.375)));
  return x - 0.5 * std::log(2.0 * M_PI * x) + std::log(s);
}

double von_mises_sample(double mu, double kappa, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (kappa < 1e-8) return mu + M_PI * (2.0 * unif(rng) - 1.0);
  double result;
  if (kappa > 1e6) {
    result = mu + std_normal(rng) / std::sqrt(kappa);
  } else {
    // Best-Fisher wrapped-Cauchy envelope.
    double s;
    if (kappa < 1e-5) {
      s = 1.0 / kappa + kappa;
    } else {
      const double r = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
      const double rho = (r - std::sqrt(2.0 * r)) / (2.0 * kappa);
      s = (1.0 + rho * rho) / (2.0 * rho);
    }
    double w;
    while (true) {
      const double z = std::cos(M_PI * unif(rng));
      w = (1.0 + s * z) / (s + z);
      const double y = kappa * (s - w);
      const double v = uniform01(rng);
      if (y * (2.0 - y) - v >= 0.0 || std::log(y / v) + 1.0 - y >= 0.0) break;
    }
    result = std::acos(std::clamp(w, -1.0, 1.0));
    if (unif(rng) < 0.5) result = -result;
    result += mu;
  }
  result = std::remainder(result, 2.0 * M_PI);
  return result;
}

Matrix mvmf_sample(const Vector& f, Rng& rng, int sweeps) {
  MvMFParams{f}.validate();
  const auto d = f.size();
  Matrix q = Matrix::Identity(d, d);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = a + 1; b < d; ++b) {
        // The pair (q_a, q_b) given the other columns is (q_a, q_b) Y with Y
        // in O(2) and density proportional to exp(sum_ij Y_ij G_ij).
        const double g11 = f(a) * q(a, a), g12 = f(b) * q(b, a);
        const double g21 = f(a) * q(a, b), g22 = f(b) * q(b, b);
        const double rho_rot = std::hypot(g11 + g22, g21 - g12);
        const double rho_ref = std::hypot(g11 - g22, g12 + g21);
        const double lr = log_bessel_i0(rho_rot), lf = log_bessel_i0(rho_ref);
        const double p_rot = 1.0 / (1.0 + std::exp(lf - lr));
        double y11, y12, y21, y22;
        if (uniform01(rng) < p_rot) {
          const double th = von_mises_sample(std::atan2(g21 - g12, g11 + g22), rho_rot, rng);
          const double c = std::cos(th), s = std::sin(th);
          y11 = c; y12 = -s; y21 = s; y22 = c;
        } else {
          const double th = von_mises_sample(std::atan2(g12 + g21, g11 - g22), rho_ref, rng);
          const double c = std::cos(th), s = std::sin(th);
          y11 = c; y12 = s; y21 = s; y22 = -c;
        }
        const Vector qa = q.col(a), qb = q.col(b);
        q.col(a) = y11 * qa + y21 * qb;
        q.col(b) = y12 * qa + y22 * qb;
      }
    }
  }
  return q;
}

Matrix haar_orthogonal(int d, Rng& rng) {
  if (d < 1) throw DomainError("haar_orthogonal: d must be positive");
  Matrix z(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) z(i, j) = std_normal(rng);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

Vector vmf_sample(const Vector& mean_dir, double conc, Rng& rng) {
  const auto d = mean_dir.size();
  if (d < 2) throw DomainError("vmf_sample: need d >= 2");
  if (std::abs(mean_dir.norm() - 1.0) > 1e-10) throw DomainError("vmf_sample: mean direction must be a unit vector");
  if (!(conc >= 0.0)) throw DomainError("vmf_sample: concentration must be nonnegative");
  Vector v(d);
  if (conc == 0.0) {
    for (Eigen::Index i = 0; i < d; ++i) v(i) = std_normal(rng);
    return v / v.norm();
  }
  // Component along mean_dir.
  const double dm1 = static_cast<double>(d - 1);
  const double b = dm1 / (2.0 * conc + std::sqrt(4.0 * conc * conc + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = conc * x0 + dm1 * std::log(1.0 - x0 * x0);
  double w;
  while (true) {
    std::gamma_distribution<double> ga(dm1 / 2.0, 1.0);
    const double g1 = ga(rng);
    std::gamma_distribution<double> gb(dm1 / 2.0, 1.0);
    const double g2 = gb(rng);
    const double z = g1 / (g1 + g2);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    if (conc * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(uniform01(rng))) break;
  }
  // Uniform direction orthogonal to mean_dir.
  for (Eigen::Index i = 0; i < d; ++i) v(i) = std_normal(rng);
  v -= v.dot(mean_dir) * mean_dir;
  v /= v.norm();
  return w * mean_dir + std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
}

VmfFit vmf_mle(const Matrix& samples) {
  const auto d = samples.rows();
  const auto n = samples.cols();
  if (n < 2) throw DomainError("vmf_mle: need at least two samples");
  const Vector resultant = samples.rowwise().sum();
  const double len = resultant.norm();
  VmfFit fit;
  if (!(len > 1e-12 * n)) {
    fit.mean_dir = Vector::Unit(d, 0);
    fit.conc = 0.0;
    return fit;
  }
  fit.mean_dir = resultant / len;
  const double rbar = std::min(len / n, 1.0);
  constexpr double kMaxConc = 1e8;
  if (rbar >= 1.0 - 1e-12) {
    fit.conc = kMaxConc;
  } else {
    fit.conc = std::min(kMaxConc, rbar * (d - rbar * rbar) / (1.0 - rbar * rbar));
  }
  return fit;
}

}  // namespace rotdecon
