#include "rotdecon/likelihood.hpp"

#include "rotdecon/mvmf.hpp"
#include "rotdecon/normal.hpp"
#include "rotdecon/rotation.hpp"
#include "rotdecon/truncnorm.hpp"

#include <cmath>
#include <limits>

namespace rotdecon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector expected_diag_unchecked(const Vector& f) {
  const auto d = f.size();
  Vector e = Vector::Ones(d);
  for (Eigen::Index l = 0; l < d; ++l)
    for (Eigen::Index k = 0; k < d; ++k)
      if (k != l) e(l) -= 0.5 / (f(l) + f(k));
  return e;
}

double tn_prior(const Vector& beta, const Vector& mu, double var) {
  if ((beta.array() < 0.0).any()) return -kInf;
  return -(beta - mu).squaredNorm() / (2.0 * var);
}

}  // namespace

int ReplicateDataset::total_replicates() const {
  int t = 0;
  for (const auto& m : w) t += static_cast<int>(m.cols());
  return t;
}

void ReplicateDataset::validate() const {
  if (d < 1) throw ValidationError("dataset: dimension must be positive");
  if (w.empty()) throw ValidationError("dataset: no subjects");
  if (!subject_ids.empty() && subject_ids.size() != w.size()) throw ValidationError("dataset: subject id count mismatch");
  for (std::size_t i = 0; i < w.size(); ++i) {
    const std::string who = subject_ids.empty() ? std::to_string(i) : subject_ids[i];
    if (w[i].rows() != d) throw ValidationError("dataset: subject " + who + " has wrong dimension");
    if (w[i].cols() < 3) throw ValidationError("dataset: subject " + who + " has fewer than 3 replicates");
    if (!w[i].allFinite()) throw ValidationError("dataset: subject " + who + " has non-finite values");
  }
}

Vector HeteroFuncs::kappa(const Vector& x) const {
  Vector f(x.size());
  for (Eigen::Index l = 0; l < x.size(); ++l) f(l) = basis.eval_function(beta_kappa.row(l).transpose(), x(l));
  return f;
}

double HeteroFuncs::s2(const Vector& x) const { return basis.eval_function(beta_s, s2_argument(x)); }

JointDensityModel ModelParams::density() const {
  JointDensityModel m;
  m.mu = mu;
  m.sigma2 = sigma2;
  m.weights = weights;
  m.lower = lower;
  m.upper = upper;
  m.angles = angles;
  return m;
}

SubjectGeometry subject_geometry(const HeteroFuncs& hetero, const Vector& x) {
  SubjectGeometry g;
  g.norm_x = x.norm();
  g.f = hetero.kappa(x);
  g.s2 = hetero.s2(x);
  g.valid = g.norm_x > 0.0 && g.s2 > 0.0 && (g.f.array() > 0.0).all();
  if (!g.valid) return g;
  g.e = expected_diag_unchecked(g.f);
  g.valid = (g.e.array() > 0.0).all();
  if (g.valid) g.log_m = mvmf_log_norm_const(g.f);
  return g;
}

Matrix scaling_matrix(const HeteroFuncs& hetero, const Vector& x) {
  const Vector e = mvmf_expected_diag(hetero.kappa(x));
  return e.cwiseInverse().asDiagonal();
}

double lognormal_block(const Vector& lr, double s2) {
  if (!(s2 > 0.0)) return -kInf;
  const double dev2 = (lr.array() + 0.5 * s2).square().sum();
  return -0.5 * lr.size() * std::log(2.0 * M_PI * s2) - dev2 / (2.0 * s2);
}

double lognormal_block_ds2(const Vector& lr, double s2) {
  // d/du [ -log(2 pi u)/2 - (L + u/2)^2 / (2u) ] = -1/(2u) - (L + u/2)(u/2 - L) / (2u^2)
  double acc = 0.0;
  for (Eigen::Index j = 0; j < lr.size(); ++j) {
    const double a = lr(j) + 0.5 * s2;
    acc += -0.5 / s2 - a * (0.5 * s2 - lr(j)) / (2.0 * s2 * s2);
  }
  return acc;
}

double cond_loglik(const Vector& w, const Vector& x, const SubjectGeometry& geom) {
  if (!geom.valid) return -kInf;
  const Vector z = geom.e.cwiseProduct(w);
  const double nz = z.norm();
  if (!(nz > 0.0)) return -kInf;
  const double trace = geom.f.dot(rotation_diagonal(z, x));
  const double lr = std::log(nz / geom.norm_x);
  const double dev = lr + 0.5 * geom.s2;
  return trace - geom.log_m - lr - 0.5 * std::log(2.0 * M_PI * geom.s2) - dev * dev / (2.0 * geom.s2);
}

double cond_loglik(const Vector& w, const Vector& x, const HeteroFuncs& hetero) {
  if (w.size() != x.size()) throw DomainError("cond_loglik: dimension mismatch");
  if (!(w.norm() > 0.0) || !(x.norm() > 0.0)) throw DomainError("cond_loglik: zero vector");
  const SubjectGeometry g = subject_geometry(hetero, x);
  if (!g.valid) throw RegimeError("cond_loglik: approximation regime violated");
  return cond_loglik(w, x, g);
}

double subject_loglik(const Matrix& w, const Vector& x, const HeteroFuncs& hetero) {
  const SubjectGeometry g = subject_geometry(hetero, x);
  if (!g.valid) return -kInf;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < w.cols(); ++j) acc += cond_loglik(w.col(j), x, g);
  return acc;
}

Vector subject_log_ratios(const Matrix& w, const SubjectGeometry& geom) {
  Vector lr(w.cols());
  for (Eigen::Index j = 0; j < w.cols(); ++j) lr(j) = std::log(geom.e.cwiseProduct(w.col(j)).norm() / geom.norm_x);
  return lr;
}

double beta_s_neg_log_post(const Vector& beta_s, const CubicBasis& basis, const BetaSTerms& terms,
                           const Vector& mu_s, double sigma_s_sq) {
  const double prior = tn_prior(beta_s, mu_s, sigma_s_sq);
  if (!std::isfinite(prior)) return kInf;
  double lik = 0.0;
  for (std::size_t i = 0; i < terms.args.size(); ++i) {
    const double s2 = basis.eval_function(beta_s, terms.args[i]);
    if (!(s2 > 0.0)) return kInf;
    lik += lognormal_block(terms.log_ratios[i], s2);
  }
  return -lik - prior;
}

Vector grad_beta_s(const Vector& beta_s, const CubicBasis& basis, const BetaSTerms& terms, const Vector& mu_s,
                   double sigma_s_sq) {
  Vector g = (beta_s - mu_s) / sigma_s_sq;
  for (std::size_t i = 0; i < terms.args.size(); ++i) {
    const BasisRow row = basis.row(terms.args[i]);
    double s2 = 0.0;
    for (int k = 0; k < 4; ++k) s2 += beta_s(row.first + k) * row.values[k];
    const double ds2 = lognormal_block_ds2(terms.log_ratios[i], s2);
    for (int k = 0; k < 4; ++k) g(row.first + k) -= ds2 * row.values[k];
  }
  return g;
}

double atom_neg_log_post(double mu, double eta, const AtomStats& st, const Hyperparameters& hyper, double lower,
                         double upper) {
  const double s2 = std::exp(eta);
  double u = 0.5 * (mu - hyper.mu0) * (mu - hyper.mu0) / hyper.sigma0_sq + hyper.a0 * eta + hyper.b0 / s2;
  if (st.n > 0.0) {
    const double ss = st.s2 - 2.0 * mu * st.s1 + st.n * mu * mu;
    u += ss / (2.0 * s2) + 0.5 * st.n * eta + st.n * tnorm_log_mass(mu, s2, lower, upper);
  }
  return u;
}

Vector grad_atoms(double mu, double eta, const AtomStats& st, const Hyperparameters& hyper, double lower,
                  double upper) {
  const double s2 = std::exp(eta);
  Vector g(2);
  g(0) = (mu - hyper.mu0) / hyper.sigma0_sq;
  g(1) = hyper.a0 - hyper.b0 / s2;
  if (st.n > 0.0) {
    const double sigma = std::sqrt(s2);
    const double alpha = (lower - mu) / sigma;
    const double beta = (upper - mu) / sigma;
    const double log_z = norm_log_diff_cdf(alpha, beta);
    const double ra = std::isfinite(alpha) ? std::exp(norm_logpdf(alpha) - log_z) : 0.0;
    const double rb = std::isfinite(beta) ? std::exp(norm_logpdf(beta) - log_z) : 0.0;
    const double dlogz_dmu = (ra - rb) / sigma;
    const double dlogz_deta = 0.5 * ((std::isfinite(alpha) ? alpha * ra : 0.0) - (std::isfinite(beta) ? beta * rb : 0.0));
    const double ss = st.s2 - 2.0 * mu * st.s1 + st.n * mu * mu;
    g(0) += (st.n * mu - st.s1) / s2 + st.n * dlogz_dmu;
    g(1) += -ss / (2.0 * s2) + 0.5 * st.n + st.n * dlogz_deta;
  }
  return g;
}

double joint_log_posterior(const ModelParams& params, const LatentState& latent, const ReplicateDataset& data) {
  const int d = params.dim();
  double lp = 0.0;
  for (int i = 0; i < data.n(); ++i) lp += subject_loglik(data.w[i], latent.x.col(i), params.hetero);
  const JointDensityModel model = params.density();
  const CorrelationFactor factor = factor_correlation(angles_to_correlation(params.angles));
  for (int i = 0; i < data.n(); ++i) lp += copula_log_density(model, factor, latent.x.col(i));
  for (int l = 0; l < d; ++l)
    lp += tn_prior(params.hetero.beta_kappa.row(l).transpose(), params.hyper.mu_kappa.row(l).transpose(),
                   params.hyper.sigma_kappa_sq(l));
  lp += tn_prior(params.hetero.beta_s, params.hyper.mu_s, params.hyper.sigma_s_sq);
  const auto& h = params.hyper;
  for (int k = 0; k < params.num_atoms(); ++k) {
    lp += -0.5 * (params.mu(k) - h.mu0) * (params.mu(k) - h.mu0) / h.sigma0_sq;
    lp += -(h.a0 + 1.0) * std::log(params.sigma2(k)) - h.b0 / params.sigma2(k);
  }
  return lp;
}

Matrix cond_cov_diagnostic(const Vector& f, const Vector& x, double s2) {
  const Vector e = mvmf_expected_diag(f);
  const auto d = f.size();
  Matrix v = Matrix::Zero(d, d);
  for (Eigen::Index l = 0; l < d; ++l)
    for (Eigen::Index k = 0; k < d; ++k) {
      if (k == l) continue;
      const double t = 0.5 / ((f(l) + f(k)) * (f(l) + f(k)));
      v(l, k) = t;
      v(l, l) += t;
    }
  const Vector cx = x.cwiseQuotient(e);
  return std::exp(s2) * cx.asDiagonal() * v * cx.asDiagonal() + std::expm1(s2) * x * x.transpose();
}

Matrix cond_cov_full(const Vector& f, const Vector& x, double s2) {
  const Vector e = mvmf_expected_diag(f);
  const auto d = f.size();
  Matrix cov = Matrix::Zero(d, d);
  for (Eigen::Index l = 0; l < d; ++l)
    for (Eigen::Index k = 0; k < d; ++k) {
      if (k == l) continue;
      const double sum = f(l) + f(k);
      const double t = 0.5 / (sum * sum);
      cov(l, l) += x(k) * x(k) / sum + x(l) * x(l) * t;
      cov(l, k) += -x(l) * x(k) / sum + x(l) * x(k) * t;
    }
  const Vector c = e.cwiseInverse();
  return std::exp(s2) * c.asDiagonal() * cov * c.asDiagonal() + std::expm1(s2) * x * x.transpose();
}

Vector standardization_h(const Vector& f, const Vector& x) {
  const Vector e = mvmf_expected_diag(f);
  const auto d = f.size();
  Vector h(d);
  for (Eigen::Index l = 0; l < d; ++l) {
    double v = 0.0;
    for (Eigen::Index k = 0; k < d; ++k)
      if (k != l) v += 0.5 / ((f(l) + f(k)) * (f(l) + f(k)));
    h(l) = e(l) * e(l) / (x(l) * x(l) * v);
  }
  return h;
}

}  // namespace rotdecon
