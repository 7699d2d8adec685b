#include "rotdecon/initialize.hpp"

#include "rotdecon/kmeans.hpp"
#include "rotdecon/mvmf.hpp"
#include "rotdecon/nnls.hpp"
#include "rotdecon/random.hpp"
#include "rotdecon/truncnorm.hpp"

#include <algorithm>
#include <cmath>

namespace rotdecon {

namespace {

double spread(const Vector& v) {
  if (v.size() < 2) return 0.0;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
}

/// Prior SD = 2 x spread, with a fallback when the estimates are all equal.
double prior_var(const Vector& est, double fallback_sd) {
  double sd = 2.0 * spread(est);
  if (!(sd > 1e-8)) sd = fallback_sd;
  return sd * sd;
}

Matrix spline_design(const CubicBasis& basis, const Vector& args) {
  Matrix m = Matrix::Zero(args.size(), basis.size());
  for (Eigen::Index i = 0; i < args.size(); ++i) {
    const BasisRow r = basis.row(args(i));
    for (int k = 0; k < 4; ++k) m(i, r.first + k) = r.values[k];
  }
  return m;
}

/// NNLS on the design stacked with sqrt(lambda) times second differences of
/// the coefficients, so functions with little data support follow their
/// neighbours instead of absorbing residuals.
Vector smoothed_nnls(const Matrix& design, const Vector& target, double lambda) {
  const auto k = design.cols();
  if (k < 3 || lambda <= 0.0) return nnls(design, target);
  Matrix a = Matrix::Zero(design.rows() + k - 2, k);
  a.topRows(design.rows()) = design;
  const double w = std::sqrt(lambda);
  for (Eigen::Index r = 0; r < k - 2; ++r) {
    a(design.rows() + r, r) = w;
    a(design.rows() + r, r + 1) = -2.0 * w;
    a(design.rows() + r, r + 2) = w;
  }
  Vector b = Vector::Zero(a.rows());
  b.head(design.rows()) = target;
  return nnls(a, b);
}

/// Labels, weights and conjugate normal / inverse-gamma atom updates with
/// the truncation ignored; x stays fixed.
void warm_start_atoms(ModelParams& p, LatentState& s, int sweeps, Rng& rng) {
  const int d = p.dim(), n = static_cast<int>(s.x.cols()), k_atoms = p.num_atoms();
  const auto& h = p.hyper;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    Vector log_mass(k_atoms);
    for (int k = 0; k < k_atoms; ++k) log_mass(k) = tnorm_log_mass(p.mu(k), p.sigma2(k), p.lower, p.upper);
    Vector lw(k_atoms);
    for (int l = 0; l < d; ++l) {
      Vector counts = Vector::Zero(k_atoms);
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < k_atoms; ++k) {
          const double z = (s.x(l, i) - p.mu(k)) / std::sqrt(p.sigma2(k));
          lw(k) = std::log(p.weights(l, k)) - 0.5 * z * z - 0.5 * std::log(p.sigma2(k)) - log_mass(k);
        }
        s.labels(l, i) = categorical_log(lw, rng);
        counts(s.labels(l, i)) += 1.0;
      }
      p.weights.row(l) = dirichlet_sample((counts.array() + h.alpha / k_atoms).matrix(), rng).transpose();
    }
    Vector cnt = Vector::Zero(k_atoms), s1 = Vector::Zero(k_atoms), s2 = Vector::Zero(k_atoms);
    for (int l = 0; l < d; ++l)
      for (int i = 0; i < n; ++i) {
        const int k = s.labels(l, i);
        cnt(k) += 1.0;
        s1(k) += s.x(l, i);
        s2(k) += s.x(l, i) * s.x(l, i);
      }
    for (int k = 0; k < k_atoms; ++k) {
      const double prec = 1.0 / h.sigma0_sq + cnt(k) / p.sigma2(k);
      const double mean = (h.mu0 / h.sigma0_sq + s1(k) / p.sigma2(k)) / prec;
      p.mu(k) = mean + std_normal(rng) / std::sqrt(prec);
      const double ss = s2(k) - 2.0 * p.mu(k) * s1(k) + cnt(k) * p.mu(k) * p.mu(k);
      const double shape = h.a0 + 0.5 * cnt(k), rate = h.b0 + 0.5 * ss;
      p.sigma2(k) = rate / std::exp(log_gamma_sample(shape, rng));
    }
  }
}

}  // namespace

ReplicateDataset Rescaling::apply(const ReplicateDataset& data) const {
  if (factor.size() != data.d) throw DomainError("Rescaling: dimension mismatch");
  ReplicateDataset out = data;
  for (auto& w : out.w) w = factor.asDiagonal() * w;
  return out;
}

Rescaling fit_rescaling(const ReplicateDataset& data, double target) {
  Vector mx = Vector::Zero(data.d);
  for (const auto& w : data.w) mx = mx.cwiseMax(w.cwiseAbs().rowwise().maxCoeff());
  if (!(mx.array() > 0.0).all()) throw ValidationError("rescaling: a dimension is identically zero");
  Rescaling r;
  r.factor = target * mx.cwiseInverse();
  return r;
}

Matrix subject_means(const ReplicateDataset& data) {
  Matrix x(data.d, data.n());
  for (int i = 0; i < data.n(); ++i) x.col(i) = data.w[i].rowwise().mean();
  return x;
}

InitResult initialize(const ReplicateDataset& data, const InitConfig& cfg, Rng& rng) {
  data.validate();
  if (!(cfg.upper > cfg.lower)) throw ValidationError("init: bounds must satisfy lower < upper");
  if (cfg.num_atoms < 1) throw ValidationError("init: need at least one atom");
  const int d = data.d, n = data.n(), k_atoms = cfg.num_atoms;
  InitResult out;
  ModelParams& p = out.params;
  p.lower = cfg.lower;
  p.upper = cfg.upper;
  p.hetero.basis = CubicBasis(cfg.lower, cfg.upper, cfg.num_intervals);
  const CubicBasis& basis = p.hetero.basis;

  const double margin = 1e-6 * (cfg.upper - cfg.lower);
  Matrix x = subject_means(data);
  x = x.cwiseMax(cfg.lower + margin).cwiseMin(cfg.upper - margin);
  out.latent.x = x;

  // Pointwise kappa targets from a per-subject vMF fit on unit replicates.
  out.kappa_targets.resize(d, n);
  out.s2_targets.resize(n);
  for (int i = 0; i < n; ++i) {
    const Matrix& w = data.w[i];
    Matrix u(d, w.cols());
    Vector lr(w.cols());
    const double nx = x.col(i).norm();
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      const double nw = w.col(j).norm();
      u.col(j) = nw > 0.0 ? Vector(w.col(j) / nw) : Vector::Unit(d, 0);
      lr(j) = std::log(std::max(nw, 1e-300) / nx);
    }
    const VmfFit fit = vmf_mle(u);
    const Vector xt = x.col(i) / nx;
    for (int l = 0; l < d; ++l) {
      const double f_hat = fit.conc * fit.mean_dir(l);
      out.kappa_targets(l, i) = std::clamp(f_hat / std::max(xt(l), 1e-3), static_cast<double>(d), 1e4);
    }
    const double m = lr.mean();
    out.s2_targets(i) = (lr.array() - m).square().sum() / static_cast<double>(lr.size() - 1);
  }

  const int kb = basis.size();
  p.hetero.beta_kappa.resize(d, kb);
  for (int l = 0; l < d; ++l) {
    const Matrix design = spline_design(basis, x.row(l).transpose());
    Vector b = smoothed_nnls(design, out.kappa_targets.row(l).transpose(), cfg.spline_penalty);
    // kappa >= d keeps every E(Q_ll) positive.
    b = b.cwiseMax(static_cast<double>(d));
    p.hetero.beta_kappa.row(l) = b.transpose();
  }
  Vector args(n);
  for (int i = 0; i < n; ++i) args(i) = p.hetero.s2_argument(x.col(i));
  p.hetero.beta_s = smoothed_nnls(spline_design(basis, args), out.s2_targets, cfg.spline_penalty);
  const double s2_mean = out.s2_targets.mean();
  if (s2_mean > 0.0) p.hetero.beta_s = p.hetero.beta_s.cwiseMax(1e-3 * s2_mean);

  // Atoms: k-means on pooled x, then conjugate sweeps with x fixed.
  std::vector<double> pooled(x.data(), x.data() + x.size());
  const KMeansResult km = kmeans_1d(pooled, k_atoms, rng, cfg.kmeans_restarts);
  p.mu = km.centers;
  p.sigma2.resize(k_atoms);
  Vector cnt = Vector::Zero(k_atoms), ss = Vector::Zero(k_atoms);
  for (std::size_t t = 0; t < pooled.size(); ++t) {
    const int k = km.labels[t];
    cnt(k) += 1.0;
    ss(k) += (pooled[t] - p.mu(k)) * (pooled[t] - p.mu(k));
  }
  const double range = cfg.upper - cfg.lower;
  for (int k = 0; k < k_atoms; ++k)
    p.sigma2(k) = cnt(k) > 1.0 ? std::max(ss(k) / (cnt(k) - 1.0), 1e-4 * range * range) : 1e-2 * range * range;
  out.latent.labels.resize(d, n);
  p.weights = Matrix::Zero(d, k_atoms);
  for (int l = 0; l < d; ++l)
    for (int i = 0; i < n; ++i) {
      const int k = km.labels[static_cast<std::size_t>(l) + static_cast<std::size_t>(i) * d];
      out.latent.labels(l, i) = k;
      p.weights(l, k) += 1.0;
    }
  p.weights = (p.weights.array() + 1.0 / k_atoms).matrix();
  for (int l = 0; l < d; ++l) p.weights.row(l) /= p.weights.row(l).sum();
  p.angles = CorrelationAngles::identity(d);

  Hyperparameters& h = p.hyper;
  h.mu0 = p.mu.mean();
  h.sigma0_sq = prior_var(p.mu, range / 4.0);
  h.a0 = 1.0;
  h.b0 = 1.0;
  h.alpha = 1.0;
  h.mu_s = p.hetero.beta_s;
  h.sigma_s_sq = prior_var(p.hetero.beta_s, std::max(p.hetero.beta_s.mean(), 1e-3));
  h.mu_kappa = p.hetero.beta_kappa;
  h.sigma_kappa_sq.resize(d);
  for (int l = 0; l < d; ++l) {
    const Vector row = p.hetero.beta_kappa.row(l).transpose();
    h.sigma_kappa_sq(l) = prior_var(row, row.mean());
  }

  warm_start_atoms(p, out.latent, cfg.warm_start_sweeps, rng);
  return out;
}

}  // namespace rotdecon
