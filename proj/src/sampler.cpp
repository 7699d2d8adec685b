#include "rotdecon/sampler.hpp"

#include "rotdecon/hmc.hpp"
#include "rotdecon/initialize.hpp"
#include "rotdecon/likelihood.hpp"
#include "rotdecon/random.hpp"
#include "rotdecon/truncnorm.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rotdecon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const char* const kAtoms = "atoms";
const char* const kX = "x";
const char* const kAngles = "angles";
const char* const kBetaS = "beta_s";
const char* const kBetaKappa = "beta_kappa";

std::string kappa_block(int l) { return std::string(kBetaKappa) + "/" + std::to_string(l); }

double tn_prior(const Vector& beta, const Vector& mu, double var) {
  if ((beta.array() < 0.0).any()) return -kInf;
  return -(beta - mu).squaredNorm() / (2.0 * var);
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_iter < 1) throw ValidationError("sampler: n_iter must be positive");
  if (burn_in < 0 || burn_in >= n_iter) throw ValidationError("sampler: need 0 <= burn_in < n_iter");
  if (thin < 1) throw ValidationError("sampler: thin must be at least 1");
  if (leapfrog_steps < 1) throw ValidationError("sampler: leapfrog_steps must be at least 1");
  if (angle_grid_size < 3 || angle_grid_size % 2 == 0) throw ValidationError("sampler: angle grid size must be odd and >= 3");
  if (!(eps_atoms > 0.0) || !(eps_beta_s > 0.0) || !(x_scale > 0.0) || !(kappa_scale > 0.0))
    throw ValidationError("sampler: step sizes and scales must be positive");
  if (x_steps < 1 || kappa_steps < 1) throw ValidationError("sampler: sub-step counts must be positive");
  if (adapt_batch < 1 || log_post_every < 1 || diag_every < 1 || checkpoint_every < 1)
    throw ValidationError("sampler: intervals must be positive");
}

double BlockTrace::rate(int from, int to) const {
  from = std::max(from, 0);
  to = std::min(to, static_cast<int>(accepted.size()));
  long a = 0, p = 0;
  for (int t = from; t < to; ++t) {
    a += accepted[static_cast<std::size_t>(t)];
    p += proposed[static_cast<std::size_t>(t)];
  }
  return p > 0 ? static_cast<double>(a) / static_cast<double>(p) : std::numeric_limits<double>::quiet_NaN();
}

int angle_grid_index(double value, double upper, int grid_size) {
  const int j = static_cast<int>(std::lround(value / upper * (grid_size - 1)));
  return std::clamp(j, 0, grid_size - 1);
}

Tuning default_tuning(const ModelParams& params, const LatentState& latent, const ReplicateDataset& data,
                      const SamplerConfig& cfg) {
  const int d = params.dim();
  Tuning t;
  t.eps_atoms = cfg.eps_atoms;
  t.eps_beta_s = cfg.eps_beta_s;
  t.x_scale = cfg.x_scale;
  t.kappa_scale = Vector::Constant(d, cfg.kappa_scale);
  // Pooled within-subject SD over sqrt(mean m): the scale of x given w.
  Vector var = Vector::Zero(d);
  double mbar = 0.0;
  for (const auto& w : data.w) {
    const Vector mean = w.rowwise().mean();
    var += (w.colwise() - mean).rowwise().squaredNorm() / static_cast<double>(w.cols() - 1);
    mbar += static_cast<double>(w.cols());
  }
  var /= static_cast<double>(data.n());
  mbar /= static_cast<double>(data.n());
  const double floor_sd = 1e-3 * (params.upper - params.lower);
  t.x_base_sd = (var / mbar).cwiseSqrt().cwiseMax(floor_sd);
  t.atom_sigma_ref = std::sqrt(params.sigma2.mean());
  t.beta_s_precond = Vector::Ones(params.hetero.beta_s.size());
  const Matrix& bk = params.hetero.beta_kappa;
  t.kappa_init_sd.resize(bk.rows(), bk.cols());
  for (int l = 0; l < d; ++l) {
    const double m = bk.row(l).mean();
    for (Eigen::Index k = 0; k < bk.cols(); ++k) t.kappa_init_sd(l, k) = 0.05 * (bk(l, k) + m) + 1e-6;
  }
  t.kappa_count = 0;
  t.kappa_mean.assign(static_cast<std::size_t>(d), Vector::Zero(bk.cols()));
  t.kappa_m2.assign(static_cast<std::size_t>(d), Matrix::Zero(bk.cols(), bk.cols()));
  (void)latent;
  return t;
}

Sampler::Sampler(const ReplicateDataset& data, const SamplerConfig& cfg, ChainState state)
    : Sampler(data, cfg, std::move(state), PosteriorDraws{}) {}

Sampler::Sampler(const ReplicateDataset& data, const SamplerConfig& cfg, ChainState state, PosteriorDraws so_far)
    : data_(data), cfg_(cfg), state_(std::move(state)), draws_(std::move(so_far)) {
  cfg_.validate();
  const auto& p = state_.params;
  if (p.dim() != data_.d) throw ValidationError("sampler: state and data dimensions differ");
  if (state_.latent.x.cols() != data_.n()) throw ValidationError("sampler: state and data subject counts differ");
  if (state_.tuning.kappa_scale.size() == 0) state_.tuning = default_tuning(p, state_.latent, data_, cfg_);
  if (state_.iteration == 0 && cfg_.update_hetero) refresh_beta_s_precond();
  if (cfg_.likelihood_enabled && !std::isfinite(log_posterior()))
    throw std::runtime_error("sampler: log posterior is not finite at the starting state");
}

void Sampler::record_block(const std::string& name, int accepted, int proposed) {
  auto& slot = pending_[name];
  slot.first += accepted;
  slot.second += proposed;
}

double Sampler::log_posterior() const { return joint_log_posterior(state_.params, state_.latent, data_); }

PosteriorDraws Sampler::take_draws() {
  draws_.final_tuning = state_.tuning;
  return std::move(draws_);
}

void Sampler::update_labels_and_weights() {
  auto& p = state_.params;
  auto& s = state_.latent;
  Rng& rng = state_.rng;
  const int d = p.dim(), n = static_cast<int>(s.x.cols()), k_atoms = p.num_atoms();
  const Vector sigma = p.sigma2.cwiseSqrt();
  Vector log_norm(k_atoms);
  for (int k = 0; k < k_atoms; ++k) log_norm(k) = std::log(sigma(k)) + tnorm_log_mass(p.mu(k), p.sigma2(k), p.lower, p.upper);
  Vector lw(k_atoms);
  for (int l = 0; l < d; ++l) {
    const Vector log_pi = p.weights.row(l).transpose().array().log();
    Vector counts = Vector::Zero(k_atoms);
    for (int i = 0; i < n; ++i) {
      if (cfg_.likelihood_enabled) {
        for (int k = 0; k < k_atoms; ++k) {
          const double z = (s.x(l, i) - p.mu(k)) / sigma(k);
          lw(k) = log_pi(k) - 0.5 * z * z - log_norm(k);
        }
        s.labels(l, i) = categorical_log(lw, rng);
      } else {
        s.labels(l, i) = categorical_log(log_pi, rng);
      }
      counts(s.labels(l, i)) += 1.0;
    }
    if (!cfg_.likelihood_enabled) counts.setZero();
    p.weights.row(l) = dirichlet_sample((counts.array() + p.hyper.alpha / k_atoms).matrix(), rng).transpose();
  }
}

Vector Sampler::atom_scale(double n_k) const {
  const auto& h = state_.params.hyper;
  const double ref2 = state_.tuning.atom_sigma_ref * state_.tuning.atom_sigma_ref;
  Vector s(2);
  s(0) = 1.0 / std::sqrt(n_k / ref2 + 1.0 / h.sigma0_sq);
  s(1) = 1.0 / std::sqrt(0.5 * n_k + 6.0 / (M_PI * M_PI));
  return s;
}

void Sampler::update_atoms() {
  auto& p = state_.params;
  const auto& s = state_.latent;
  const int k_atoms = p.num_atoms();
  std::vector<AtomStats> stats(static_cast<std::size_t>(k_atoms));
  if (cfg_.likelihood_enabled) {
    for (Eigen::Index i = 0; i < s.x.cols(); ++i)
      for (Eigen::Index l = 0; l < s.x.rows(); ++l) {
        auto& st = stats[static_cast<std::size_t>(s.labels(l, i))];
        const double v = s.x(l, i);
        st.n += 1.0;
        st.s1 += v;
        st.s2 += v * v;
      }
  }
  int accepted = 0;
  for (int k = 0; k < k_atoms; ++k) {
    const AtomStats& st = stats[static_cast<std::size_t>(k)];
    const Vector scale = atom_scale(st.n);
    const auto& h = p.hyper;
    const double lo = p.lower, hi = p.upper;
    Potential u = [&](const Vector& th) { return atom_neg_log_post(scale(0) * th(0), scale(1) * th(1), st, h, lo, hi); };
    PotentialGrad g = [&](const Vector& th) {
      return Vector(scale.cwiseProduct(grad_atoms(scale(0) * th(0), scale(1) * th(1), st, h, lo, hi)));
    };
    Vector th(2);
    th << p.mu(k) / scale(0), std::log(p.sigma2(k)) / scale(1);
    const HmcResult r = hmc_update(th, u, g, state_.tuning.eps_atoms, cfg_.leapfrog_steps, state_.rng);
    if (r.accepted) {
      p.mu(k) = scale(0) * r.q(0);
      p.sigma2(k) = std::exp(scale(1) * r.q(1));
      ++accepted;
    }
  }
  record_block(kAtoms, accepted, k_atoms);
}

double Sampler::x_log_target(int i, const Vector& x, const MixtureEvaluator& ev) const {
  const double prior = ev.log_density(x);
  if (!std::isfinite(prior) || !cfg_.likelihood_enabled) return prior;
  return prior + subject_loglik(data_.w[static_cast<std::size_t>(i)], x, state_.params.hetero);
}

void Sampler::update_x() {
  if (!cfg_.update_x) return;
  auto& p = state_.params;
  auto& s = state_.latent;
  const MixtureEvaluator ev(p.density());
  const int d = p.dim(), n = static_cast<int>(s.x.cols());
  const Vector tau = state_.tuning.x_scale * state_.tuning.x_base_sd;
  const Vector tau2 = tau.cwiseProduct(tau);
  int accepted = 0;
  Vector prop(d);
  for (int sweep = 0; sweep < cfg_.x_steps; ++sweep) {
    for (int i = 0; i < n; ++i) {
      const Vector cur = s.x.col(i);
      double log_hastings = 0.0;
      for (int l = 0; l < d; ++l) {
        const TruncatedNormal q(cur(l), tau2(l), p.lower, p.upper);
        prop(l) = q.sample(state_.rng);
        log_hastings += q.log_mass() - tnorm_log_mass(prop(l), tau2(l), p.lower, p.upper);
      }
      const double lp_new = x_log_target(i, prop, ev);
      if (!std::isfinite(lp_new)) continue;
      const double lp_cur = x_log_target(i, cur, ev);
      const double log_ratio = lp_new - lp_cur + log_hastings;
      if (!std::isfinite(lp_cur) || std::log(uniform01(state_.rng)) < log_ratio) {
        s.x.col(i) = prop;
        ++accepted;
      }
    }
  }
  record_block(kX, accepted, n * cfg_.x_steps);
}

void Sampler::update_angles() {
  auto& p = state_.params;
  const int d = p.dim();
  if (d < 2) return;
  Matrix scatter = Matrix::Zero(d, d);
  int n_eff = 0;
  if (cfg_.likelihood_enabled) {
    const MixtureEvaluator ev(p.density());
    for (Eigen::Index i = 0; i < state_.latent.x.cols(); ++i) {
      const Vector y = ev.scores(state_.latent.x.col(i));
      scatter.noalias() += y * y.transpose();
    }
    n_eff = static_cast<int>(state_.latent.x.cols());
  }
  const int grid = cfg_.angle_grid_size;
  double cur_lp = angles_log_target(p.angles, scatter, n_eff);
  int accepted = 0, proposed = 0;
  for (int m = 1; m < d; ++m)
    for (int s = 0; s < m; ++s) {
      const double ub = CorrelationAngles::upper_bound(m, s);
      const int j = angle_grid_index(p.angles.zeta[m][s], ub, grid);
      // Stay, left or right with probability 1/3 each; a missing neighbour
      // at the grid edge becomes a stay, keeping the proposal symmetric.
      const double u = uniform01(state_.rng);
      int jn = j;
      if (u < 1.0 / 3.0) jn = j - 1;
      else if (u < 2.0 / 3.0) jn = j + 1;
      if (jn < 0 || jn >= grid || jn == j) continue;
      ++proposed;
      const double old = p.angles.zeta[m][s];
      p.angles.zeta[m][s] = ub * jn / (grid - 1);
      const double new_lp = angles_log_target(p.angles, scatter, n_eff);
      if (std::isfinite(new_lp) && std::log(uniform01(state_.rng)) < new_lp - cur_lp) {
        cur_lp = new_lp;
        ++accepted;
      } else {
        p.angles.zeta[m][s] = old;
      }
    }
  record_block(kAngles, accepted, proposed);
}

void Sampler::refresh_beta_s_precond() {
  const auto& p = state_.params;
  const auto& basis = p.hetero.basis;
  Vector info = Vector::Zero(p.hetero.beta_s.size());
  if (cfg_.likelihood_enabled) {
    for (int i = 0; i < data_.n(); ++i) {
      const Vector x = state_.latent.x.col(i);
      const double s2 = p.hetero.s2(x);
      if (!(s2 > 0.0)) continue;
      const BasisRow r = basis.row(p.hetero.s2_argument(x));
      const double mi = static_cast<double>(data_.w[static_cast<std::size_t>(i)].cols());
      for (int k = 0; k < 4; ++k) info(r.first + k) += mi * r.values[k] * r.values[k] / (2.0 * s2 * s2);
    }
  }
  state_.tuning.beta_s_precond = (info.array() + 1.0 / p.hyper.sigma_s_sq).rsqrt().matrix();
}

void Sampler::update_beta_s() {
  if (!cfg_.update_hetero) return;
  auto& p = state_.params;
  BetaSTerms terms;
  if (cfg_.likelihood_enabled) {
    for (int i = 0; i < data_.n(); ++i) {
      const Vector x = state_.latent.x.col(i);
      const SubjectGeometry g = subject_geometry(p.hetero, x);
      if (!g.valid) throw std::runtime_error("sampler: state left the approximation regime");
      terms.log_ratios.push_back(subject_log_ratios(data_.w[static_cast<std::size_t>(i)], g));
      terms.args.push_back(g.norm_x / static_cast<double>(x.size()));
    }
  }
  const Vector sc = state_.tuning.beta_s_precond;
  const auto& basis = p.hetero.basis;
  const auto& h = p.hyper;
  Potential u = [&](const Vector& th) {
    return beta_s_neg_log_post(sc.cwiseProduct(th), basis, terms, h.mu_s, h.sigma_s_sq);
  };
  PotentialGrad g = [&](const Vector& th) {
    return Vector(sc.cwiseProduct(grad_beta_s(sc.cwiseProduct(th), basis, terms, h.mu_s, h.sigma_s_sq)));
  };
  const Vector th = p.hetero.beta_s.cwiseQuotient(sc);
  const HmcResult r = hmc_update(th, u, g, state_.tuning.eps_beta_s, cfg_.leapfrog_steps, state_.rng);
  if (r.accepted) p.hetero.beta_s = sc.cwiseProduct(r.q);
  record_block(kBetaS, r.accepted ? 1 : 0, 1);
}

void Sampler::update_beta_kappa() {
  if (!cfg_.update_hetero) return;
  auto& p = state_.params;
  auto& t = state_.tuning;
  const int d = p.dim();
  const auto kb = p.hetero.beta_kappa.cols();
  auto total_loglik = [&]() {
    if (!cfg_.likelihood_enabled) return 0.0;
    double acc = 0.0;
    for (int i = 0; i < data_.n(); ++i) {
      acc += subject_loglik(data_.w[static_cast<std::size_t>(i)], state_.latent.x.col(i), p.hetero);
      if (!std::isfinite(acc)) return -kInf;
    }
    return acc;
  };
  double cur_ll = total_loglik();
  int acc_total = 0;
  for (int l = 0; l < d; ++l) {
    int acc = 0;
    for (int step = 0; step < cfg_.kappa_steps; ++step) {
      const Vector cur = p.hetero.beta_kappa.row(l).transpose();
      const Vector mu = p.hyper.mu_kappa.row(l).transpose();
      const double var = p.hyper.sigma_kappa_sq(l);
      Matrix chol;
      bool have = false;
      if (t.kappa_count >= cfg_.kappa_cov_start) {
        Matrix cov = t.kappa_m2[static_cast<std::size_t>(l)] / static_cast<double>(t.kappa_count - 1);
        cov = 0.5 * (cov + cov.transpose());
        cov.diagonal().array() += 1e-8;
        cov *= 2.38 * 2.38 / static_cast<double>(kb);
        Eigen::LLT<Matrix> llt(cov);
        if (llt.info() == Eigen::Success) {
          chol = llt.matrixL();
          have = true;
        }
      }
      if (!have) chol = t.kappa_init_sd.row(l).transpose().asDiagonal();
      Vector z(kb);
      for (Eigen::Index k = 0; k < kb; ++k) z(k) = std_normal(state_.rng);
      const Vector prop = cur + t.kappa_scale(l) * (chol * z);
      if ((prop.array() >= 0.0).all()) {
        p.hetero.beta_kappa.row(l) = prop.transpose();
        const double new_ll = total_loglik();
        const double log_ratio = new_ll + tn_prior(prop, mu, var) - cur_ll - tn_prior(cur, mu, var);
        if (std::isfinite(new_ll) && std::log(uniform01(state_.rng)) < log_ratio) {
          cur_ll = new_ll;
          ++acc;
        } else {
          p.hetero.beta_kappa.row(l) = cur.transpose();
        }
      }
    }
    acc_total += acc;
    record_block(kappa_block(l), acc, cfg_.kappa_steps);
  }
  record_block(kBetaKappa, acc_total, d * cfg_.kappa_steps);
}

void Sampler::adapt() {
  auto& t = state_.tuning;
  const int it = state_.iteration;  // completed iterations
  // Running moments of beta_kappa for the adaptive proposal.
  if (cfg_.update_hetero) {
    ++t.kappa_count;
    for (int l = 0; l < state_.params.dim(); ++l) {
      const Vector b = state_.params.hetero.beta_kappa.row(l).transpose();
      auto& mean = t.kappa_mean[static_cast<std::size_t>(l)];
      const Vector delta = b - mean;
      mean += delta / static_cast<double>(t.kappa_count);
      t.kappa_m2[static_cast<std::size_t>(l)] += delta * (b - mean).transpose();
    }
  }
  if (it % cfg_.adapt_batch != 0) return;
  const int batch = it / cfg_.adapt_batch;
  const double gain = std::max(1.0, 4.0 / std::sqrt(static_cast<double>(batch)));
  auto rate_of = [&](const std::string& name) {
    const auto f = draws_.traces.find(name);
    return f == draws_.traces.end() ? std::numeric_limits<double>::quiet_NaN() : f->second.rate(it - cfg_.adapt_batch, it);
  };
  auto step = [&](double& v, double rate, double target) {
    if (std::isfinite(rate)) v *= std::exp(gain * (rate - target));
  };
  step(t.eps_atoms, rate_of(kAtoms), cfg_.hmc_target);
  if (cfg_.update_x) step(t.x_scale, rate_of(kX), cfg_.mh_target);
  if (cfg_.update_hetero) {
    step(t.eps_beta_s, rate_of(kBetaS), cfg_.hmc_target);
    for (int l = 0; l < state_.params.dim(); ++l) step(t.kappa_scale(l), rate_of(kappa_block(l)), cfg_.mh_target);
    refresh_beta_s_precond();
  }
}

void Sampler::iterate() {
  pending_.clear();
  update_labels_and_weights();
  update_atoms();
  update_x();
  update_angles();
  update_beta_s();
  update_beta_kappa();
  for (const auto& [name, ap] : pending_) {
    auto& tr = draws_.traces[name];
    // Blocks that start reporting late are padded so indices stay aligned.
    while (static_cast<int>(tr.accepted.size()) < state_.iteration) tr.record(0, 0);
    tr.record(ap.first, ap.second);
  }
  ++state_.iteration;
  const int it = state_.iteration;
  if (it <= cfg_.burn_in) {
    adapt();
    if (it == cfg_.burn_in) state_.tuning.frozen = true;
  }
  double lp = std::numeric_limits<double>::quiet_NaN();
  if (it % cfg_.log_post_every == 0) {
    lp = log_posterior();
    draws_.log_post_iter.push_back(it);
    draws_.log_post.push_back(lp);
  }
  if (it > cfg_.burn_in && (it - cfg_.burn_in) % cfg_.thin == 0)
    draws_.draws.push_back(Draw{it, state_.params, state_.latent});
  if (on_diagnostics && it % cfg_.diag_every == 0) {
    DiagnosticsRecord rec;
    rec.iteration = it;
    for (const auto& [name, tr] : draws_.traces) rec.acceptance[name] = tr.rate(it - cfg_.diag_every, it);
    rec.eps_atoms = state_.tuning.eps_atoms;
    rec.eps_beta_s = state_.tuning.eps_beta_s;
    rec.x_scale = state_.tuning.x_scale;
    rec.kappa_scale = state_.tuning.kappa_scale;
    rec.log_post = std::isfinite(lp) ? lp : log_posterior();
    on_diagnostics(rec);
  }
  if (on_checkpoint && it % cfg_.checkpoint_every == 0 && it < cfg_.n_iter) on_checkpoint(*this);
}

void Sampler::run() {
  while (state_.iteration < cfg_.n_iter) iterate();
  draws_.final_tuning = state_.tuning;
}

}  // namespace rotdecon
