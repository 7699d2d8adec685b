#include <doctest.h>

#include "oracles.hpp"

#include <rotdecon/initialize.hpp>
#include <rotdecon/pipeline.hpp>
#include <rotdecon/random.hpp>
#include <rotdecon/sampler.hpp>
#include <rotdecon/simulate.hpp>
#include <rotdecon/truncnorm.hpp>

#include <cmath>

using namespace rotdecon;

namespace {

/// Mean and batch-means standard error of an autocorrelated series.
struct SeriesStats {
  double mean{};
  double se{};
};

SeriesStats batch_stats(const std::vector<double>& v, int batches = 40) {
  const auto n = v.size();
  const std::size_t b = n / static_cast<std::size_t>(batches);
  std::vector<double> means;
  double total = 0.0;
  for (int k = 0; k < batches; ++k) {
    double s = 0.0;
    for (std::size_t t = k * b; t < (k + 1) * b; ++t) s += v[t];
    means.push_back(s / static_cast<double>(b));
    total += s;
  }
  const double m = total / static_cast<double>(b * batches);
  double var = 0.0;
  for (double x : means) var += (x - m) * (x - m);
  var /= batches - 1.0;
  return {m, std::sqrt(var / batches)};
}

ReplicateDataset small_data(int n, int m, std::uint64_t seed) {
  SimScenario sc;
  sc.n = n;
  sc.m = m;
  sc.seed = seed;
  return simulate(sc).data;
}

InitConfig quick_init() {
  InitConfig c;
  c.num_atoms = 4;
  c.warm_start_sweeps = 20;
  return c;
}

/// Mean of TN(mu, var) on [0, inf) by quadrature.
double tn_mean(double mu, double var) {
  const TruncatedNormal t(mu, var, 0.0, std::numeric_limits<double>::infinity());
  return oracle::integrate([&](double x) { return x * t.pdf(x); }, 0.0, mu + 12.0 * std::sqrt(var), 1e-10);
}

}  // namespace

TEST_CASE("config validation") {
  SamplerConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [&](auto mutate) {
    SamplerConfig b;
    mutate(b);
    CHECK_THROWS_AS(b.validate(), ValidationError);
  };
  bad([](SamplerConfig& b) { b.n_iter = 0; });
  bad([](SamplerConfig& b) { b.burn_in = b.n_iter; });
  bad([](SamplerConfig& b) { b.thin = 0; });
  bad([](SamplerConfig& b) { b.angle_grid_size = 40; });
  bad([](SamplerConfig& b) { b.eps_atoms = 0.0; });
  bad([](SamplerConfig& b) { b.x_steps = 0; });
  bad([](SamplerConfig& b) { b.leapfrog_steps = 0; });
}

TEST_CASE("angle grid index") {
  CHECK(angle_grid_index(0.0, M_PI, 41) == 0);
  CHECK(angle_grid_index(M_PI, M_PI, 41) == 40);
  CHECK(angle_grid_index(M_PI / 2, M_PI, 41) == 20);
  CHECK(angle_grid_index(M_PI / 2, 2 * M_PI, 41) == 10);
  CHECK(angle_grid_index(7.0, 2 * M_PI, 41) == 40);
}

TEST_CASE("without the likelihood every block samples its prior") {
  const ReplicateDataset raw = small_data(20, 3, 21);
  PreparedChain pc = prepare_chain(raw, quick_init(), 5);
  Hyperparameters& h = pc.state.params.hyper;
  h.mu0 = 5.0;
  h.sigma0_sq = 4.0;
  h.a0 = 3.0;
  h.b0 = 2.0;
  h.alpha = 2.0;
  h.sigma_s_sq = 0.01;
  h.mu_s = Vector::Constant(h.mu_s.size(), 0.05);
  pc.state.params.hetero.beta_s = h.mu_s;
  SamplerConfig cfg;
  cfg.likelihood_enabled = false;
  cfg.n_iter = 12000;
  cfg.burn_in = 2000;
  cfg.thin = 1;
  cfg.angle_grid_size = 5;
  Sampler s(pc.data, cfg, pc.state);
  s.run();
  const PosteriorDraws& dr = s.draws();
  REQUIRE(dr.size() == 10000);
  const int k_atoms = 4;
  const double a = h.alpha / k_atoms;

  std::vector<double> mu, prec, w0, w0sq, bs, bs_sq, bk;
  std::vector<int> angle_idx;
  for (int t = 0; t < dr.size(); ++t) {
    const ModelParams& p = dr.draws[static_cast<std::size_t>(t)].params;
    mu.push_back(p.mu(t % k_atoms));
    prec.push_back(1.0 / p.sigma2(t % k_atoms));
    w0.push_back(p.weights(t % 3, t % k_atoms));
    w0sq.push_back(std::pow(p.weights(t % 3, t % k_atoms), 2));
    bs.push_back(p.hetero.beta_s(2));
    bk.push_back(p.hetero.beta_kappa(1, 3));
    if (t % 100 == 0)
      for (int m = 1; m < 3; ++m)
        for (int q = 0; q < m; ++q)
          angle_idx.push_back(angle_grid_index(p.angles.zeta[m][q], CorrelationAngles::upper_bound(m, q), 5));
  }
  auto check_mean = [](const std::vector<double>& v, double expected, const char* what) {
    const SeriesStats st = batch_stats(v);
    INFO(what << ": mean " << st.mean << " expected " << expected << " se " << st.se);
    CHECK(std::abs(st.mean - expected) <= 4.0 * st.se);
  };
  check_mean(mu, h.mu0, "mu");
  check_mean(prec, h.a0 / h.b0, "1 / sigma2");
  // Dirichlet(a, ..., a): E w = 1 / K, E w^2 = a (a + 1) / (A (A + 1)).
  check_mean(w0, 1.0 / k_atoms, "weight");
  check_mean(w0sq, a * (a + 1.0) / (h.alpha * (h.alpha + 1.0)), "weight^2");
  check_mean(bs, tn_mean(0.05, 0.01), "beta_s");
  const ModelParams& p0 = pc.state.params;
  check_mean(bk, tn_mean(p0.hyper.mu_kappa(1, 3), p0.hyper.sigma_kappa_sq(1)), "beta_kappa");

  // Flat angle target: thinned grid positions are uniform.
  std::vector<double> counts(5, 0.0);
  for (int j : angle_idx) counts[static_cast<std::size_t>(j)] += 1.0;
  const double e = angle_idx.size() / 5.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - e) * (c - e) / e;
  CHECK(oracle::chi2_sf(chi2, 4.0) > 1e-3);
  for (const auto& [name, tr] : dr.traces) CHECK(tr.accepted.size() == 12000u);
}

TEST_CASE("x without the likelihood samples the copula density") {
  const ReplicateDataset raw = small_data(30, 3, 22);
  PreparedChain pc = prepare_chain(raw, quick_init(), 6);
  SamplerConfig cfg;
  cfg.likelihood_enabled = false;
  Sampler s(pc.data, cfg, pc.state);
  // The default proposal is sized for the posterior; widen it to the prior
  // scale and thin hard so the retained draws are close to independent.
  s.mutable_state().tuning.x_scale = 5.0;
  const JointDensityModel model = s.state().params.density();
  std::vector<std::vector<double>> cols(3);
  for (int t = 0; t < 20000; ++t) {
    s.update_x();
    if (t >= 500 && t % 100 == 0)
      for (int i = 0; i < 30; ++i)
        for (int l = 0; l < 3; ++l) cols[static_cast<std::size_t>(l)].push_back(s.state().latent.x(l, i));
  }
  for (int l = 0; l < 3; ++l) {
    const TruncNormMixture m = model.marginal(l);
    CHECK(oracle::ks_pvalue(cols[static_cast<std::size_t>(l)], [&](double v) { return m.cdf(v); }) > 1e-3);
  }
}

TEST_CASE("a single atom keeps weight one and label zero") {
  const ReplicateDataset raw = small_data(15, 3, 23);
  InitConfig ic = quick_init();
  ic.num_atoms = 1;
  const PreparedChain pc = prepare_chain(raw, ic, 7);
  SamplerConfig cfg;
  cfg.n_iter = 20;
  cfg.burn_in = 10;
  cfg.thin = 1;
  Sampler s(pc.data, cfg, pc.state);
  s.run();
  for (const Draw& d : s.draws().draws) {
    CHECK((d.params.weights.array() == 1.0).all());
    CHECK((d.latent.labels.array() == 0).all());
  }
}

TEST_CASE("separated atoms: labels follow x, weights average to the Dirichlet posterior mean") {
  const ReplicateDataset raw = small_data(40, 3, 24);
  const PreparedChain pc = prepare_chain(raw, quick_init(), 8);
  SamplerConfig cfg;
  Sampler s(pc.data, cfg, pc.state);
  // Two narrow atoms either side of 5: every x is far enough from the
  // midpoint (in atom SDs) that the nearest atom wins to machine precision.
  ModelParams& p = s.mutable_state().params;
  p.mu = (Vector(2) << 3.0, 7.0).finished();
  p.sigma2 = Vector::Constant(2, 1e-4);
  p.weights = Matrix::Constant(3, 2, 0.5);
  p.hyper.alpha = 1.5;
  const Matrix x = s.state().latent.x;
  REQUIRE((x.array() - 5.0).abs().minCoeff() > 1e-3);
  const int reps = 4000;
  Matrix sum = Matrix::Zero(3, 2);
  Matrix counts = Matrix::Zero(3, 2);
  for (int l = 0; l < 3; ++l)
    for (int i = 0; i < 40; ++i) counts(l, x(l, i) < 5.0 ? 0 : 1) += 1.0;
  for (int t = 0; t < reps; ++t) {
    s.update_labels_and_weights();
    sum += s.state().params.weights;
    for (int l = 0; l < 3; ++l)
      for (int i = 0; i < 40; ++i) REQUIRE(s.state().latent.labels(l, i) == (x(l, i) < 5.0 ? 0 : 1));
  }
  for (int l = 0; l < 3; ++l)
    for (int k = 0; k < 2; ++k) {
      const double a = counts(l, k) + 1.5 / 2.0, total = 40.0 + 1.5;
      const double mean = a / total;
      const double sd = std::sqrt(mean * (1.0 - mean) / (total + 1.0));
      CHECK(std::abs(sum(l, k) / reps - mean) <= 4.0 * sd / std::sqrt(reps));
    }
}

TEST_CASE("retained draws, frozen adaptation, finite log posterior, determinism") {
  const ReplicateDataset raw = small_data(30, 3, 25);
  SamplerConfig cfg;
  cfg.n_iter = 160;
  cfg.burn_in = 100;
  cfg.thin = 3;
  cfg.adapt_batch = 20;
  cfg.log_post_every = 5;
  const FitOutput a = fit_model(raw, cfg, quick_init(), 3);
  REQUIRE(a.draws.size() == (160 - 100) / 3);
  for (int t = 0; t < a.draws.size(); ++t) CHECK(a.draws.draws[static_cast<std::size_t>(t)].iteration == 100 + 3 * (t + 1));
  CHECK(a.final_state.iteration == 160);
  CHECK(a.final_state.tuning.frozen);
  CHECK(a.draws.log_post.size() == 32u);
  for (double v : a.draws.log_post) CHECK(std::isfinite(v));

  // Tuning after burn-in equals the tuning at the end.
  SamplerConfig short_cfg = cfg;
  short_cfg.n_iter = 101;
  const FitOutput at_burn = fit_model(raw, short_cfg, quick_init(), 3);
  const Tuning& t0 = at_burn.final_state.tuning;
  const Tuning& t1 = a.final_state.tuning;
  CHECK(t0.eps_atoms == t1.eps_atoms);
  CHECK(t0.eps_beta_s == t1.eps_beta_s);
  CHECK(t0.x_scale == t1.x_scale);
  CHECK(t0.kappa_scale == t1.kappa_scale);
  CHECK(t0.beta_s_precond == t1.beta_s_precond);
  CHECK(t0.kappa_count == t1.kappa_count);

  const FitOutput b = fit_model(raw, cfg, quick_init(), 3);
  REQUIRE(b.draws.size() == a.draws.size());
  for (int t = 0; t < a.draws.size(); ++t) {
    const Draw& da = a.draws.draws[static_cast<std::size_t>(t)];
    const Draw& db = b.draws.draws[static_cast<std::size_t>(t)];
    CHECK(da.params.mu == db.params.mu);
    CHECK(da.latent.x == db.latent.x);
    CHECK(da.params.hetero.beta_kappa == db.params.hetero.beta_kappa);
  }
  const FitOutput c = fit_model(raw, cfg, quick_init(), 4);
  CHECK(c.draws.draws.back().latent.x != a.draws.draws.back().latent.x);
}

TEST_CASE("with many precise replicates x is recovered within 2 percent") {
  SimScenario sc;
  sc.n = 15;
  sc.m = 50;
  sc.seed = 26;
  // Concentrations in the thousands and a tiny length factor make every
  // subject well determined by its replicates.
  sc.kappa_scale = 6000.0;
  sc.s_scale = 1500.0;
  const SimulatedData sim = simulate(sc);
  SamplerConfig cfg;
  cfg.n_iter = 400;
  cfg.burn_in = 200;
  cfg.thin = 2;
  const FitOutput fit = fit_model(sim.data, cfg, quick_init(), 9);
  Matrix mean = Matrix::Zero(3, 15);
  for (const Draw& d : fit.draws.draws) mean += d.latent.x;
  mean /= fit.draws.size();
  // Back to original units.
  mean = fit.rescaling.factor.cwiseInverse().asDiagonal() * mean;
  const double rel = ((mean - sim.x).array() / sim.x.array()).abs().maxCoeff();
  INFO("max relative error " << rel);
  CHECK(rel <= 0.02);
}

TEST_CASE("angle chain recovers rho = 0.7 in d = 2") {
  // True x and the true marginals, so the angle block is the only thing
  // being estimated; n = 500 makes the posterior narrower than a grid cell.
  SimScenario sc;
  sc.d = 2;
  sc.n = 500;
  sc.seed = 27;
  const SimulatedData sim = simulate(sc);
  REQUIRE(angles_to_correlation(sim.truth.angles)(0, 1) == doctest::Approx(0.7));
  InitConfig ic;
  ic.num_atoms = sim.truth.mu.size();
  ic.lower = sim.truth.lower;
  ic.upper = sim.truth.upper;
  ic.warm_start_sweeps = 0;
  Rng init_rng(1);
  InitResult init = initialize(sim.data, ic, init_rng);
  init.params.mu = sim.truth.mu;
  init.params.sigma2 = sim.truth.sigma2;
  init.params.weights = sim.truth.weights;
  init.latent.x = sim.x;
  SamplerConfig cfg;
  Sampler s(sim.data, cfg, ChainState{init.params, init.latent, Tuning{}, 0, Rng(2)});
  const int grid = cfg.angle_grid_size;
  const double ub = CorrelationAngles::upper_bound(1, 0);
  std::vector<int> hist(static_cast<std::size_t>(grid), 0);
  for (int t = 0; t < 2000; ++t) {
    s.update_angles();
    if (t >= 200) ++hist[static_cast<std::size_t>(angle_grid_index(s.state().params.angles.zeta[1][0], ub, grid))];
  }
  const int mode = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  // cos(zeta) = 0.7 has two solutions on [0, 2 pi].
  const double z1 = std::acos(0.7), z2 = 2.0 * M_PI - z1;
  const double cell = ub / (grid - 1);
  const double zm = mode * cell;
  INFO("modal angle " << zm << " R12 " << std::cos(zm));
  CHECK(std::min(std::abs(zm - z1), std::abs(zm - z2)) <= cell);
}
