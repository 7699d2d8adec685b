#include <doctest.h>

#include <rotdecon/initialize.hpp>
#include <rotdecon/random.hpp>
#include <rotdecon/simulate.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace rotdecon;

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const Eigen::Map<const Vector> x(ra.data(), static_cast<Eigen::Index>(ra.size()));
  const Eigen::Map<const Vector> y(rb.data(), static_cast<Eigen::Index>(rb.size()));
  const Vector cx = x.array() - x.mean(), cy = y.array() - y.mean();
  return cx.dot(cy) / (cx.norm() * cy.norm());
}

SimulatedData small_sim(int n, std::uint64_t seed) {
  SimScenario sc;
  sc.n = n;
  sc.seed = seed;
  return simulate(sc);
}

void check_valid(const InitResult& r, const InitConfig& cfg, int d, int n) {
  const ModelParams& p = r.params;
  CHECK(p.dim() == d);
  CHECK(p.num_atoms() == cfg.num_atoms);
  CHECK(r.latent.x.rows() == d);
  CHECK(r.latent.x.cols() == n);
  CHECK(r.latent.x.minCoeff() > cfg.lower);
  CHECK(r.latent.x.maxCoeff() < cfg.upper);
  CHECK((p.sigma2.array() > 0.0).all());
  CHECK((p.weights.array() > 0.0).all());
  for (int l = 0; l < d; ++l) CHECK(p.weights.row(l).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.hetero.beta_kappa.minCoeff() >= d);
  CHECK(p.hetero.beta_s.minCoeff() >= 0.0);
  CHECK(p.hetero.beta_kappa.cols() == cfg.num_intervals + 3);
  CHECK(p.angles.d == d);
  CHECK(r.latent.labels.minCoeff() >= 0);
  CHECK(r.latent.labels.maxCoeff() < cfg.num_atoms);
  CHECK(p.mu.allFinite());
  CHECK(p.hyper.sigma0_sq > 0.0);
  CHECK(p.hyper.sigma_s_sq > 0.0);
  CHECK((p.hyper.sigma_kappa_sq.array() > 0.0).all());
}

}  // namespace

TEST_CASE("rescaling maps the largest replicate to the target") {
  const SimulatedData sim = small_sim(50, 3);
  const Rescaling r = fit_rescaling(sim.data, 10.0);
  const ReplicateDataset scaled = r.apply(sim.data);
  Vector mx = Vector::Zero(3);
  for (const auto& w : scaled.w) mx = mx.cwiseMax(w.cwiseAbs().rowwise().maxCoeff());
  for (int l = 0; l < 3; ++l) CHECK(mx(l) == doctest::Approx(10.0).epsilon(1e-12));
  const Vector x = (Vector(3) << 1.0, 2.0, 3.0).finished();
  CHECK(r.to_model(x) == r.factor.cwiseProduct(x));
  CHECK(r.log_jacobian() == doctest::Approx(r.factor.array().log().sum()));

  ReplicateDataset zero = sim.data;
  for (auto& w : zero.w) w.row(1).setZero();
  CHECK_THROWS_AS(fit_rescaling(zero, 10.0), ValidationError);
}

TEST_CASE("subject means") {
  ReplicateDataset data;
  data.d = 2;
  data.w.push_back((Matrix(2, 3) << 1.0, 2.0, 3.0, 4.0, 5.0, 9.0).finished());
  data.subject_ids = {"a"};
  CHECK(subject_means(data) == (Matrix(2, 1) << 2.0, 6.0).finished());
}

TEST_CASE("initialization on simulated data is a valid state") {
  const SimulatedData sim = small_sim(100, 5);
  InitConfig cfg;
  cfg.warm_start_sweeps = 50;
  const ReplicateDataset scaled = fit_rescaling(sim.data, cfg.rescale_target).apply(sim.data);
  Rng rng(7);
  const InitResult r = initialize(scaled, cfg, rng);
  check_valid(r, cfg, 3, 100);
  CHECK(r.latent.x == subject_means(scaled).cwiseMax(cfg.lower + 1e-5).cwiseMin(cfg.upper - 1e-5));
}

TEST_CASE("identical replicates give zero length variance") {
  ReplicateDataset data;
  data.d = 2;
  Rng g(8);
  for (int i = 0; i < 30; ++i) {
    const Vector x = (Vector(2) << 1.0 + 8.0 * uniform01(g), 1.0 + 8.0 * uniform01(g)).finished();
    data.w.push_back(x.replicate(1, 3));
    data.subject_ids.push_back(std::to_string(i));
  }
  InitConfig cfg;
  cfg.num_atoms = 4;
  cfg.warm_start_sweeps = 10;
  Rng rng(9);
  const InitResult r = initialize(data, cfg, rng);
  CHECK(r.s2_targets.isZero());
  CHECK(r.params.hetero.beta_s.isZero());
  CHECK(r.params.hetero.beta_kappa.allFinite());
  check_valid(r, cfg, 2, 30);
}

TEST_CASE("initial kappa splines track the generating 60 / x") {
  // Original units (no rescaling) so that kappa = 60 / x applies directly.
  const SimulatedData sim = small_sim(300, 11);
  InitConfig cfg;
  cfg.warm_start_sweeps = 0;
  Rng rng(12);
  const InitResult r = initialize(sim.data, cfg, rng);
  for (int l = 0; l < 3; ++l) {
    std::vector<double> est, truth;
    for (int i = 0; i < 300; ++i) {
      est.push_back(r.params.hetero.kappa(sim.x.col(i))(l));
      truth.push_back(60.0 / sim.x(l, i));
    }
    CHECK(spearman(est, truth) > 0.5);
  }
}

TEST_CASE("initialization is deterministic and validates its inputs") {
  const SimulatedData sim = small_sim(40, 13);
  InitConfig cfg;
  cfg.warm_start_sweeps = 20;
  Rng a(1), b(1);
  const InitResult ra = initialize(sim.data, cfg, a), rb = initialize(sim.data, cfg, b);
  CHECK(ra.params.mu == rb.params.mu);
  CHECK(ra.params.hetero.beta_kappa == rb.params.hetero.beta_kappa);
  CHECK(ra.latent.labels == rb.latent.labels);
  InitConfig bad = cfg;
  bad.upper = bad.lower;
  CHECK_THROWS_AS(initialize(sim.data, bad, a), ValidationError);
  bad = cfg;
  bad.num_atoms = 0;
  CHECK_THROWS_AS(initialize(sim.data, bad, a), ValidationError);
  ReplicateDataset two = sim.data;
  two.w[0] = two.w[0].leftCols(2).eval();
  CHECK_THROWS_AS(initialize(two, cfg, a), ValidationError);
}
