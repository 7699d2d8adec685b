#pragma once

#include "rotdecon/copula.hpp"
#include "rotdecon/model.hpp"
#include "rotdecon/types.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace rotdecon {

struct SamplerConfig {
  int n_iter{5000};
  int burn_in{3000};
  int thin{5};
  int leapfrog_steps{30};
  double eps_atoms{0.2};    ///< initial HMC step (preconditioned units)
  double eps_beta_s{0.2};
  double x_scale{1.0};      ///< initial multiplier of the x proposal SDs
  double kappa_scale{1.0};  ///< initial multiplier of the beta_kappa proposal covariance
  int angle_grid_size{41};
  int x_steps{1};       ///< MH sweeps over the subjects per iteration
  int kappa_steps{1};   ///< MH steps per beta_kappa row per iteration
  double hmc_target{0.75};
  double mh_target{0.45};
  int adapt_batch{50};
  int kappa_cov_start{200};   ///< burn-in draws before the empirical covariance is used
  int log_post_every{10};
  int diag_every{100};
  int checkpoint_every{500};
  bool likelihood_enabled{true};  ///< false samples the prior of every block
  bool update_x{true};            ///< false holds x fixed (naive baseline)
  bool update_hetero{true};       ///< false holds beta_s and beta_kappa fixed

  void validate() const;
};

/// Per-iteration accepted / proposed counts of one block.
struct BlockTrace {
  std::vector<int> accepted;
  std::vector<int> proposed;

  void record(int a, int p) {
    accepted.push_back(a);
    proposed.push_back(p);
  }
  /// Acceptance rate over iterations [from, to).
  double rate(int from, int to) const;
};

/// Adapted scales and the running moments behind the beta_kappa proposal.
struct Tuning {
  double eps_atoms{};
  double eps_beta_s{};
  double x_scale{};
  Vector kappa_scale;           ///< per dimension
  Vector x_base_sd;             ///< per dimension
  double atom_sigma_ref{1.0};   ///< reference SD for the atom preconditioner
  Vector beta_s_precond;        ///< per-coefficient HMC scale
  Matrix kappa_init_sd;         ///< d x K_kappa, proposal SDs before adaptation
  int kappa_count{};
  std::vector<Vector> kappa_mean;
  std::vector<Matrix> kappa_m2;
  bool frozen{};
};

struct ChainState {
  ModelParams params;
  LatentState latent;
  Tuning tuning;
  int iteration{};  ///< completed iterations
  Rng rng;
};

struct Draw {
  int iteration{};
  ModelParams params;
  LatentState latent;
};

struct PosteriorDraws {
  std::vector<Draw> draws;
  std::map<std::string, BlockTrace> traces;
  std::vector<int> log_post_iter;
  std::vector<double> log_post;
  Tuning final_tuning;

  int size() const { return static_cast<int>(draws.size()); }
};

/// Line-delimited diagnostics record emitted every `diag_every` iterations.
struct DiagnosticsRecord {
  int iteration{};
  std::map<std::string, double> acceptance;  ///< over the last diag_every iterations
  double eps_atoms{};
  double eps_beta_s{};
  double x_scale{};
  Vector kappa_scale;
  double log_post{};
};

class Sampler {
 public:
  Sampler(const ReplicateDataset& data, const SamplerConfig& cfg, ChainState state);
  /// Resume with previously retained draws and traces.
  Sampler(const ReplicateDataset& data, const SamplerConfig& cfg, ChainState state, PosteriorDraws so_far);

  /// One full sweep: labels and weights, atoms, x, angles, beta_s, beta_kappa.
  void iterate();
  /// Runs until cfg.n_iter iterations are complete.
  void run();

  void update_labels_and_weights();
  void update_atoms();
  void update_x();
  void update_angles();
  void update_beta_s();
  void update_beta_kappa();

  double log_posterior() const;
  const ChainState& state() const { return state_; }
  ChainState& mutable_state() { return state_; }
  const PosteriorDraws& draws() const { return draws_; }
  PosteriorDraws take_draws();
  const SamplerConfig& config() const { return cfg_; }

  std::function<void(const DiagnosticsRecord&)> on_diagnostics;
  std::function<void(const Sampler&)> on_checkpoint;

 private:
  void record_block(const std::string& name, int accepted, int proposed);
  void adapt();
  void refresh_beta_s_precond();
  double x_log_target(int i, const Vector& x, const MixtureEvaluator& ev) const;
  Vector atom_scale(double n_k) const;

  const ReplicateDataset& data_;
  SamplerConfig cfg_;
  ChainState state_;
  PosteriorDraws draws_;
  std::map<std::string, std::pair<int, int>> pending_;
};

/// Tuning defaults derived from an initialized state.
Tuning default_tuning(const ModelParams& params, const LatentState& latent, const ReplicateDataset& data,
                      const SamplerConfig& cfg);

/// Grid point index of an angle (nearest of M points on [0, upper]).
int angle_grid_index(double value, double upper, int grid_size);

}  // namespace rotdecon
