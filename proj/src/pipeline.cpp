#include "rotdecon/pipeline.hpp"

#include <chrono>

namespace rotdecon {

namespace {

FitOutput drive(Sampler& s, const Rescaling& r, const FitHooks& hooks) {
  s.on_diagnostics = hooks.on_diagnostics;
  s.on_checkpoint = hooks.on_checkpoint;
  const auto t0 = std::chrono::steady_clock::now();
  s.run();
  const auto t1 = std::chrono::steady_clock::now();
  FitOutput out;
  out.rescaling = r;
  out.final_state = s.state();
  out.draws = s.take_draws();
  out.seconds = std::chrono::duration<double>(t1 - t0).count();
  return out;
}

}  // namespace

PreparedChain prepare_chain(const ReplicateDataset& raw, const InitConfig& init, std::uint64_t seed) {
  raw.validate();
  PreparedChain pc;
  pc.rescaling = fit_rescaling(raw, init.rescale_target);
  pc.data = pc.rescaling.apply(raw);
  Rng rng(seed);
  InitResult ir = initialize(pc.data, init, rng);
  pc.state = ChainState{std::move(ir.params), std::move(ir.latent), Tuning{}, 0, rng};
  return pc;
}

FitOutput fit_model(const ReplicateDataset& raw, const SamplerConfig& cfg, const InitConfig& init,
                    std::uint64_t seed, const FitHooks& hooks) {
  PreparedChain pc = prepare_chain(raw, init, seed);
  Sampler s(pc.data, cfg, std::move(pc.state));
  return drive(s, pc.rescaling, hooks);
}

FitOutput resume_model(const ReplicateDataset& raw, const SamplerConfig& cfg, const InitConfig& init,
                       ChainState state, PosteriorDraws so_far, const FitHooks& hooks) {
  raw.validate();
  const Rescaling r = fit_rescaling(raw, init.rescale_target);
  const ReplicateDataset data = r.apply(raw);
  Sampler s(data, cfg, std::move(state), std::move(so_far));
  return drive(s, r, hooks);
}

}  // namespace rotdecon
