#pragma once

#include "rotdecon/initialize.hpp"
#include "rotdecon/sampler.hpp"

#include <cstdint>
#include <functional>

namespace rotdecon {

/// Rescaled data plus the starting chain state, all from one seed.
struct PreparedChain {
  Rescaling rescaling;
  ReplicateDataset data;  ///< in model units
  ChainState state;
};

/// Rescale, initialize and seed the chain. The same engine drives the
/// initialization and then the sampler.
PreparedChain prepare_chain(const ReplicateDataset& raw, const InitConfig& init, std::uint64_t seed);

/// Draws in model units; densities in original units need rescaling.factor.
struct FitOutput {
  Rescaling rescaling;
  PosteriorDraws draws;
  ChainState final_state;
  double seconds{};
};

struct FitHooks {
  std::function<void(const DiagnosticsRecord&)> on_diagnostics;
  std::function<void(const Sampler&)> on_checkpoint;
};

FitOutput fit_model(const ReplicateDataset& raw, const SamplerConfig& cfg, const InitConfig& init,
                    std::uint64_t seed, const FitHooks& hooks = {});

/// Continue a chain from a saved state and the draws retained so far.
FitOutput resume_model(const ReplicateDataset& raw, const SamplerConfig& cfg, const InitConfig& init,
                       ChainState state, PosteriorDraws so_far, const FitHooks& hooks = {});

}  // namespace rotdecon
