#pragma once

#include "rotdecon/initialize.hpp"
#include "rotdecon/model.hpp"
#include "rotdecon/sampler.hpp"
#include "rotdecon/simulate.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace rotdecon {

using Json = nlohmann::json;

/// Malformed input file; the message carries the source and line number.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Header subject_id,replicate_id,w_1..w_d (any column order). Rows of a
/// subject need not be contiguous; subjects keep first-appearance order and
/// replicates are sorted by replicate_id.
ReplicateDataset read_dataset_csv(std::istream& in, const std::string& source = "<stream>");
ReplicateDataset read_dataset_csv(const std::string& path);
void write_dataset_csv(std::ostream& out, const ReplicateDataset& data);
void write_dataset_csv(const std::string& path, const ReplicateDataset& data);

Json to_json(const JointDensityModel& m);
JointDensityModel density_from_json(const Json& j);
Json to_json(const SimScenario& sc);
SimScenario scenario_from_json(const Json& j);
Json to_json(const SamplerConfig& c);
SamplerConfig sampler_config_from_json(const Json& j);
Json to_json(const InitConfig& c);
InitConfig init_config_from_json(const Json& j);

/// Generating truth written next to a simulated dataset.
struct TruthSidecar {
  SimScenario scenario;
  JointDensityModel truth;
  Matrix x;  ///< d x n latent values
};

void write_truth(const std::string& path, const TruthSidecar& t);
TruthSidecar read_truth(const std::string& path);

Json to_json(const ChainState& s);
ChainState chain_state_from_json(const Json& j);
Json to_json(const PosteriorDraws& d);
PosteriorDraws posterior_draws_from_json(const Json& j);

/// Full chain state and everything retained so far; resuming from it gives
/// the same draws as an uninterrupted run.
struct Checkpoint {
  ChainState state;
  PosteriorDraws draws;
};

/// Written to a temporary file and renamed into place.
void save_checkpoint(const std::string& path, const ChainState& state, const PosteriorDraws& draws);
Checkpoint load_checkpoint(const std::string& path);

/// One CSV per block (atoms, weights, angles, beta_s, beta_kappa, x), the
/// acceptance traces, the log-posterior trace and draws_meta.json.
/// Values use %.17g so they read back exactly.
void write_draws(const std::string& dir, const PosteriorDraws& draws, const Rescaling& rescaling);

/// Retained densities (model units) and the rescaling factors of a draws directory.
struct DrawSet {
  std::vector<JointDensityModel> models;
  Vector scale;
};

DrawSet read_draws(const std::string& dir);

/// One line of the diagnostics log.
std::string diagnostics_line(const DiagnosticsRecord& rec);

/// Reads a whole JSON file, with the path in any error message.
Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace rotdecon
