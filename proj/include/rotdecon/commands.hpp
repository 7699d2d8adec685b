#pragma once

#include "rotdecon/evaluation.hpp"
#include "rotdecon/io.hpp"
#include "rotdecon/pipeline.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace rotdecon {

enum class Mode { simulate, fit, evaluate, benchmark };

struct EvalSpec {
  int grid_size{200};     ///< marginal grid points on [lower, upper] of the truth
  int mc_points{10000};   ///< fresh draws from the truth for the joint ISE
};

struct BenchSpec {
  std::vector<int> dims{3, 5, 10};
  int n{100};
  int m{3};
  int iterations{200};
};

/// One batch job. Paths are used as given (relative to the working directory).
struct RunConfig {
  Mode mode{Mode::fit};
  std::uint64_t seed{};
  bool has_seed{};
  std::string output_dir{"runs"};  ///< parent of the timestamped run directory
  std::string run_dir;             ///< explicit run directory (skips the timestamped name)
  std::string data_path;           ///< fit: input CSV
  std::string truth_path;          ///< evaluate: truth sidecar
  std::string draws_dir;           ///< evaluate: directory written by fit
  std::string resume_path;         ///< fit: checkpoint to continue from
  SimScenario scenario;
  SamplerConfig sampler;
  InitConfig init;
  EvalSpec eval;
  BenchSpec bench;

  /// Throws ValidationError: missing seed, missing or nonexistent inputs.
  void validate() const;
};

Mode mode_from_string(const std::string& s);
std::string to_string(Mode m);

RunConfig run_config_from_json(const Json& j);
Json to_json(const RunConfig& c);
RunConfig load_run_config(const std::string& path);

/// run_dir if set, else output_dir/<UTC timestamp>_seed<seed> (created).
std::string make_run_dir(const RunConfig& c);

struct SimulateResult {
  std::string data_path;
  std::string truth_path;
};

struct FitResult {
  std::string draws_dir;
  int iterations{};
  int retained{};
  double seconds{};
  /// Acceptance rates over the last 500 burn-in iterations.
  std::map<std::string, double> burn_in_acceptance;
};

struct EvaluateResult {
  Vector marginal_ise;  ///< per dimension
  double joint_ise{};
};

struct BenchmarkResult {
  std::vector<double> dims;
  std::vector<double> seconds;
  ScalingFit fit;
};

// Each command writes into run_dir and prints a short summary to `log`.
SimulateResult cmd_simulate(const RunConfig& c, const std::string& run_dir, std::ostream& log);
FitResult cmd_fit(const RunConfig& c, const std::string& run_dir, std::ostream& log);
EvaluateResult cmd_evaluate(const RunConfig& c, const std::string& run_dir, std::ostream& log);
BenchmarkResult cmd_benchmark(const RunConfig& c, const std::string& run_dir, std::ostream& log);

/// Marginal and joint ISE of the posterior-mean density of `draws` against
/// a truth; shared by cmd_evaluate and the tests.
EvaluateResult evaluate_draws(const DrawSet& draws, const JointDensityModel& truth, const EvalSpec& spec,
                              std::uint64_t seed);

/// Dispatch on c.mode. Returns the run directory used.
std::string run_command(const RunConfig& c, std::ostream& log);

}  // namespace rotdecon
