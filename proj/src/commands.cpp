#include "rotdecon/commands.hpp"

#include "rotdecon/simulate.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace fs = std::filesystem;

namespace rotdecon {

namespace {

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string("config: '") + what + "' is required for this mode");
  if (!fs::exists(path)) throw ValidationError(std::string("config: ") + what + " '" + path + "' does not exist");
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

}  // namespace

Mode mode_from_string(const std::string& s) {
  if (s == "simulate") return Mode::simulate;
  if (s == "fit") return Mode::fit;
  if (s == "evaluate") return Mode::evaluate;
  if (s == "benchmark") return Mode::benchmark;
  throw ValidationError("config: unknown mode '" + s + "'");
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::simulate: return "simulate";
    case Mode::fit: return "fit";
    case Mode::evaluate: return "evaluate";
    case Mode::benchmark: return "benchmark";
  }
  return "?";
}

void RunConfig::validate() const {
  if (!has_seed) throw ValidationError("config: 'seed' is required");
  sampler.validate();
  scenario.validate();
  switch (mode) {
    case Mode::simulate: break;
    case Mode::fit:
      require_file(data_path, "data");
      if (!resume_path.empty()) require_file(resume_path, "resume");
      break;
    case Mode::evaluate:
      require_file(truth_path, "truth");
      require_file(draws_dir, "draws");
      break;
    case Mode::benchmark:
      if (bench.dims.size() < 3) throw ValidationError("config: benchmark needs at least three dimensions");
      for (int d : bench.dims)
        if (d < 2) throw ValidationError("config: benchmark dimensions must be >= 2");
      if (bench.n < 2 || bench.m < 3 || bench.iterations < 2)
        throw ValidationError("config: benchmark needs n >= 2, m >= 3, iterations >= 2");
      break;
  }
  if (eval.grid_size < 2 || eval.mc_points < 1) throw ValidationError("config: evaluation grid and point counts must be positive");
}

RunConfig run_config_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "mode") {
        c.mode = mode_from_string(v.get<std::string>());
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
        c.has_seed = true;
      } else if (key == "output_dir") {
        c.output_dir = v.get<std::string>();
      } else if (key == "run_dir") {
        c.run_dir = v.get<std::string>();
      } else if (key == "data") {
        c.data_path = v.get<std::string>();
      } else if (key == "truth") {
        c.truth_path = v.get<std::string>();
      } else if (key == "draws") {
        c.draws_dir = v.get<std::string>();
      } else if (key == "resume") {
        c.resume_path = v.get<std::string>();
      } else if (key == "simulate") {
        c.scenario = scenario_from_json(v);
      } else if (key == "sampler") {
        c.sampler = sampler_config_from_json(v);
      } else if (key == "init") {
        c.init = init_config_from_json(v);
      } else if (key == "evaluate") {
        for (const auto& [k, e] : v.items()) {
          if (k == "grid_size") c.eval.grid_size = e.get<int>();
          else if (k == "mc_points") c.eval.mc_points = e.get<int>();
          else throw ValidationError("evaluate: unknown key '" + k + "'");
        }
      } else if (key == "benchmark") {
        for (const auto& [k, e] : v.items()) {
          if (k == "dims") c.bench.dims = e.get<std::vector<int>>();
          else if (k == "n") c.bench.n = e.get<int>();
          else if (k == "m") c.bench.m = e.get<int>();
          else if (k == "iterations") c.bench.iterations = e.get<int>();
          else throw ValidationError("benchmark: unknown key '" + k + "'");
        }
      } else {
        throw ValidationError("config: unknown key '" + key + "'");
      }
    } catch (const Json::exception&) {
      throw ValidationError("config: key '" + key + "' has the wrong type");
    }
  }
  c.scenario.seed = c.seed;
  return c;
}

Json to_json(const RunConfig& c) {
  Json j{{"mode", to_string(c.mode)},
         {"seed", c.seed},
         {"output_dir", c.output_dir},
         {"simulate", to_json(c.scenario)},
         {"sampler", to_json(c.sampler)},
         {"init", to_json(c.init)},
         {"evaluate", {{"grid_size", c.eval.grid_size}, {"mc_points", c.eval.mc_points}}},
         {"benchmark", {{"dims", c.bench.dims}, {"n", c.bench.n}, {"m", c.bench.m}, {"iterations", c.bench.iterations}}}};
  if (!c.run_dir.empty()) j["run_dir"] = c.run_dir;
  if (!c.data_path.empty()) j["data"] = c.data_path;
  if (!c.truth_path.empty()) j["truth"] = c.truth_path;
  if (!c.draws_dir.empty()) j["draws"] = c.draws_dir;
  if (!c.resume_path.empty()) j["resume"] = c.resume_path;
  return j;
}

RunConfig load_run_config(const std::string& path) { return run_config_from_json(read_json_file(path)); }

std::string make_run_dir(const RunConfig& c) {
  std::string dir = c.run_dir;
  if (dir.empty()) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    const std::string stem = (fs::path(c.output_dir) / (std::string(stamp) + "_seed" + std::to_string(c.seed))).string();
    dir = stem;
    for (int k = 2; fs::exists(dir); ++k) dir = stem + "_" + std::to_string(k);
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create run directory '" + dir + "'");
  return dir;
}

SimulateResult cmd_simulate(const RunConfig& c, const std::string& run_dir, std::ostream& log) {
  SimScenario sc = c.scenario;
  sc.seed = c.seed;
  sc.validate();
  const SimulatedData sim = simulate(sc);
  SimulateResult r{join(run_dir, "data.csv"), join(run_dir, "truth.json")};
  write_dataset_csv(r.data_path, sim.data);
  write_truth(r.truth_path, TruthSidecar{sc, sim.truth, sim.x});
  log << "simulated n=" << sim.data.n() << " m=" << sc.m << " d=" << sc.d << " case="
      << (sc.error_case == ErrorCase::well_specified ? "well_specified" : "mis_specified") << " -> " << r.data_path << '\n';
  return r;
}

FitResult cmd_fit(const RunConfig& c, const std::string& run_dir, std::ostream& log) {
  const ReplicateDataset raw = read_dataset_csv(c.data_path);
  write_json_file(join(run_dir, "config.json"), to_json(c));
  std::ofstream diag(join(run_dir, "diagnostics.jsonl"), c.resume_path.empty() ? std::ios::trunc : std::ios::app);
  if (!diag) throw std::runtime_error("cannot open diagnostics log in '" + run_dir + "'");
  const std::string ckpt = join(run_dir, "checkpoint.json");
  FitHooks hooks;
  hooks.on_diagnostics = [&](const DiagnosticsRecord& rec) { diag << diagnostics_line(rec) << '\n' << std::flush; };
  hooks.on_checkpoint = [&](const Sampler& s) { save_checkpoint(ckpt, s.state(), s.draws()); };

  FitOutput out;
  if (c.resume_path.empty()) {
    out = fit_model(raw, c.sampler, c.init, c.seed, hooks);
  } else {
    Checkpoint cp = load_checkpoint(c.resume_path);
    log << "resuming at iteration " << cp.state.iteration << '\n';
    out = resume_model(raw, c.sampler, c.init, std::move(cp.state), std::move(cp.draws), hooks);
  }
  FitResult r;
  r.draws_dir = join(run_dir, "draws");
  write_draws(r.draws_dir, out.draws, out.rescaling);
  r.iterations = out.final_state.iteration;
  r.retained = out.draws.size();
  r.seconds = out.seconds;
  const int to = c.sampler.burn_in, from = std::max(0, to - 500);
  for (const auto& [name, tr] : out.draws.traces) r.burn_in_acceptance[name] = tr.rate(from, to);
  log << "fit " << raw.n() << " subjects, d=" << raw.d << ": " << r.iterations << " iterations, " << r.retained
      << " retained draws, " << out.seconds << " s\n";
  if (!out.draws.log_post.empty()) log << "final log posterior " << out.draws.log_post.back() << '\n';
  for (const auto& [name, rate] : r.burn_in_acceptance) log << "  acceptance " << name << " " << rate << '\n';
  log << "draws -> " << r.draws_dir << '\n';
  return r;
}

EvaluateResult evaluate_draws(const DrawSet& draws, const JointDensityModel& truth, const EvalSpec& spec,
                              std::uint64_t seed) {
  if (draws.models.empty()) throw ValidationError("evaluate: no retained draws");
  if (draws.models.front().dim() != truth.dim()) throw ValidationError("evaluate: draws and truth dimensions differ");
  const int d = truth.dim();
  EvaluateResult r;
  r.marginal_ise.resize(d);
  const Vector grid = Vector::LinSpaced(spec.grid_size, truth.lower, truth.upper);
  for (int l = 0; l < d; ++l) {
    const TruncNormMixture mix = truth.marginal(l);
    Vector f(grid.size());
    for (Eigen::Index g = 0; g < grid.size(); ++g) f(g) = mix.pdf(grid(g));
    r.marginal_ise(l) = ise_marginal(f, estimate_marginal(draws.models, l, grid, draws.scale), grid);
  }
  Rng rng(seed);
  const Matrix pts = generate_latent(truth, spec.mc_points, rng);
  const Vector f = model_density(truth, pts);
  r.joint_ise = ise_joint(f, estimate_density(draws.models, pts, draws.scale).values, f);
  return r;
}

EvaluateResult cmd_evaluate(const RunConfig& c, const std::string& run_dir, std::ostream& log) {
  const TruthSidecar truth = read_truth(c.truth_path);
  const DrawSet draws = read_draws(c.draws_dir);
  const EvaluateResult r = evaluate_draws(draws, truth.truth, c.eval, c.seed);

  std::ofstream metrics(join(run_dir, "metrics.csv"));
  metrics << "metric,dim,value\n";
  char buf[64];
  for (Eigen::Index l = 0; l < r.marginal_ise.size(); ++l) {
    std::snprintf(buf, sizeof buf, "%.17g", r.marginal_ise(l));
    metrics << "marginal_ise," << l + 1 << ',' << buf << '\n';
  }
  std::snprintf(buf, sizeof buf, "%.17g", r.joint_ise);
  metrics << "joint_ise,," << buf << '\n';

  std::ofstream dens(join(run_dir, "marginal_density.csv"));
  dens << "dim,x,true,estimate\n";
  const Vector grid = Vector::LinSpaced(c.eval.grid_size, truth.truth.lower, truth.truth.upper);
  for (int l = 0; l < truth.truth.dim(); ++l) {
    const Vector est = estimate_marginal(draws.models, l, grid, draws.scale);
    const TruncNormMixture mix = truth.truth.marginal(l);
    for (Eigen::Index g = 0; g < grid.size(); ++g) dens << l + 1 << ',' << grid(g) << ',' << mix.pdf(grid(g)) << ',' << est(g) << '\n';
  }
  if (!metrics || !dens) throw std::runtime_error("write failed in '" + run_dir + "'");
  log << "joint ISE " << r.joint_ise << "; marginal ISE";
  for (Eigen::Index l = 0; l < r.marginal_ise.size(); ++l) log << ' ' << r.marginal_ise(l);
  log << "\nmetrics -> " << join(run_dir, "metrics.csv") << '\n';
  return r;
}

BenchmarkResult cmd_benchmark(const RunConfig& c, const std::string& run_dir, std::ostream& log) {
  BenchmarkResult r;
  SamplerConfig sc = c.sampler;
  sc.n_iter = c.bench.iterations;
  sc.burn_in = c.bench.iterations / 2;
  sc.thin = 1;
  sc.validate();
  std::ofstream csv(join(run_dir, "benchmark.csv"));
  csv << "d,seconds\n";
  for (int d : c.bench.dims) {
    SimScenario scen = c.scenario;
    scen.d = d;
    scen.n = c.bench.n;
    scen.m = c.bench.m;
    scen.seed = c.seed;
    const SimulatedData sim = simulate(scen);
    const FitOutput out = fit_model(sim.data, sc, c.init, c.seed);
    r.dims.push_back(d);
    r.seconds.push_back(out.seconds);
    csv << d << ',' << out.seconds << '\n';
    log << "d=" << d << ": " << out.seconds << " s\n";
  }
  r.fit = runtime_scaling(r.dims, r.seconds);
  log << "log-log slope " << r.fit.slope << " (se " << r.fit.slope_se << ")\n";
  return r;
}

std::string run_command(const RunConfig& c, std::ostream& log) {
  c.validate();
  const std::string dir = make_run_dir(c);
  switch (c.mode) {
    case Mode::simulate: cmd_simulate(c, dir, log); break;
    case Mode::fit: cmd_fit(c, dir, log); break;
    case Mode::evaluate: cmd_evaluate(c, dir, log); break;
    case Mode::benchmark: cmd_benchmark(c, dir, log); break;
  }
  return dir;
}

}  // namespace rotdecon
