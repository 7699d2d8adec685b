#include <doctest.h>

#include <rotdecon/commands.hpp>
#include <rotdecon/io.hpp>
#include <rotdecon/pipeline.hpp>
#include <rotdecon/simulate.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace rotdecon;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("rotdecon_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ReplicateDataset parse(const std::string& text) {
  std::istringstream in(text);
  return read_dataset_csv(in, "t.csv");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.what();
  } catch (const ValidationError& e) {
    return std::string("validation: ") + e.what();
  }
  return "";
}

SamplerConfig short_sampler() {
  SamplerConfig c;
  c.n_iter = 120;
  c.burn_in = 60;
  c.thin = 2;
  c.checkpoint_every = 50;
  c.diag_every = 20;
  return c;
}

InitConfig quick_init() {
  InitConfig c;
  c.num_atoms = 4;
  c.warm_start_sweeps = 20;
  return c;
}

}  // namespace

TEST_CASE("CSV: column order, grouping and replicate sorting") {
  const ReplicateDataset d = parse(
      "w_2,subject_id,w_1,replicate_id\n"
      "2.0,b,1.0,2\n"
      "20.0,a,10.0,1\n"
      "3.0,b,1.5,1\n"
      "21.0,a,11.0,3\n"
      "4.0,b,1.7,3\n"
      "22.0,a,12.0,2\n");
  CHECK(d.d == 2);
  CHECK(d.subject_ids == std::vector<std::string>{"b", "a"});
  CHECK(d.w[0] == (Matrix(2, 3) << 1.5, 1.0, 1.7, 3.0, 2.0, 4.0).finished());
  CHECK(d.w[1] == (Matrix(2, 3) << 10.0, 12.0, 11.0, 20.0, 22.0, 21.0).finished());
}

TEST_CASE("CSV: round trip is exact") {
  SimScenario sc;
  sc.n = 25;
  sc.seed = 4;
  const ReplicateDataset d = simulate(sc).data;
  std::ostringstream out;
  write_dataset_csv(out, d);
  const ReplicateDataset back = parse(out.str());
  CHECK(back.subject_ids == d.subject_ids);
  for (int i = 0; i < d.n(); ++i) CHECK(back.w[i] == d.w[i]);
}

TEST_CASE("CSV: errors name the line or the column") {
  const std::string head = "subject_id,replicate_id,w_1,w_2\n";
  CHECK(error_of("subject_id,replicate_id,w_1,w_3\n").find("missing column 'w_2'") != std::string::npos);
  CHECK(error_of("subject_id,w_1,w_2\n").find("replicate_id") != std::string::npos);
  CHECK(error_of("subject_id,replicate_id,w_1,w_1\n").find("w_1") != std::string::npos);
  CHECK(error_of("subject_id,replicate_id,w_1,w_2,extra\n").find("extra") != std::string::npos);
  CHECK(error_of(head + "a,1,1.0,2.0\na,2,1.0\n").find("t.csv:3") != std::string::npos);
  const std::string bad_num = error_of(head + "a,1,1.0,2.0\na,2,x1,2.0\n");
  CHECK(bad_num.find("t.csv:3") != std::string::npos);
  CHECK(bad_num.find("w_1") != std::string::npos);
  CHECK(error_of(head + "a,1,1,2\na,1,1,2\na,2,1,2\n").find("t.csv:3") != std::string::npos);
  CHECK(error_of(head + "a,1,1,2\na,2,1,2\n").rfind("validation", 0) == 0);  // m = 2
  CHECK(error_of("").size() > 0);
}

TEST_CASE("config JSON is strict") {
  CHECK_THROWS_AS(sampler_config_from_json(Json{{"n_iter", 10}, {"bogus", 1}}), ValidationError);
  CHECK_THROWS_AS(sampler_config_from_json(Json{{"n_iter", "ten"}}), ValidationError);
  CHECK_THROWS_AS(scenario_from_json(Json{{"d", 3}, {"case", "sideways"}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json(Json{{"seed", 1}, {"nonsense", true}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json(Json{{"seed", 1}, {"mode", "dance"}}), ValidationError);
  RunConfig no_seed = run_config_from_json(Json{{"mode", "simulate"}});
  CHECK_THROWS_AS(no_seed.validate(), ValidationError);
  RunConfig fit = run_config_from_json(Json{{"mode", "fit"}, {"seed", 3}, {"data", "/nonexistent/file.csv"}});
  CHECK_THROWS_AS(fit.validate(), ValidationError);

  SamplerConfig s = short_sampler();
  s.angle_grid_size = 21;
  const SamplerConfig s2 = sampler_config_from_json(to_json(s));
  CHECK(to_json(s2) == to_json(s));
  InitConfig ic = quick_init();
  CHECK(to_json(init_config_from_json(to_json(ic))) == to_json(ic));
  RunConfig rc = run_config_from_json(Json{{"mode", "evaluate"}, {"seed", 9}, {"truth", "t.json"}, {"draws", "d"}});
  CHECK(to_json(run_config_from_json(to_json(rc))) == to_json(rc));
}

TEST_CASE("truth sidecar round trip") {
  TempDir tmp("truth");
  SimScenario sc;
  sc.n = 10;
  sc.seed = 5;
  const SimulatedData sim = simulate(sc);
  write_truth(tmp / "truth.json", TruthSidecar{sc, sim.truth, sim.x});
  const TruthSidecar t = read_truth(tmp / "truth.json");
  CHECK(t.x == sim.x);
  CHECK(t.truth.mu == sim.truth.mu);
  CHECK(t.truth.weights == sim.truth.weights);
  CHECK(t.truth.angles.zeta == sim.truth.angles.zeta);
  CHECK(to_json(t.scenario) == to_json(sc));
}

TEST_CASE("checkpoint resume reproduces an uninterrupted chain exactly") {
  TempDir tmp("ckpt");
  SimScenario sc;
  sc.n = 30;
  sc.seed = 6;
  const ReplicateDataset raw = simulate(sc).data;
  const SamplerConfig cfg = short_sampler();
  const FitOutput full = fit_model(raw, cfg, quick_init(), 11);

  // Stop after 50 iterations, save, reload and continue.
  PreparedChain pc = prepare_chain(raw, quick_init(), 11);
  Sampler s(pc.data, cfg, pc.state);
  while (s.state().iteration < 50) s.iterate();
  save_checkpoint(tmp / "ck.json", s.state(), s.draws());
  Checkpoint cp = load_checkpoint(tmp / "ck.json");
  CHECK(cp.state.iteration == 50);
  const FitOutput resumed = resume_model(raw, cfg, quick_init(), std::move(cp.state), std::move(cp.draws));

  write_draws(tmp / "a", full.draws, full.rescaling);
  write_draws(tmp / "b", resumed.draws, resumed.rescaling);
  for (const auto& e : fs::directory_iterator(tmp.path / "a")) {
    const std::string name = e.path().filename().string();
    INFO(name);
    CHECK(slurp(tmp / ("a/" + name)) == slurp(tmp / ("b/" + name)));
  }
}

TEST_CASE("draws directory round trip and bit-exact evaluation") {
  TempDir tmp("draws");
  SimScenario sc;
  sc.n = 30;
  sc.seed = 7;
  const SimulatedData sim = simulate(sc);
  const FitOutput fit = fit_model(sim.data, short_sampler(), quick_init(), 12);
  write_draws(tmp / "draws", fit.draws, fit.rescaling);
  for (const char* f : {"draws_atoms.csv", "draws_weights.csv", "draws_angles.csv", "draws_beta_s.csv",
                        "draws_beta_kappa.csv", "draws_x.csv", "acceptance.csv", "log_posterior.csv", "draws_meta.json"})
    CHECK(fs::exists(tmp.path / "draws" / f));
  const DrawSet ds = read_draws(tmp / "draws");
  const std::vector<JointDensityModel> direct = draw_models(fit.draws);
  REQUIRE(ds.models.size() == direct.size());
  CHECK(ds.scale == fit.rescaling.factor);
  for (std::size_t t = 0; t < direct.size(); ++t) {
    CHECK(ds.models[t].mu == direct[t].mu);
    CHECK(ds.models[t].sigma2 == direct[t].sigma2);
    CHECK(ds.models[t].weights == direct[t].weights);
    CHECK(ds.models[t].angles.zeta == direct[t].angles.zeta);
    CHECK(ds.models[t].lower == direct[t].lower);
    CHECK(ds.models[t].upper == direct[t].upper);
  }
  EvalSpec spec;
  spec.mc_points = 500;
  const EvaluateResult from_files = evaluate_draws(ds, sim.truth, spec, 3);
  const EvaluateResult from_memory = evaluate_draws(DrawSet{direct, fit.rescaling.factor}, sim.truth, spec, 3);
  CHECK(from_files.joint_ise == from_memory.joint_ise);
  CHECK(from_files.marginal_ise == from_memory.marginal_ise);

  // The truth as its own estimate scores zero.
  const EvaluateResult self = evaluate_draws(DrawSet{{sim.truth}, Vector::Ones(3)}, sim.truth, spec, 3);
  CHECK(self.joint_ise == 0.0);
  CHECK(self.marginal_ise.isZero());
}

TEST_CASE("commands: simulate -> fit -> evaluate from configs") {
  TempDir tmp("cmd");
  std::ostringstream log;
  RunConfig sim;
  sim.mode = Mode::simulate;
  sim.seed = 8;
  sim.has_seed = true;
  sim.scenario.n = 30;
  sim.run_dir = tmp / "sim";
  const std::string sim_dir = run_command(sim, log);
  CHECK(fs::exists(fs::path(sim_dir) / "data.csv"));
  CHECK(log.str().find("n=30 m=3 d=3 case=well_specified") != std::string::npos);

  RunConfig fit;
  fit.mode = Mode::fit;
  fit.seed = 8;
  fit.has_seed = true;
  fit.data_path = sim_dir + "/data.csv";
  fit.sampler = short_sampler();
  fit.init = quick_init();
  fit.run_dir = tmp / "fit";
  const std::string fit_dir = run_command(fit, log);
  for (const char* f : {"config.json", "diagnostics.jsonl", "checkpoint.json", "draws/draws_x.csv"})
    CHECK(fs::exists(fs::path(fit_dir) / f));
  std::ifstream diag(fit_dir + "/diagnostics.jsonl");
  int lines = 0;
  for (std::string line; std::getline(diag, line); ++lines) CHECK(Json::parse(line).contains("acceptance"));
  CHECK(lines == 120 / 20);

  fit.run_dir = tmp / "fit2";
  run_command(fit, log);
  for (const auto& e : fs::directory_iterator(fs::path(fit_dir) / "draws")) {
    const std::string name = e.path().filename().string();
    CHECK(slurp(fit_dir + "/draws/" + name) == slurp(tmp / ("fit2/draws/" + name)));
  }

  RunConfig ev;
  ev.mode = Mode::evaluate;
  ev.seed = 8;
  ev.has_seed = true;
  ev.truth_path = sim_dir + "/truth.json";
  ev.draws_dir = fit_dir + "/draws";
  ev.eval.mc_points = 400;
  ev.run_dir = tmp / "eval";
  const std::string ev_dir = run_command(ev, log);
  const EvaluateResult direct = evaluate_draws(read_draws(ev.draws_dir), read_truth(ev.truth_path).truth, ev.eval, 8);
  std::ifstream metrics(ev_dir + "/metrics.csv");
  std::string header, line;
  std::getline(metrics, header);
  CHECK(header == "metric,dim,value");
  std::vector<double> values;
  std::vector<std::string> names;
  while (std::getline(metrics, line)) {
    names.push_back(line.substr(0, line.find(',')));
    values.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  }
  REQUIRE(values.size() == 4u);
  CHECK(names == std::vector<std::string>{"marginal_ise", "marginal_ise", "marginal_ise", "joint_ise"});
  for (int l = 0; l < 3; ++l) CHECK(values[static_cast<std::size_t>(l)] == direct.marginal_ise(l));
  CHECK(values[3] == direct.joint_ise);
  CHECK(fs::exists(fs::path(ev_dir) / "marginal_density.csv"));
}

TEST_CASE("timestamped run directories do not collide") {
  TempDir tmp("runs");
  RunConfig c;
  c.seed = 4;
  c.output_dir = tmp.path.string();
  const std::string a = make_run_dir(c), b = make_run_dir(c);
  CHECK(a != b);
  CHECK(fs::path(a).filename().string().find("_seed4") != std::string::npos);
}
