#include "rotdecon/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace rotdecon {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_long(const std::string& s, long& v) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "' for reading");
  return in;
}

Json vec_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector json_vec(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <class M>
Json mat_json(const M& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class M>
M json_mat(const Json& j) {
  using S = typename M::Scalar;
  const auto rows = j.get<std::vector<std::vector<S>>>();
  const auto nc = rows.empty() ? 0 : rows.front().size();
  M m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(nc));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != nc) throw ParseError("ragged matrix in JSON");
    for (std::size_t c = 0; c < nc; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

/// Reads known keys of a JSON object into typed fields and rejects the rest.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) throw ValidationError(what_ + ": expected a JSON object");
  }
  template <class T>
  StrictObject& get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return *this;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ValidationError(what_ + ": key '" + key + "' has the wrong type");
    }
    return *this;
  }
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ValidationError(what_ + ": unknown key '" + k + "'");
  }

 private:
  const Json& j_;
  std::string what_;
  std::set<std::string> seen_;
};

Json angles_json(const CorrelationAngles& a) { return Json{{"d", a.d}, {"zeta", a.zeta}}; }

CorrelationAngles json_angles(const Json& j) {
  CorrelationAngles a;
  a.d = j.at("d").get<int>();
  a.zeta = j.at("zeta").get<std::vector<std::vector<double>>>();
  if (!a.in_support()) throw ValidationError("angles: values outside their support");
  return a;
}

Json params_json(const ModelParams& p) {
  const auto& h = p.hyper;
  return Json{
      {"basis", {{"lower", p.hetero.basis.lower()}, {"upper", p.hetero.basis.upper()},
                 {"intervals", p.hetero.basis.num_intervals()}}},
      {"beta_kappa", mat_json(p.hetero.beta_kappa)},
      {"beta_s", vec_json(p.hetero.beta_s)},
      {"mu", vec_json(p.mu)},
      {"sigma2", vec_json(p.sigma2)},
      {"weights", mat_json(p.weights)},
      {"angles", angles_json(p.angles)},
      {"lower", p.lower},
      {"upper", p.upper},
      {"hyper",
       {{"mu0", h.mu0}, {"sigma0_sq", h.sigma0_sq}, {"a0", h.a0}, {"b0", h.b0}, {"alpha", h.alpha},
        {"mu_s", vec_json(h.mu_s)}, {"sigma_s_sq", h.sigma_s_sq}, {"mu_kappa", mat_json(h.mu_kappa)},
        {"sigma_kappa_sq", vec_json(h.sigma_kappa_sq)}}},
  };
}

ModelParams json_params(const Json& j) {
  ModelParams p;
  const Json& b = j.at("basis");
  p.hetero.basis = CubicBasis(b.at("lower").get<double>(), b.at("upper").get<double>(), b.at("intervals").get<int>());
  p.hetero.beta_kappa = json_mat<Matrix>(j.at("beta_kappa"));
  p.hetero.beta_s = json_vec(j.at("beta_s"));
  p.mu = json_vec(j.at("mu"));
  p.sigma2 = json_vec(j.at("sigma2"));
  p.weights = json_mat<Matrix>(j.at("weights"));
  p.angles = json_angles(j.at("angles"));
  p.lower = j.at("lower").get<double>();
  p.upper = j.at("upper").get<double>();
  const Json& h = j.at("hyper");
  p.hyper.mu0 = h.at("mu0").get<double>();
  p.hyper.sigma0_sq = h.at("sigma0_sq").get<double>();
  p.hyper.a0 = h.at("a0").get<double>();
  p.hyper.b0 = h.at("b0").get<double>();
  p.hyper.alpha = h.at("alpha").get<double>();
  p.hyper.mu_s = json_vec(h.at("mu_s"));
  p.hyper.sigma_s_sq = h.at("sigma_s_sq").get<double>();
  p.hyper.mu_kappa = json_mat<Matrix>(h.at("mu_kappa"));
  p.hyper.sigma_kappa_sq = json_vec(h.at("sigma_kappa_sq"));
  return p;
}

Json latent_json(const LatentState& s) { return Json{{"x", mat_json(s.x)}, {"labels", mat_json(s.labels)}}; }

LatentState json_latent(const Json& j) {
  LatentState s;
  s.x = json_mat<Matrix>(j.at("x"));
  s.labels = json_mat<Eigen::MatrixXi>(j.at("labels"));
  return s;
}

Json tuning_json(const Tuning& t) {
  Json means = Json::array(), m2 = Json::array();
  for (const auto& v : t.kappa_mean) means.push_back(vec_json(v));
  for (const auto& m : t.kappa_m2) m2.push_back(mat_json(m));
  return Json{{"eps_atoms", t.eps_atoms},
              {"eps_beta_s", t.eps_beta_s},
              {"x_scale", t.x_scale},
              {"kappa_scale", vec_json(t.kappa_scale)},
              {"x_base_sd", vec_json(t.x_base_sd)},
              {"atom_sigma_ref", t.atom_sigma_ref},
              {"beta_s_precond", vec_json(t.beta_s_precond)},
              {"kappa_init_sd", mat_json(t.kappa_init_sd)},
              {"kappa_count", t.kappa_count},
              {"kappa_mean", means},
              {"kappa_m2", m2},
              {"frozen", t.frozen}};
}

Tuning json_tuning(const Json& j) {
  Tuning t;
  t.eps_atoms = j.at("eps_atoms").get<double>();
  t.eps_beta_s = j.at("eps_beta_s").get<double>();
  t.x_scale = j.at("x_scale").get<double>();
  t.kappa_scale = json_vec(j.at("kappa_scale"));
  t.x_base_sd = json_vec(j.at("x_base_sd"));
  t.atom_sigma_ref = j.at("atom_sigma_ref").get<double>();
  t.beta_s_precond = json_vec(j.at("beta_s_precond"));
  t.kappa_init_sd = json_mat<Matrix>(j.at("kappa_init_sd"));
  t.kappa_count = j.at("kappa_count").get<int>();
  for (const auto& v : j.at("kappa_mean")) t.kappa_mean.push_back(json_vec(v));
  for (const auto& m : j.at("kappa_m2")) t.kappa_m2.push_back(json_mat<Matrix>(m));
  t.frozen = j.at("frozen").get<bool>();
  return t;
}

/// Minimal reader for the CSV files this module writes.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int col(const std::string& name, const std::string& source) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(source + ": missing column '" + name + "'");
    return static_cast<int>(it - header.begin());
  }
};

Table read_table(const std::string& path) {
  auto in = open_in(path);
  Table t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      if (!parse_double(fields[c], row[c]))
        throw ParseError(path + ":" + std::to_string(lineno) + ": cannot parse '" + fields[c] + "' as a number");
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError(path + ": empty file");
  return t;
}

}  // namespace

ReplicateDataset read_dataset_csv(std::istream& in, const std::string& source) {
  std::string line;
  int lineno = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) header = split_csv(line);
  }
  if (header.empty()) throw ParseError(source + ": empty file, expected a header line");
  std::map<std::string, int> cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!cols.emplace(header[c], static_cast<int>(c)).second)
      throw ParseError(source + ":" + std::to_string(lineno) + ": duplicate column '" + header[c] + "'");
  }
  for (const char* name : {"subject_id", "replicate_id"})
    if (!cols.count(name)) throw ParseError(source + ": missing column '" + std::string(name) + "'");
  int d = 0;
  for (const auto& [name, c] : cols) {
    if (name == "subject_id" || name == "replicate_id") continue;
    if (name.rfind("w_", 0) != 0) throw ParseError(source + ":" + std::to_string(lineno) + ": unexpected column '" + name + "'");
    long idx = 0;
    if (!parse_long(name.substr(2), idx) || idx < 1)
      throw ParseError(source + ":" + std::to_string(lineno) + ": bad coordinate column '" + name + "'");
    d = std::max(d, static_cast<int>(idx));
  }
  if (d == 0) throw ParseError(source + ": missing column 'w_1'");
  std::vector<int> wcol(static_cast<std::size_t>(d));
  for (int l = 0; l < d; ++l) {
    const std::string name = "w_" + std::to_string(l + 1);
    const auto it = cols.find(name);
    if (it == cols.end()) throw ParseError(source + ": missing column '" + name + "'");
    wcol[static_cast<std::size_t>(l)] = it->second;
  }
  const int c_subj = cols["subject_id"], c_rep = cols["replicate_id"];

  std::vector<std::string> order;
  std::map<std::string, std::map<long, Vector>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (f.size() != header.size())
      throw ParseError(where + "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    const std::string& subj = f[static_cast<std::size_t>(c_subj)];
    if (subj.empty()) throw ParseError(where + "empty subject_id");
    long rep = 0;
    if (!parse_long(f[static_cast<std::size_t>(c_rep)], rep))
      throw ParseError(where + "replicate_id '" + f[static_cast<std::size_t>(c_rep)] + "' is not an integer");
    Vector w(d);
    for (int l = 0; l < d; ++l) {
      const std::string& s = f[static_cast<std::size_t>(wcol[static_cast<std::size_t>(l)])];
      if (!parse_double(s, w(l)) || !std::isfinite(w(l)))
        throw ParseError(where + "column 'w_" + std::to_string(l + 1) + "': cannot parse '" + s + "' as a finite number");
    }
    auto [it, fresh] = rows.try_emplace(subj);
    if (fresh) order.push_back(subj);
    if (!it->second.emplace(rep, std::move(w)).second)
      throw ParseError(where + "duplicate replicate " + std::to_string(rep) + " for subject '" + subj + "'");
  }
  if (order.empty()) throw ParseError(source + ": no data rows");
  ReplicateDataset data;
  data.d = d;
  for (const auto& subj : order) {
    const auto& reps = rows[subj];
    Matrix w(d, static_cast<Eigen::Index>(reps.size()));
    Eigen::Index j = 0;
    for (const auto& [rep, v] : reps) w.col(j++) = v;
    data.w.push_back(std::move(w));
    data.subject_ids.push_back(subj);
  }
  data.validate();
  return data;
}

ReplicateDataset read_dataset_csv(const std::string& path) {
  auto in = open_in(path);
  return read_dataset_csv(in, path);
}

void write_dataset_csv(std::ostream& out, const ReplicateDataset& data) {
  out << "subject_id,replicate_id";
  for (int l = 0; l < data.d; ++l) out << ",w_" << l + 1;
  out << '\n';
  for (int i = 0; i < data.n(); ++i) {
    const std::string id =
        i < static_cast<int>(data.subject_ids.size()) ? data.subject_ids[static_cast<std::size_t>(i)] : std::to_string(i + 1);
    const Matrix& w = data.w[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      out << id << ',' << j + 1;
      for (int l = 0; l < data.d; ++l) out << ',' << fmt(w(l, j));
      out << '\n';
    }
  }
}

void write_dataset_csv(const std::string& path, const ReplicateDataset& data) {
  auto out = open_out(path);
  write_dataset_csv(out, data);
  if (!out) throw std::runtime_error("write failed: '" + path + "'");
}

Json to_json(const JointDensityModel& m) {
  return Json{{"mu", vec_json(m.mu)},       {"sigma2", vec_json(m.sigma2)}, {"weights", mat_json(m.weights)},
              {"lower", m.lower},           {"upper", m.upper},             {"angles", angles_json(m.angles)}};
}

JointDensityModel density_from_json(const Json& j) {
  JointDensityModel m;
  try {
    m.mu = json_vec(j.at("mu"));
    m.sigma2 = json_vec(j.at("sigma2"));
    m.weights = json_mat<Matrix>(j.at("weights"));
    m.lower = j.at("lower").get<double>();
    m.upper = j.at("upper").get<double>();
    m.angles = json_angles(j.at("angles"));
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("density: ") + e.what());
  }
  try {
    m.validate();
  } catch (const DomainError& e) {
    throw ValidationError(e.what());
  }
  return m;
}

Json to_json(const SimScenario& sc) {
  return Json{{"n", sc.n},
              {"m", sc.m},
              {"d", sc.d},
              {"error_case", sc.error_case == ErrorCase::well_specified ? "well_specified" : "mis_specified"},
              {"kappa_scale", sc.kappa_scale},
              {"s_scale", sc.s_scale},
              {"misspec_scale", sc.misspec_scale},
              {"lognormal_positive_drift", sc.lognormal_positive_drift}};
}

SimScenario scenario_from_json(const Json& j) {
  SimScenario sc;
  std::string ec = "well_specified";
  StrictObject(j, "simulate")
      .get("n", sc.n)
      .get("m", sc.m)
      .get("d", sc.d)
      .get("error_case", ec)
      .get("kappa_scale", sc.kappa_scale)
      .get("s_scale", sc.s_scale)
      .get("misspec_scale", sc.misspec_scale)
      .get("lognormal_positive_drift", sc.lognormal_positive_drift)
      .finish();
  if (ec == "well_specified")
    sc.error_case = ErrorCase::well_specified;
  else if (ec == "mis_specified")
    sc.error_case = ErrorCase::mis_specified;
  else
    throw ValidationError("simulate: error_case must be 'well_specified' or 'mis_specified'");
  return sc;
}

Json to_json(const SamplerConfig& c) {
  return Json{{"n_iter", c.n_iter},
              {"burn_in", c.burn_in},
              {"thin", c.thin},
              {"leapfrog_steps", c.leapfrog_steps},
              {"eps_atoms", c.eps_atoms},
              {"eps_beta_s", c.eps_beta_s},
              {"x_scale", c.x_scale},
              {"kappa_scale", c.kappa_scale},
              {"angle_grid_size", c.angle_grid_size},
              {"x_steps", c.x_steps},
              {"kappa_steps", c.kappa_steps},
              {"hmc_target", c.hmc_target},
              {"mh_target", c.mh_target},
              {"adapt_batch", c.adapt_batch},
              {"kappa_cov_start", c.kappa_cov_start},
              {"log_post_every", c.log_post_every},
              {"diag_every", c.diag_every},
              {"checkpoint_every", c.checkpoint_every},
              {"likelihood_enabled", c.likelihood_enabled},
              {"update_x", c.update_x},
              {"update_hetero", c.update_hetero}};
}

SamplerConfig sampler_config_from_json(const Json& j) {
  SamplerConfig c;
  StrictObject(j, "sampler")
      .get("n_iter", c.n_iter)
      .get("burn_in", c.burn_in)
      .get("thin", c.thin)
      .get("leapfrog_steps", c.leapfrog_steps)
      .get("eps_atoms", c.eps_atoms)
      .get("eps_beta_s", c.eps_beta_s)
      .get("x_scale", c.x_scale)
      .get("kappa_scale", c.kappa_scale)
      .get("angle_grid_size", c.angle_grid_size)
      .get("x_steps", c.x_steps)
      .get("kappa_steps", c.kappa_steps)
      .get("hmc_target", c.hmc_target)
      .get("mh_target", c.mh_target)
      .get("adapt_batch", c.adapt_batch)
      .get("kappa_cov_start", c.kappa_cov_start)
      .get("log_post_every", c.log_post_every)
      .get("diag_every", c.diag_every)
      .get("checkpoint_every", c.checkpoint_every)
      .get("likelihood_enabled", c.likelihood_enabled)
      .get("update_x", c.update_x)
      .get("update_hetero", c.update_hetero)
      .finish();
  c.validate();
  return c;
}

Json to_json(const InitConfig& c) {
  return Json{{"rescale_target", c.rescale_target},
              {"lower", c.lower},
              {"upper", c.upper},
              {"num_intervals", c.num_intervals},
              {"num_atoms", c.num_atoms},
              {"warm_start_sweeps", c.warm_start_sweeps},
              {"kmeans_restarts", c.kmeans_restarts},
              {"spline_penalty", c.spline_penalty}};
}

InitConfig init_config_from_json(const Json& j) {
  InitConfig c;
  StrictObject(j, "init")
      .get("rescale_target", c.rescale_target)
      .get("lower", c.lower)
      .get("upper", c.upper)
      .get("num_intervals", c.num_intervals)
      .get("num_atoms", c.num_atoms)
      .get("warm_start_sweeps", c.warm_start_sweeps)
      .get("kmeans_restarts", c.kmeans_restarts)
      .get("spline_penalty", c.spline_penalty)
      .finish();
  if (!(c.rescale_target > 0.0)) throw ValidationError("init: rescale_target must be positive");
  if (!(c.upper > c.lower)) throw ValidationError("init: need lower < upper");
  if (c.num_intervals < 1 || c.num_atoms < 1 || c.warm_start_sweeps < 0 || c.kmeans_restarts < 1 || c.spline_penalty < 0.0)
    throw ValidationError("init: counts must be positive and the penalty non-negative");
  return c;
}

void write_truth(const std::string& path, const TruthSidecar& t) {
  Json j{{"scenario", to_json(t.scenario)}, {"seed", t.scenario.seed}, {"truth", to_json(t.truth)}, {"x", mat_json(t.x)}};
  write_json_file(path, j);
}

TruthSidecar read_truth(const std::string& path) {
  const Json j = read_json_file(path);
  TruthSidecar t;
  try {
    t.scenario = scenario_from_json(j.at("scenario"));
    t.scenario.seed = j.at("seed").get<std::uint64_t>();
    t.truth = density_from_json(j.at("truth"));
    t.x = json_mat<Matrix>(j.at("x"));
  } catch (const Json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return t;
}

Json to_json(const ChainState& s) {
  std::ostringstream rng;
  rng << s.rng;
  return Json{{"params", params_json(s.params)},
              {"latent", latent_json(s.latent)},
              {"tuning", tuning_json(s.tuning)},
              {"iteration", s.iteration},
              {"rng", rng.str()}};
}

ChainState chain_state_from_json(const Json& j) {
  ChainState s;
  s.params = json_params(j.at("params"));
  s.latent = json_latent(j.at("latent"));
  s.tuning = json_tuning(j.at("tuning"));
  s.iteration = j.at("iteration").get<int>();
  std::istringstream rng(j.at("rng").get<std::string>());
  rng >> s.rng;
  if (!rng) throw ParseError("checkpoint: bad generator state");
  return s;
}

Json to_json(const PosteriorDraws& d) {
  Json draws = Json::array();
  for (const auto& dr : d.draws)
    draws.push_back(Json{{"iteration", dr.iteration}, {"params", params_json(dr.params)}, {"latent", latent_json(dr.latent)}});
  Json traces = Json::object();
  for (const auto& [name, tr] : d.traces) traces[name] = Json{{"accepted", tr.accepted}, {"proposed", tr.proposed}};
  return Json{{"draws", draws},
              {"traces", traces},
              {"log_post_iter", d.log_post_iter},
              {"log_post", d.log_post},
              {"final_tuning", d.final_tuning.kappa_scale.size() ? tuning_json(d.final_tuning) : Json()}};
}

PosteriorDraws posterior_draws_from_json(const Json& j) {
  PosteriorDraws d;
  for (const auto& dj : j.at("draws"))
    d.draws.push_back(Draw{dj.at("iteration").get<int>(), json_params(dj.at("params")), json_latent(dj.at("latent"))});
  for (const auto& [name, tj] : j.at("traces").items()) {
    BlockTrace tr;
    tr.accepted = tj.at("accepted").get<std::vector<int>>();
    tr.proposed = tj.at("proposed").get<std::vector<int>>();
    d.traces.emplace(name, std::move(tr));
  }
  d.log_post_iter = j.at("log_post_iter").get<std::vector<int>>();
  d.log_post = j.at("log_post").get<std::vector<double>>();
  if (!j.at("final_tuning").is_null()) d.final_tuning = json_tuning(j.at("final_tuning"));
  return d;
}

void save_checkpoint(const std::string& path, const ChainState& state, const PosteriorDraws& draws) {
  const Json j{{"state", to_json(state)}, {"draws", to_json(draws)}};
  const std::string tmp = path + ".tmp";
  write_json_file(tmp, j);
  fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  const Json j = read_json_file(path);
  try {
    return Checkpoint{chain_state_from_json(j.at("state")), posterior_draws_from_json(j.at("draws"))};
  } catch (const Json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_draws(const std::string& dir, const PosteriorDraws& draws, const Rescaling& rescaling) {
  fs::create_directories(dir);
  const fs::path base(dir);
  auto atoms = open_out((base / "draws_atoms.csv").string());
  auto weights = open_out((base / "draws_weights.csv").string());
  auto angles = open_out((base / "draws_angles.csv").string());
  auto beta_s = open_out((base / "draws_beta_s.csv").string());
  auto beta_kappa = open_out((base / "draws_beta_kappa.csv").string());
  auto xs = open_out((base / "draws_x.csv").string());
  atoms << "iteration,atom,mu,sigma2\n";
  angles << "iteration,row,col,zeta\n";
  int d = 0, k_atoms = 0;
  if (!draws.draws.empty()) {
    const ModelParams& p0 = draws.draws.front().params;
    d = p0.dim();
    k_atoms = p0.num_atoms();
    weights << "iteration,dim";
    for (int k = 0; k < k_atoms; ++k) weights << ",w_" << k + 1;
    weights << '\n';
    beta_s << "iteration";
    for (Eigen::Index k = 0; k < p0.hetero.beta_s.size(); ++k) beta_s << ",b_" << k + 1;
    beta_s << '\n';
    beta_kappa << "iteration,dim";
    for (Eigen::Index k = 0; k < p0.hetero.beta_kappa.cols(); ++k) beta_kappa << ",b_" << k + 1;
    beta_kappa << '\n';
    xs << "iteration,subject";
    for (int l = 0; l < d; ++l) xs << ",x_" << l + 1;
    xs << '\n';
  }
  std::vector<int> iters;
  for (const auto& dr : draws.draws) {
    const ModelParams& p = dr.params;
    const int it = dr.iteration;
    iters.push_back(it);
    for (int k = 0; k < p.num_atoms(); ++k) atoms << it << ',' << k << ',' << fmt(p.mu(k)) << ',' << fmt(p.sigma2(k)) << '\n';
    for (int l = 0; l < p.dim(); ++l) {
      weights << it << ',' << l;
      for (int k = 0; k < p.num_atoms(); ++k) weights << ',' << fmt(p.weights(l, k));
      weights << '\n';
      beta_kappa << it << ',' << l;
      for (Eigen::Index k = 0; k < p.hetero.beta_kappa.cols(); ++k) beta_kappa << ',' << fmt(p.hetero.beta_kappa(l, k));
      beta_kappa << '\n';
    }
    for (int m = 1; m < p.angles.d; ++m)
      for (int s = 0; s < m; ++s)
        angles << it << ',' << m << ',' << s << ',' << fmt(p.angles.zeta[static_cast<std::size_t>(m)][static_cast<std::size_t>(s)]) << '\n';
    beta_s << it;
    for (Eigen::Index k = 0; k < p.hetero.beta_s.size(); ++k) beta_s << ',' << fmt(p.hetero.beta_s(k));
    beta_s << '\n';
    for (Eigen::Index i = 0; i < dr.latent.x.cols(); ++i) {
      xs << it << ',' << i;
      for (Eigen::Index l = 0; l < dr.latent.x.rows(); ++l) xs << ',' << fmt(dr.latent.x(l, i));
      xs << '\n';
    }
  }

  auto acc = open_out((base / "acceptance.csv").string());
  acc << "iteration,block,accepted,proposed\n";
  for (const auto& [name, tr] : draws.traces)
    for (std::size_t t = 0; t < tr.accepted.size(); ++t)
      acc << t + 1 << ',' << name << ',' << tr.accepted[t] << ',' << tr.proposed[t] << '\n';
  auto lp = open_out((base / "log_posterior.csv").string());
  lp << "iteration,log_posterior\n";
  for (std::size_t t = 0; t < draws.log_post.size(); ++t) lp << draws.log_post_iter[t] << ',' << fmt(draws.log_post[t]) << '\n';

  Json meta{{"d", d}, {"atoms", k_atoms}, {"draws", draws.size()}, {"iterations", iters}, {"scale", vec_json(rescaling.factor)}};
  if (!draws.draws.empty()) {
    meta["lower"] = draws.draws.front().params.lower;
    meta["upper"] = draws.draws.front().params.upper;
  }
  write_json_file((base / "draws_meta.json").string(), meta);
  for (auto* f : {&atoms, &weights, &angles, &beta_s, &beta_kappa, &xs, &acc, &lp})
    if (!*f) throw std::runtime_error("write failed in '" + dir + "'");
}

DrawSet read_draws(const std::string& dir) {
  const fs::path base(dir);
  const std::string meta_path = (base / "draws_meta.json").string();
  const Json meta = read_json_file(meta_path);
  DrawSet out;
  int d = 0, k_atoms = 0;
  std::vector<int> iters;
  double lower = 0.0, upper = 0.0;
  try {
    d = meta.at("d").get<int>();
    k_atoms = meta.at("atoms").get<int>();
    iters = meta.at("iterations").get<std::vector<int>>();
    out.scale = json_vec(meta.at("scale"));
    if (!iters.empty()) {
      lower = meta.at("lower").get<double>();
      upper = meta.at("upper").get<double>();
    }
  } catch (const Json::exception& e) {
    throw ParseError(meta_path + ": " + e.what());
  }
  std::map<int, std::size_t> slot;
  for (std::size_t t = 0; t < iters.size(); ++t) {
    slot[iters[t]] = t;
    JointDensityModel m;
    m.mu = Vector::Constant(k_atoms, std::nan(""));
    m.sigma2 = Vector::Constant(k_atoms, std::nan(""));
    m.weights = Matrix::Constant(d, k_atoms, std::nan(""));
    m.lower = lower;
    m.upper = upper;
    m.angles = CorrelationAngles::identity(d);
    out.models.push_back(std::move(m));
  }
  auto find = [&](double it, const std::string& src) -> JointDensityModel& {
    const auto s = slot.find(static_cast<int>(it));
    if (s == slot.end()) throw ParseError(src + ": iteration " + fmt(it) + " not listed in draws_meta.json");
    return out.models[s->second];
  };
  auto index = [](double v, int limit, const std::string& src) {
    const int i = static_cast<int>(v);
    if (i < 0 || i >= limit || static_cast<double>(i) != v) throw ParseError(src + ": index " + fmt(v) + " out of range");
    return i;
  };

  const std::string ap = (base / "draws_atoms.csv").string();
  const Table at = read_table(ap);
  const int c_it = at.col("iteration", ap), c_k = at.col("atom", ap), c_mu = at.col("mu", ap), c_s2 = at.col("sigma2", ap);
  for (const auto& r : at.rows) {
    auto& m = find(r[static_cast<std::size_t>(c_it)], ap);
    const int k = index(r[static_cast<std::size_t>(c_k)], k_atoms, ap);
    m.mu(k) = r[static_cast<std::size_t>(c_mu)];
    m.sigma2(k) = r[static_cast<std::size_t>(c_s2)];
  }
  if (!iters.empty()) {
    const std::string wp = (base / "draws_weights.csv").string();
    const Table wt = read_table(wp);
    const int w_it = wt.col("iteration", wp), w_dim = wt.col("dim", wp);
    std::vector<int> wc;
    for (int k = 0; k < k_atoms; ++k) wc.push_back(wt.col("w_" + std::to_string(k + 1), wp));
    for (const auto& r : wt.rows) {
      auto& m = find(r[static_cast<std::size_t>(w_it)], wp);
      const int l = index(r[static_cast<std::size_t>(w_dim)], d, wp);
      for (int k = 0; k < k_atoms; ++k) m.weights(l, k) = r[static_cast<std::size_t>(wc[static_cast<std::size_t>(k)])];
    }
  }
  const std::string gp = (base / "draws_angles.csv").string();
  const Table gt = read_table(gp);
  const int g_it = gt.col("iteration", gp), g_row = gt.col("row", gp), g_col = gt.col("col", gp), g_z = gt.col("zeta", gp);
  for (const auto& r : gt.rows) {
    auto& m = find(r[static_cast<std::size_t>(g_it)], gp);
    const int row = index(r[static_cast<std::size_t>(g_row)], d, gp);
    const int col = index(r[static_cast<std::size_t>(g_col)], row, gp);
    m.angles.zeta[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] = r[static_cast<std::size_t>(g_z)];
  }
  for (auto& m : out.models) {
    if (!m.mu.allFinite() || !m.sigma2.allFinite() || !m.weights.allFinite())
      throw ParseError(dir + ": incomplete draws (missing atom or weight rows)");
    try {
      m.validate();
    } catch (const DomainError& e) {
      throw ParseError(dir + ": " + e.what());
    }
  }
  return out;
}

std::string diagnostics_line(const DiagnosticsRecord& rec) {
  Json acc = Json::object();
  for (const auto& [name, rate] : rec.acceptance) acc[name] = std::isfinite(rate) ? Json(rate) : Json();
  Json j{{"iteration", rec.iteration},
         {"acceptance", acc},
         {"eps_atoms", rec.eps_atoms},
         {"eps_beta_s", rec.eps_beta_s},
         {"x_scale", rec.x_scale},
         {"kappa_scale", vec_json(rec.kappa_scale)},
         {"log_posterior", std::isfinite(rec.log_post) ? Json(rec.log_post) : Json()}};
  return j.dump();
}

Json read_json_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed: '" + path + "'");
}

}  // namespace rotdecon
