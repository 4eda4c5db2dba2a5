#include "npquant/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "npquant/evaluation.hpp"
#include "npquant/highrate.hpp"
#include "npquant/likelihood.hpp"
#include "npquant/parallel.hpp"
#include "npquant/processes.hpp"
#include "npquant/quantizers.hpp"
#include "npquant/version.hpp"

namespace npquant {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::map<std::string, ScenarioKind> kScenarioNames = {
    {"qpsk_oqpsk", ScenarioKind::qpsk_oqpsk},
    {"ar_detect", ScenarioKind::ar_detect},
    {"ma_detect", ScenarioKind::ma_detect},
    {"custom", ScenarioKind::custom},
};

std::string scenario_name(ScenarioKind k) {
  for (const auto& [name, kind] : kScenarioNames)
    if (kind == k) return name;
  return "?";
}

double parse_double(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("line " + std::to_string(line) + ": bad number '" + v + "'");
}

std::int64_t parse_int(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("line " + std::to_string(line) + ": bad integer '" + v + "'");
}

std::vector<double> parse_list(const std::string& v, int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_double(trim(tok), line));
  if (out.empty())
    throw std::invalid_argument("line " + std::to_string(line) + ": empty list");
  return out;
}

// Resolved configuration with every default applied.
struct Effective {
  ScenarioKind scenario;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::string custom_kind;
  double model_m = 0, model_sigma = 0, model_a = 0;
  std::vector<double> model_h;
  double mean0 = 0, sd0 = 1, mean1 = 1, sd1 = 1;
  int n_cells = 0, k = 3, n_mc = 1000, n_train = 20000;
  int eval_n = 80, grid_nodes = 101;
  std::int64_t trials = 0;
  double box = 0;
  int threads = 0;
};

std::string fmt_u64(std::uint64_t v) { return std::to_string(v); }

std::string fmt_num(double v) {
  // integers print bare so echoes stay tidy and reparse exactly
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  // shortest representation that still reparses to the same double
  for (int prec = 15; prec <= 17; ++prec) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::stod(buf) == v) return buf;
  }
  return format_double(v);
}

std::string echo_of(const Effective& e) {
  std::ostringstream os;
  os << "design.k = " << e.k << "\n";
  os << "design.n = " << e.n_cells << "\n";
  os << "design.n_mc = " << e.n_mc << "\n";
  os << "design.n_train = " << e.n_train << "\n";
  os << "eval.box = " << fmt_num(e.box) << "\n";
  os << "eval.grid_nodes = " << e.grid_nodes << "\n";
  os << "eval.n = " << e.eval_n << "\n";
  os << "eval.trials = " << e.trials << "\n";
  if (e.scenario == ScenarioKind::custom) {
    os << "model.kind = " << e.custom_kind << "\n";
    if (e.custom_kind == "gauss_pair") {
      os << "model.mean0 = " << fmt_num(e.mean0) << "\n";
      os << "model.mean1 = " << fmt_num(e.mean1) << "\n";
      os << "model.sd0 = " << fmt_num(e.sd0) << "\n";
      os << "model.sd1 = " << fmt_num(e.sd1) << "\n";
    }
  }
  const bool wants_a = e.scenario == ScenarioKind::ar_detect ||
                       (e.scenario == ScenarioKind::custom && e.custom_kind == "ar1");
  const bool wants_h = e.scenario == ScenarioKind::ma_detect ||
                       (e.scenario == ScenarioKind::custom && e.custom_kind == "ma");
  const bool wants_m = e.scenario == ScenarioKind::qpsk_oqpsk ||
                       (e.scenario == ScenarioKind::custom && e.custom_kind == "qpsk_hmm");
  if (wants_a) os << "model.a = " << fmt_num(e.model_a) << "\n";
  if (wants_h) {
    os << "model.h = ";
    for (std::size_t i = 0; i < e.model_h.size(); ++i)
      os << (i ? "," : "") << format_double(e.model_h[i]);
    os << "\n";
  }
  if (wants_m) os << "model.m = " << fmt_num(e.model_m) << "\n";
  if (e.custom_kind != "gauss_pair") os << "model.sigma = " << fmt_num(e.model_sigma) << "\n";
  os << "output_dir = " << e.output_dir << "\n";
  os << "scenario = " << scenario_name(e.scenario) << "\n";
  os << "seed = " << fmt_u64(e.seed) << "\n";
  if (e.threads > 0) os << "threads = " << e.threads << "\n";
  return os.str();
}

// fills defaults, collecting both errors and the list of defaults applied
Effective resolve(const ScenarioConfig& c, std::vector<std::string>& errors,
                  std::vector<std::string>& defaults) {
  Effective e;
  e.scenario = c.scenario;
  auto dflt = [&](const std::string& key, const std::string& value) {
    defaults.push_back(key + " = " + value);
  };

  if (!c.seed)
    errors.push_back("seed: mandatory field is missing");
  else
    e.seed = *c.seed;
  if (c.output_dir.empty())
    errors.push_back("output_dir: mandatory field is missing");
  e.output_dir = c.output_dir;
  e.threads = c.threads.value_or(0);
  if (e.threads < 0) errors.push_back("threads: must be >= 0");

  e.custom_kind = c.custom_kind.value_or("");
  if (c.scenario == ScenarioKind::custom) {
    static const std::vector<std::string> kinds = {"gauss_pair", "ar1", "ma", "qpsk_hmm"};
    if (std::find(kinds.begin(), kinds.end(), e.custom_kind) == kinds.end())
      errors.push_back("model.kind: custom scenario needs one of gauss_pair|ar1|ma|qpsk_hmm");
  }
  const bool like_qpsk = c.scenario == ScenarioKind::qpsk_oqpsk || e.custom_kind == "qpsk_hmm";
  const bool like_ar = c.scenario == ScenarioKind::ar_detect || e.custom_kind == "ar1";
  const bool like_ma = c.scenario == ScenarioKind::ma_detect || e.custom_kind == "ma";
  const bool like_pair = e.custom_kind == "gauss_pair";

  // model parameters and their paper defaults
  if (like_pair) {
    e.mean0 = c.custom_mean0.value_or(0.0);
    e.sd0 = c.custom_sd0.value_or(1.0);
    e.mean1 = c.custom_mean1.value_or(1.0);
    e.sd1 = c.custom_sd1.value_or(1.0);
    if (!c.custom_mean0) dflt("model.mean0", "0");
    if (!c.custom_sd0) dflt("model.sd0", "1");
    if (!c.custom_mean1) dflt("model.mean1", "1");
    if (!c.custom_sd1) dflt("model.sd1", "1");
    if (e.sd0 <= 0 || e.sd1 <= 0) errors.push_back("model.sd0/sd1: must be > 0");
  } else {
    const double sigma_default = like_qpsk ? 0.6 : like_ar ? 1.0 : 1.5;
    e.model_sigma = c.model_sigma.value_or(sigma_default);
    if (!c.model_sigma) dflt("model.sigma", fmt_num(sigma_default));
    if (!(e.model_sigma > 0.0)) errors.push_back("model.sigma: must be > 0");
  }
  if (like_qpsk) {
    e.model_m = c.model_m.value_or(3.0);
    if (!c.model_m) dflt("model.m", "3");
    if (!(e.model_m > 0.0)) errors.push_back("model.m: must be > 0");
  }
  if (like_ar) {
    e.model_a = c.model_a.value_or(0.8);
    if (!c.model_a) dflt("model.a", fmt_num(0.8));
    if (!(std::abs(e.model_a) < 1.0)) errors.push_back("model.a: must satisfy |a| < 1");
  }
  if (like_ma) {
    e.model_h = c.model_h.value_or(std::vector<double>{1.06677, -0.59281, 0.09565});
    if (!c.model_h) dflt("model.h", "1.06677,-0.59281,0.09565");
    if (e.model_h.empty()) errors.push_back("model.h: needs at least one tap");
    if (e.model_h.size() > 4)
      errors.push_back("model.h: at most 4 taps (latent grid grows as 41^L)");
  }

  // design parameters
  const int n_default = like_qpsk ? 128 : like_ar ? 64 : 4;
  e.n_cells = c.design_n.value_or(n_default);
  if (!c.design_n) dflt("design.n", std::to_string(n_default));
  if (e.n_cells < 2) errors.push_back("design.n: must be >= 2");
  if (like_ar) {
    const int root = static_cast<int>(std::lround(std::sqrt(double(e.n_cells))));
    if (root * root != e.n_cells)
      errors.push_back("design.n: the 2-D uniform baseline needs a perfect square");
  }
  e.k = c.design_k.value_or(3);
  if (!c.design_k) dflt("design.k", "3");
  if (e.k < 0) errors.push_back("design.k: must be >= 0");
  e.n_mc = c.design_n_mc.value_or(1000);
  if (!c.design_n_mc) dflt("design.n_mc", "1000");
  if (e.n_mc < 1) errors.push_back("design.n_mc: must be >= 1");
  e.n_train = c.design_n_train.value_or(20000);
  if (!c.design_n_train) dflt("design.n_train", "20000");
  if (e.n_train < 10 * e.n_cells)
    errors.push_back("design.n_train: LBG needs at least 10*design.n samples");

  // evaluation parameters
  const bool scalar = like_ma || like_pair;
  const int grid_default = scalar ? 1001 : 101;
  e.grid_nodes = c.eval_grid_nodes.value_or(grid_default);
  if (!c.eval_grid_nodes) dflt("eval.grid_nodes", std::to_string(grid_default));
  if (e.grid_nodes < 2) errors.push_back("eval.grid_nodes: must be >= 2");
  e.eval_n = c.eval_n.value_or(80);
  if (!c.eval_n) dflt("eval.n", "80");
  if (e.eval_n < 1) errors.push_back("eval.n: must be >= 1");
  const std::int64_t trials_default = like_ma ? 50000 : 0;
  e.trials = c.eval_trials.value_or(trials_default);
  if (!c.eval_trials) dflt("eval.trials", std::to_string(trials_default));
  if (e.trials < 0) errors.push_back("eval.trials: must be >= 0");

  double box_default = 8.0;
  if (like_qpsk) box_default = e.model_m;
  else if (like_ma) box_default = 10.0 * e.model_sigma;
  e.box = c.eval_box.value_or(box_default);
  if (!c.eval_box) dflt("eval.box", fmt_num(box_default));
  if (!(e.box > 0.0)) errors.push_back("eval.box: must be > 0");
  if (like_qpsk && std::abs(e.box - e.model_m) > 1e-12)
    errors.push_back("eval.box: the hidden-Markov scenarios use the model box [-m, m]^2");
  return e;
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text) {
  ScenarioConfig c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  bool scenario_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("line " + std::to_string(lineno) + ": empty key or value");

    if (key == "scenario") {
      const auto it = kScenarioNames.find(val);
      if (it == kScenarioNames.end())
        throw std::invalid_argument("line " + std::to_string(lineno) +
                                    ": unknown scenario '" + val + "'");
      c.scenario = it->second;
      scenario_seen = true;
    } else if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(parse_int(val, lineno));
    } else if (key == "output_dir") {
      c.output_dir = val;
    } else if (key == "threads") {
      c.threads = static_cast<int>(parse_int(val, lineno));
    } else if (key == "model.m") {
      c.model_m = parse_double(val, lineno);
    } else if (key == "model.sigma") {
      c.model_sigma = parse_double(val, lineno);
    } else if (key == "model.a") {
      c.model_a = parse_double(val, lineno);
    } else if (key == "model.h") {
      c.model_h = parse_list(val, lineno);
    } else if (key == "model.kind") {
      c.custom_kind = val;
    } else if (key == "model.mean0") {
      c.custom_mean0 = parse_double(val, lineno);
    } else if (key == "model.sd0") {
      c.custom_sd0 = parse_double(val, lineno);
    } else if (key == "model.mean1") {
      c.custom_mean1 = parse_double(val, lineno);
    } else if (key == "model.sd1") {
      c.custom_sd1 = parse_double(val, lineno);
    } else if (key == "design.n") {
      c.design_n = static_cast<int>(parse_int(val, lineno));
    } else if (key == "design.k") {
      c.design_k = static_cast<int>(parse_int(val, lineno));
    } else if (key == "design.n_mc") {
      c.design_n_mc = static_cast<int>(parse_int(val, lineno));
    } else if (key == "design.n_train") {
      c.design_n_train = static_cast<int>(parse_int(val, lineno));
    } else if (key == "eval.n") {
      c.eval_n = static_cast<int>(parse_int(val, lineno));
    } else if (key == "eval.trials") {
      c.eval_trials = parse_int(val, lineno);
    } else if (key == "eval.grid_nodes") {
      c.eval_grid_nodes = static_cast<int>(parse_int(val, lineno));
    } else if (key == "eval.box") {
      c.eval_box = parse_double(val, lineno);
    } else {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": unknown key '" + key +
                                  "'");
    }
  }
  if (!scenario_seen) throw std::invalid_argument("config has no 'scenario' line");
  return c;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

ValidationReport validate_config(const ScenarioConfig& config) {
  ValidationReport rep;
  Effective e = resolve(config, rep.errors, rep.defaults_applied);
  rep.ok = rep.errors.empty();
  if (rep.ok) rep.echo = echo_of(e);
  return rep;
}

ValidationReport validate_config_file(const std::string& path) {
  ValidationReport rep;
  try {
    return validate_config(parse_config_file(path));
  } catch (const std::exception& ex) {
    rep.ok = false;
    rep.errors.push_back(ex.what());
    return rep;
  }
}

// ---- pipelines ----------------------------------------------------------------

namespace {

struct Emitter {
  fs::path dir;
  std::vector<std::string>* files;

  std::string path(const std::string& name) const { return (dir / name).string(); }
  void note(const std::string& name) const { files->push_back(path(name)); }
};

json roc_entry_json(const RocCurve& curve) {
  json j;
  j["label"] = curve.label;
  j["auc"] = auc(curve);
  j["miss_at_0.1"] = curve.miss_at(0.1);
  j["miss_at_0.2"] = curve.miss_at(0.2);
  j["miss_at_0.3"] = curve.miss_at(0.3);
  return j;
}

json de_json(double v) {
  // the loss constant is genuinely infinite when the point density vanishes
  // where the score does not; JSON has no inf literal
  if (std::isfinite(v)) return v;
  return "infinity";
}

json table_json(const ComparisonReport& rep) {
  json arr = json::array();
  for (const auto& en : rep.entries) {
    json j;
    j["label"] = en.label;
    j["n_cells"] = en.n_cells;
    j["de"] = de_json(en.de);
    j["de_bandwidth_low"] = de_json(en.de_bandwidth_low);
    j["de_bandwidth_high"] = de_json(en.de_bandwidth_high);
    arr.push_back(j);
  }
  return arr;
}

void write_report(const Emitter& em, const Effective& e, json results) {
  json j;
  j["library_version"] = kVersion;
  j["scenario"] = scenario_name(e.scenario);
  j["seed"] = e.seed;
  json cfg;
  std::istringstream is(echo_of(e));
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    cfg[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  j["config"] = cfg;
  j["results"] = std::move(results);
  std::ofstream f(em.path("report.json"), std::ios::binary);
  f << j.dump(2) << "\n";
  em.note("report.json");
}

// i.i.d. H0-marginal samples rejected onto the truncation box, for MSE training
std::vector<double> h0_training_samples(const ProcessModel& model, std::size_t n,
                                        std::uint64_t seed) {
  const Box box = model.domain_box();
  const int d = model.dim();
  std::vector<double> out(n * d);
  Rng rng(seed, {0x737});
  std::vector<double> y(d);
  for (std::size_t i = 0; i < n; ++i) {
    do {
      sample_marginal_h0(model, rng, y.data());
    } while (!box.contains(y));
    std::copy(y.begin(), y.end(), out.begin() + i * d);
  }
  return out;
}

// shared 2-D design pipeline for the QPSK and AR scenarios
void run_planar(const Effective& e, const ProcessModel& model, const Emitter& em) {
  const Box box = model.domain_box();
  const RegularGrid grid(box, {e.grid_nodes, e.grid_nodes});

  const ScoreBundle bundle = estimate_Fbar(model, grid, e.k, e.n_mc, Rng(e.seed, {1}).next_u64());
  const DensityField p0 = marginal_density_field(model, Hypothesis::H0, grid);
  const DensityField qstar = target_density_qstar(p0, bundle.fbar);

  write_field_csv_file(em.path("field_p0.csv"), grid, p0.values);
  em.note("field_p0.csv");
  write_field_csv_file(em.path("field_fbar.csv"), grid, bundle.fbar.values,
                       bundle.fbar.stderrs);
  em.note("field_fbar.csv");
  write_field_csv_file(em.path("field_qstar.csv"), grid, qstar.values);
  em.note("field_qstar.csv");

  const std::vector<double> mse_train =
      h0_training_samples(model, static_cast<std::size_t>(e.n_train), Rng(e.seed, {2}).next_u64());
  const LbgResult mse = lbg_train(mse_train, 2, box, static_cast<std::size_t>(e.n_cells),
                                  Rng(e.seed, {3}).next_u64());
  const RejectionResult prop_train =
      rejection_sample(qstar, static_cast<std::size_t>(e.n_train), Rng(e.seed, {4}).next_u64());
  const LbgResult prop = lbg_train(prop_train.samples, 2, box,
                                   static_cast<std::size_t>(e.n_cells),
                                   Rng(e.seed, {5}).next_u64());

  write_codebook_csv_file(em.path("codebook_mse.csv"), mse.codebook);
  em.note("codebook_mse.csv");
  write_codebook_csv_file(em.path("codebook_proposed.csv"), prop.codebook);
  em.note("codebook_proposed.csv");

  const int root = static_cast<int>(std::lround(std::sqrt(double(e.n_cells))));
  const VoronoiQuantizer uniform = uniform_quantizer(box, {root, root});
  write_codebook_csv_file(em.path("codebook_uniform.csv"), uniform.codebook());
  em.note("codebook_uniform.csv");

  DensityField zeta_uniform;
  zeta_uniform.grid = grid;
  zeta_uniform.kind = FieldKind::point_density;
  zeta_uniform.values.assign(grid.total_nodes(), 1.0);
  zeta_uniform.normalize();

  const VoronoiQuantizer mse_q(mse.codebook);
  const VoronoiQuantizer prop_q(prop.codebook);
  std::vector<QuantizerSpec> specs;
  specs.push_back({&uniform, "uniform", &zeta_uniform});
  specs.push_back({&mse_q, "mse", nullptr});
  specs.push_back({&prop_q, "proposed", nullptr});
  const ComparisonReport table =
      exponent_loss_table(model, specs, grid, Rng(e.seed, {6}).next_u64());

  json results;
  results["de_table"] = table_json(table);
  results["holder_bound"] = table.holder_bound;
  results["lbg"] = {{"mse_iterations", mse.iterations},
                    {"proposed_iterations", prop.iterations},
                    {"mse_final", mse.mse_history.back()},
                    {"proposed_final", prop.mse_history.back()}};
  results["rejection_acceptance_rate"] = prop_train.acceptance_rate;
  write_report(em, e, results);
}

// scalar pipeline: compander designs, D_e table, optional ROC
void run_scalar(const Effective& e, const ProcessModel& model, const Emitter& em,
                bool has_distinct_marginals) {
  const Box box = model.domain_box();
  const RegularGrid grid(box, {e.grid_nodes});

  const ScoreBundle bundle = estimate_Fbar(model, grid, e.k, e.n_mc, Rng(e.seed, {1}).next_u64());
  const DensityField p0 = marginal_density_field(model, Hypothesis::H0, grid);
  const DensityField p1 = marginal_density_field(model, Hypothesis::H1, grid);
  const CovariationProfile profile = CovariationProfile::isotropic(1.0 / 12.0, 1);
  const ScoreField f = compute_F(bundle, profile);

  write_field_csv_file(em.path("field_p0.csv"), grid, p0.values);
  em.note("field_p0.csv");
  write_field_csv_file(em.path("field_p1.csv"), grid, p1.values);
  em.note("field_p1.csv");
  write_field_csv_file(em.path("field_fbar.csv"), grid, bundle.fbar.values,
                       bundle.fbar.stderrs);
  em.note("field_fbar.csv");

  const DensityField zeta_mse = bennett_mse_density(p0, 1);
  const DensityField zeta_prop = optimal_density_scalar(p0, f);
  write_field_csv_file(em.path("field_zeta_mse.csv"), grid, zeta_mse.values);
  em.note("field_zeta_mse.csv");
  write_field_csv_file(em.path("field_zeta_proposed.csv"), grid, zeta_prop.values);
  em.note("field_zeta_proposed.csv");

  const std::size_t n_cells = static_cast<std::size_t>(e.n_cells);
  const VoronoiQuantizer uniform = uniform_quantizer(box, {e.n_cells});
  const CompanderQuantizer mse_q =
      compander_from_density(floored_positive(zeta_mse), n_cells);
  const CompanderQuantizer prop_q =
      compander_from_density(floored_positive(zeta_prop), n_cells);

  std::vector<std::pair<std::string, const CellPartition*>> lineup = {
      {"uniform", &uniform}, {"mse", &mse_q}, {"proposed", &prop_q}};

  std::optional<CompanderQuantizer> gh_q;
  std::optional<DensityField> zeta_gh;
  if (has_distinct_marginals) {
    const ScoreField f_gh = gupta_hero_F(p0, p1, profile);
    zeta_gh = optimal_density_scalar(p0, f_gh);
    write_field_csv_file(em.path("field_zeta_guptahero.csv"), grid, zeta_gh->values);
    em.note("field_zeta_guptahero.csv");
    gh_q.emplace(compander_from_density(floored_positive(*zeta_gh), n_cells));
    lineup.push_back({"guptahero", &*gh_q});
  }

  DensityField zeta_uniform;
  zeta_uniform.grid = grid;
  zeta_uniform.kind = FieldKind::point_density;
  zeta_uniform.values.assign(grid.total_nodes(), 1.0);
  zeta_uniform.normalize();

  std::vector<QuantizerSpec> specs;
  specs.push_back({&uniform, "uniform", &zeta_uniform});
  specs.push_back({&mse_q, "mse", &zeta_mse});
  specs.push_back({&prop_q, "proposed", &zeta_prop});
  if (gh_q) specs.push_back({&*gh_q, "guptahero", &*zeta_gh});
  const ComparisonReport table =
      exponent_loss_table(model, specs, grid, Rng(e.seed, {6}).next_u64());

  json results;
  results["de_table"] = table_json(table);
  results["holder_bound"] = table.holder_bound;

  for (const auto& [label, q] : lineup) {
    write_codebook_csv_file(em.path("codebook_" + label + ".csv"), [&] {
      Codebook c;
      c.dim = 1;
      c.domain = box;
      for (std::size_t j = 0; j < q->num_cells(); ++j)
        c.points.push_back(q->representative(j)[0]);
      return c;
    }());
    em.note("codebook_" + label + ".csv");
  }

  if (e.trials > 0) {
    GaussQuantizedOptions opts;
    if (model.kind() == ProcessModel::Kind::Gauss) {
      json pf = json::object();
      for (const auto& [label, q] : lineup) {
        const double err = ma_filter_preflight_error(model.gauss(), *q, opts);
        pf[label] = err;
        if (err > 1e-2)
          throw std::runtime_error("quantized-LLR preflight failed for '" + label +
                                   "': error " + format_double(err) + " > 1e-2");
      }
      results["preflight_error"] = pf;
    }
    json rocs = json::array();
    for (const auto& [label, q] : lineup) {
      const RocCurve curve = roc_curve(model, *q, e.eval_n, e.trials,
                                       Rng(e.seed, {7}).next_u64(), opts, label);
      write_roc_csv_file(em.path("roc_" + label + ".csv"), curve);
      em.note("roc_" + label + ".csv");
      rocs.push_back(roc_entry_json(curve));
    }
    results["roc"] = rocs;
  }
  write_report(em, e, results);
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config) {
  RunResult res;
  const ValidationReport rep = validate_config(config);
  if (!rep.ok) {
    res.exit_code = 2;
    std::ostringstream os;
    os << "config validation failed:";
    for (const auto& err : rep.errors) os << "\n  " << err;
    res.message = os.str();
    return res;
  }
  std::vector<std::string> errs, defaults;
  const Effective e = resolve(config, errs, defaults);

  try {
    if (e.threads > 0) set_max_threads(e.threads);
    fs::create_directories(e.output_dir);
    Emitter em{fs::path(e.output_dir), &res.emitted_files};

    {
      std::ofstream f(em.path("config.echo"), std::ios::binary);
      if (!f) throw std::runtime_error("cannot write into output_dir: " + e.output_dir);
      f << rep.echo;
      em.note("config.echo");
    }

    switch (e.scenario) {
      case ScenarioKind::qpsk_oqpsk:
        run_planar(e, ProcessModel(make_qpsk_oqpsk_hmm(e.model_m, e.model_sigma)), em);
        break;
      case ScenarioKind::ar_detect:
        run_planar(e, ProcessModel(make_ar_detect_model(e.model_a, e.model_sigma, e.box)), em);
        break;
      case ScenarioKind::ma_detect:
        run_scalar(e, ProcessModel(make_ma_detect_model(e.model_h, e.model_sigma, e.box)), em,
                   true);
        break;
      case ScenarioKind::custom:
        if (e.custom_kind == "qpsk_hmm")
          run_planar(e, ProcessModel(make_qpsk_oqpsk_hmm(e.model_m, e.model_sigma)), em);
        else if (e.custom_kind == "ar1")
          run_planar(e, ProcessModel(make_ar_detect_model(e.model_a, e.model_sigma, e.box)), em);
        else if (e.custom_kind == "ma")
          run_scalar(e, ProcessModel(make_ma_detect_model(e.model_h, e.model_sigma, e.box)), em,
                     true);
        else
          run_scalar(e,
                     ProcessModel(make_gaussian_pair_iid(e.mean0, e.sd0, e.mean1, e.sd1, e.box)),
                     em, true);
        break;
    }
  } catch (const std::exception& ex) {
    res.exit_code = 3;
    res.message = std::string("runtime failure: ") + ex.what();
    return res;
  }
  res.exit_code = 0;
  res.message = "ok";
  return res;
}

}  // namespace npquant
