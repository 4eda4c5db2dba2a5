#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "npquant/scenario.hpp"

using namespace npquant;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string tiny_pair_config(const std::string& outdir) {
  return "scenario = custom\n"
         "model.kind = gauss_pair\n"
         "seed = 4711\n"
         "design.n = 4\n"
         "design.k = 1\n"
         "design.n_mc = 50\n"
         "design.n_train = 400\n"
         "eval.trials = 200\n"
         "eval.n = 12\n"
         "eval.grid_nodes = 201\n"
         "output_dir = " + outdir + "\n";
}

}  // namespace

TEST_CASE("config parsing reports line numbers and unknown keys") {
  CHECK_THROWS_WITH_AS(parse_config_text("scenario = qpsk_oqpsk\nbogus.key = 3\n"),
                       doctest::Contains("line 2"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_text("scenario = qpsk_oqpsk\nmodel.sigma == 0.6\n"),
                       doctest::Contains("line 2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("model.sigma = 0.6\n"), std::invalid_argument);
  const ScenarioConfig c = parse_config_text(
      "# comment\nscenario = ma_detect\nseed = 5\nmodel.h = 1.0, -0.5, 0.25\n"
      "output_dir = /tmp/x\n");
  REQUIRE(c.model_h.has_value());
  CHECK(c.model_h->size() == 3);
  CHECK((*c.model_h)[1] == doctest::Approx(-0.5));
}

TEST_CASE("validation names missing and out-of-range fields") {
  ScenarioConfig c = parse_config_text("scenario = qpsk_oqpsk\noutput_dir = /tmp/x\n");
  const ValidationReport missing_seed = validate_config(c);
  CHECK(!missing_seed.ok);
  bool saw_seed = false;
  for (const auto& e : missing_seed.errors) saw_seed |= e.find("seed") != std::string::npos;
  CHECK(saw_seed);

  c = parse_config_text(
      "scenario = qpsk_oqpsk\nseed = 1\nmodel.sigma = 0\noutput_dir = /tmp/x\n");
  const ValidationReport sigma = validate_config(c);
  CHECK(!sigma.ok);
  bool saw_sigma = false;
  for (const auto& e : sigma.errors) saw_sigma |= e.find("model.sigma") != std::string::npos;
  CHECK(saw_sigma);
}

TEST_CASE("a valid constellation config validates with the built-in defaults echoed") {
  const ScenarioConfig c = parse_config_text(
      "scenario = qpsk_oqpsk\nseed = 7\noutput_dir = /tmp/npq_v\n");
  const ValidationReport rep = validate_config(c);
  REQUIRE(rep.ok);
  bool saw_k = false, saw_mc = false;
  for (const auto& d : rep.defaults_applied) {
    saw_k |= d == "design.k = 3";
    saw_mc |= d == "design.n_mc = 1000";
  }
  CHECK(saw_k);
  CHECK(saw_mc);
  CHECK(rep.echo.find("design.n = 128") != std::string::npos);
  CHECK(rep.echo.find("model.m = 3") != std::string::npos);
  // canonical echo reparses to itself
  const ValidationReport again = validate_config(parse_config_text(rep.echo));
  CHECK(again.ok);
  CHECK(again.echo == rep.echo);
}

TEST_CASE("run_scenario emits the fixed file set and fails cleanly on bad configs") {
  const fs::path dir = fs::temp_directory_path() / "npq_run_pair";
  fs::remove_all(dir);
  const ScenarioConfig c = parse_config_text(tiny_pair_config(dir.string()));
  const RunResult res = run_scenario(c);
  REQUIRE(res.exit_code == 0);
  for (const char* name :
       {"config.echo", "report.json", "codebook_uniform.csv", "codebook_mse.csv",
        "codebook_proposed.csv", "codebook_guptahero.csv", "field_p0.csv",
        "roc_proposed.csv"})
    CHECK(fs::exists(dir / name));

  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(j["library_version"] == "0.1.0");
  CHECK(j["results"]["de_table"].size() == 4);
  CHECK(j["results"]["roc"].size() == 4);
  CHECK(j["config"]["seed"] == "4711");

  ScenarioConfig bad = c;
  bad.seed.reset();
  CHECK(run_scenario(bad).exit_code == 2);
}

TEST_CASE("reruns from the emitted echo are byte-identical") {
  const fs::path dir1 = fs::temp_directory_path() / "npq_echo_a";
  fs::remove_all(dir1);
  const RunResult first = run_scenario(parse_config_text(tiny_pair_config(dir1.string())));
  REQUIRE(first.exit_code == 0);
  std::map<std::string, std::string> snapshot;
  for (const auto& entry : fs::directory_iterator(dir1))
    snapshot[entry.path().filename().string()] = slurp(entry.path());
  // regenerate the whole tree from the embedded echo
  const std::string echo = slurp(dir1 / "config.echo");
  const RunResult second = run_scenario(parse_config_text(echo));
  REQUIRE(second.exit_code == 0);
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(dir1)) {
    CHECK(slurp(entry.path()) == snapshot.at(entry.path().filename().string()));
    ++seen;
  }
  CHECK(seen == snapshot.size());
}

TEST_CASE("runtime failures surface as exit code 3") {
  const fs::path blocker = fs::temp_directory_path() / "npq_not_a_dir";
  std::ofstream(blocker).put('x');  // a file where the output directory should go
  const ScenarioConfig c = parse_config_text(
      "scenario = ar_detect\nseed = 1\noutput_dir = " + (blocker / "sub").string() + "\n");
  const RunResult res = run_scenario(c);
  CHECK(res.exit_code == 3);
  CHECK(res.message.find("runtime failure") != std::string::npos);
}

TEST_CASE("ar_detect default run reports the loss-constant ordering") {
  const fs::path dir = fs::temp_directory_path() / "npq_ar_defaults";
  fs::remove_all(dir);
  const ScenarioConfig c = parse_config_text(
      "scenario = ar_detect\nseed = 1\noutput_dir = " + dir.string() + "\n");
  const RunResult res = run_scenario(c);
  REQUIRE(res.exit_code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  const auto& table = j["results"]["de_table"];
  REQUIRE(table.size() == 3);
  std::map<std::string, double> de;
  for (const auto& e : table) de[e["label"]] = e["de"].get<double>();
  CHECK(de.at("proposed") < de.at("mse"));
  CHECK(de.at("mse") < de.at("uniform"));
}

TEST_CASE("qpsk_oqpsk emits two trained codebooks of the configured size") {
  const fs::path dir = fs::temp_directory_path() / "npq_qpsk_cb";
  fs::remove_all(dir);
  const ScenarioConfig c = parse_config_text(
      "scenario = qpsk_oqpsk\nseed = 3\ndesign.n_mc = 400\ndesign.n_train = 8000\n"
      "eval.grid_nodes = 61\noutput_dir = " + dir.string() + "\n");
  REQUIRE(run_scenario(c).exit_code == 0);
  for (const char* name : {"codebook_mse.csv", "codebook_proposed.csv"}) {
    std::istringstream is(slurp(dir / name));
    std::string line;
    int rows = -1;  // skip header
    while (std::getline(is, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 128);
  }
}
