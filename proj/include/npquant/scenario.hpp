#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace npquant {

enum class ScenarioKind { qpsk_oqpsk, ar_detect, ma_detect, custom };

// Flat dotted-key configuration (one `key = value` per line). Optional fields
// resolve to per-scenario defaults; `seed` is always mandatory.
struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::qpsk_oqpsk;
  std::optional<std::uint64_t> seed;  // mandatory, but absence is a reportable error
  std::string output_dir;

  // model parameters
  std::optional<double> model_m;            // qpsk_oqpsk truncation
  std::optional<double> model_sigma;
  std::optional<double> model_a;            // ar_detect
  std::optional<std::vector<double>> model_h;  // ma_detect taps
  std::optional<std::string> custom_kind;   // custom: gauss_pair | ar1 | ma | qpsk_hmm
  std::optional<double> custom_mean0, custom_sd0, custom_mean1, custom_sd1;

  // design parameters
  std::optional<int> design_n;       // codebook size N
  std::optional<int> design_k;       // score window half-width
  std::optional<int> design_n_mc;    // score replications
  std::optional<int> design_n_train; // LBG training samples

  // evaluation parameters
  std::optional<int> eval_n;          // path length for ROC
  std::optional<std::int64_t> eval_trials;
  std::optional<int> eval_grid_nodes;
  std::optional<double> eval_box;     // truncation half-width
  std::optional<int> threads;
};

struct ValidationReport {
  bool ok = false;
  std::vector<std::string> errors;             // every violated field
  std::vector<std::string> defaults_applied;   // "key = value" strings
  std::string echo;                            // canonical effective config
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 config error, 3 runtime error
  std::string message;
  std::vector<std::string> emitted_files;
};

// parse errors carry 1-based line numbers in the message
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig parse_config_file(const std::string& path);

ValidationReport validate_config(const ScenarioConfig& config);
ValidationReport validate_config_file(const std::string& path);

RunResult run_scenario(const ScenarioConfig& config);

}  // namespace npquant
