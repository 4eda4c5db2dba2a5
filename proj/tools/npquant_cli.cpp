// Batch front end: `npquant run <config>`, `npquant validate <config>`,
// `npquant version`. Exit codes: 0 ok, 2 config error, 3 runtime error.

#include <cstdio>
#include <cstring>
#include <string>

#include "npquant/parallel.hpp"
#include "npquant/scenario.hpp"
#include "npquant/version.hpp"

namespace {

void usage() {
  std::printf(
      "usage: npquant [--threads N] <command> [args]\n"
      "\n"
      "commands:\n"
      "  run <config>       run a scenario described by a config file\n"
      "  validate <config>  check a config without executing it\n"
      "  version            print the library version\n"
      "\n"
      "NPQUANT_THREADS caps the worker count when --threads is not given;\n"
      "thread count never changes numerical results.\n");
}

}  // namespace

int main(int argc, char** argv) {
  std::string command, config_path;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--threads") == 0) {
      if (i + 1 >= argc) {
        std::fprintf(stderr, "error: --threads needs a value\n");
        return 2;
      }
      npquant::set_max_threads(std::atoi(argv[++i]));
    } else if (command.empty()) {
      command = argv[i];
    } else if (config_path.empty()) {
      config_path = argv[i];
    } else {
      std::fprintf(stderr, "error: unexpected argument '%s'\n", argv[i]);
      return 2;
    }
  }

  if (command == "version") {
    std::printf("npquant %s\n", npquant::kVersion);
    return 0;
  }
  if (command != "run" && command != "validate") {
    usage();
    return command.empty() ? 2 : 2;
  }
  if (config_path.empty()) {
    std::fprintf(stderr, "error: %s needs a config path\n", command.c_str());
    return 2;
  }

  if (command == "validate") {
    const npquant::ValidationReport rep = npquant::validate_config_file(config_path);
    if (!rep.ok) {
      std::fprintf(stderr, "config has errors:\n");
      for (const auto& e : rep.errors) std::fprintf(stderr, "  %s\n", e.c_str());
      return 2;
    }
    std::printf("ok\n");
    if (!rep.defaults_applied.empty()) {
      std::printf("defaults applied:\n");
      for (const auto& d : rep.defaults_applied) std::printf("  %s\n", d.c_str());
    }
    std::printf("effective config:\n%s", rep.echo.c_str());
    return 0;
  }

  npquant::ScenarioConfig cfg;
  try {
    cfg = npquant::parse_config_file(config_path);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "config parse error: %s\n", ex.what());
    return 2;
  }
  const npquant::RunResult res = npquant::run_scenario(cfg);
  if (res.exit_code != 0) {
    std::fprintf(stderr, "%s\n", res.message.c_str());
    return res.exit_code;
  }
  for (const auto& f : res.emitted_files) std::printf("wrote %s\n", f.c_str());
  return 0;
}
