// quench: constants, run, diagnose, sweep, selftest, config.
//
// Configuration is layered: defaults, then --config FILE, then the
// QUENCH_OUTPUT_DIR environment variable, then --set key=value (repeatable)
// and --output.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "quench/cli.hpp"
#include "quench/error.hpp"

namespace {

struct ConfigSources {
  std::string file;
  std::vector<std::string> sets;
  std::string output;
};

void add_config_options(CLI::App* cmd, ConfigSources& src, bool with_output) {
  cmd->add_option("-c,--config", src.file, "flat key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", src.sets, "override one key, key=value (repeatable)");
  if (with_output) cmd->add_option("-o,--output", src.output, "output directory (overrides output_dir)");
}

quench::RunConfig resolve(const ConfigSources& src) {
  quench::RunConfig config = src.file.empty() ? quench::RunConfig{} : quench::load_config(src.file);
  quench::apply_environment(config);
  for (const auto& kv : src.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw quench::ConfigError("--set expects key=value, got '" + kv + "'");
    quench::set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!src.output.empty()) config.output_dir = src.output;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quenching of a nonlocal MEMS equation in the critical regime: radial solver and diagnostics"};
  app.require_subcommand(1);

  ConfigSources constants_src;
  bool as_json = false;
  auto* constants = app.add_subcommand("constants", "print the derived constants");
  add_config_options(constants, constants_src, false);
  constants->add_flag("--json", as_json, "machine-readable output");

  ConfigSources run_src;
  auto* run = app.add_subcommand("run", "integrate to quench and write trajectory, profiles and diagnostics");
  add_config_options(run, run_src, true);

  std::string diagnose_dir;
  auto* diagnose = app.add_subcommand("diagnose", "recompute the diagnostics of a stored run");
  diagnose->add_option("dir", diagnose_dir, "run output directory")->required();

  ConfigSources sweep_src;
  std::vector<std::string> grid;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "one run per grid point, summarized in sweep.csv");
  add_config_options(sweep, sweep_src, true);
  sweep->add_option("-g,--grid", grid, "axis key=v1,v2,... (repeatable; cartesian product)");
  sweep->add_option("-j,--jobs", jobs, "runs in parallel")->check(CLI::PositiveNumber);

  quench::SelfTestOptions selftest_options;
  auto* selftest = app.add_subcommand("selftest", "run the exact oracles");
  selftest->add_option("--mms-cells", selftest_options.mms_base_cells,
                       "coarsest grid of the manufactured-solution refinement study")
      ->check(CLI::Range(3, 4096));
  selftest->add_option("--b-scale", selftest_options.b_multiplier,
                       "multiply b inside the bubble quadrature (mutation check)");

  ConfigSources config_src;
  bool list_keys = false;
  auto* config = app.add_subcommand("config", "print the effective configuration");
  add_config_options(config, config_src, true);
  config->add_flag("--keys", list_keys, "list every key with its default and meaning");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return quench::exit_config;
  }

  try {
    if (*constants) return quench::cmd_constants(resolve(constants_src), as_json, std::cout, std::cerr);
    if (*run) return quench::cmd_run(resolve(run_src), std::cout, std::cerr);
    if (*diagnose) return quench::cmd_diagnose(diagnose_dir, std::cout, std::cerr);
    if (*selftest) return quench::cmd_selftest(selftest_options, std::cout, std::cerr);
    if (*sweep) {
      std::vector<quench::SweepAxis> axes;
      for (const auto& g : grid) axes.push_back(quench::parse_sweep_axis(g));
      return quench::cmd_sweep(resolve(sweep_src), axes, jobs, std::cout, std::cerr);
    }
    if (*config) {
      if (list_keys) {
        for (const auto& k : quench::config_keys()) {
          std::cout << k.name << " = " << k.default_text << "    # " << k.doc << '\n';
        }
        return quench::exit_ok;
      }
      const quench::RunConfig c = resolve(config_src);
      quench::validate(c);
      std::cout << quench::serialize_config(c);
      return quench::exit_ok;
    }
  } catch (const quench::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return quench::exit_config;
  } catch (const quench::CriticalRegimeViolation& e) {
    std::cerr << "critical regime violated: " << e.what() << '\n';
    return quench::exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return quench::exit_failure;
  }
  return quench::exit_failure;
}
