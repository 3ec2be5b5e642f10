/*
 * Copyright 2026 The favano-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// favano: run, verify and compare asynchronous federated learning simulations.
//
// Exit codes: 0 success, 1 a verification check failed, 2 invalid
// configuration or usage, 3 I/O or data error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "favano/config.hpp"
#include "favano/dataset.hpp"
#include "favano/errors.hpp"
#include "favano/metrics.hpp"
#include "favano/sim.hpp"
#include "favano/verify.hpp"

namespace {

using favano::RunConfig;

constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct ConfigSources {
  std::string preset;
  std::string config_file;
  std::string manifest_file;
  std::vector<std::string> overrides;  // key=value
  std::map<std::string, std::string> flags;
};

void add_config_options(CLI::App& cmd, ConfigSources& src) {
  cmd.add_option("--preset", src.preset, "Start from a named preset");
  cmd.add_option("--config", src.config_file, "key=value config file");
  cmd.add_option("--from-manifest", src.manifest_file, "Re-run the config echoed in a manifest");
  cmd.add_option("--set", src.overrides, "Override any key: --set key=value");
  for (const char* key : favano::config_keys()) {
    const std::string name = key;
    cmd.add_option_function<std::string>(
        "--" + name, [&src, name](const std::string& v) { src.flags[name] = v; },
        "Set '" + name + "'");
  }
}

RunConfig resolve(const ConfigSources& src) {
  RunConfig config;
  if (!src.preset.empty()) config = favano::make_preset(src.preset);
  if (!src.manifest_file.empty()) {
    config = favano::config_from_manifest(favano::read_text_file(src.manifest_file));
  }
  if (const char* dir = std::getenv("FAVANO_ARTIFACT_DIR")) config.out_dir = dir;
  if (!src.config_file.empty()) {
    favano::apply_config_text(config, favano::read_text_file(src.config_file));
  }
  for (const auto& [key, value] : src.flags) favano::apply_setting(config, key, value);
  for (const auto& kv : src.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw favano::ConfigError("set", "expected key=value, got '" + kv + "'");
    favano::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

void report_config_errors(const favano::ExperimentConfig& e) {
  for (const auto& err : favano::validation_errors(e)) std::cerr << "config error: " << err.what() << "\n";
}

void write_run(const RunConfig& config, const favano::ProtocolRun& run, const std::string& stem) {
  std::filesystem::create_directories(config.out_dir);
  const auto base = config.out_dir / stem;
  favano::write_metrics(run.records, base.string() + ".csv");
  favano::write_text_file(base.string() + ".manifest.json", favano::manifest_json(config, run));
  if (config.experiment.record_trace) {
    favano::write_text_file(base.string() + ".trace.jsonl", favano::trace_jsonl(run.trace));
  }
}

int cmd_run(const ConfigSources& src) {
  const RunConfig config = resolve(src);
  if (!favano::validation_errors(config.experiment).empty()) {
    report_config_errors(config.experiment);
    return kExitConfig;
  }
  const auto run = favano::run_experiment(config.experiment);
  write_run(config, run, config.name);
  const auto& last = run.records.back();
  std::cout << config.name << ": " << favano::to_string(config.experiment.method) << ", "
            << run.rounds << " rounds, sim_time " << last.sim_time << ", f(mu) "
            << favano::format_real(last.f_mu);
  if (last.test_acc) std::cout << ", test_acc " << favano::format_real(*last.test_acc);
  std::cout << "\nwrote " << (config.out_dir / config.name).string() << ".csv\n";
  return 0;
}

int cmd_verify(const std::string& suite, std::uint64_t seed) {
  const auto results = favano::run_verify_suite(suite, seed);
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.suite << ": " << r.name << "  measured "
              << r.measured << ", expected " << r.expected << "\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : kExitVerifyFailed;
}

int cmd_compare(const ConfigSources& src, const std::vector<std::string>& methods, double step) {
  if (methods.size() < 2) throw favano::ConfigError("methods", "need at least two methods");
  const RunConfig base = resolve(src);
  std::vector<favano::ProtocolRun> runs;
  for (const auto& name : methods) {
    RunConfig config = base;
    config.experiment.method = favano::parse_method(name);
    if (!favano::validation_errors(config.experiment).empty()) {
      report_config_errors(config.experiment);
      return kExitConfig;
    }
    runs.push_back(favano::run_experiment(config.experiment));
    write_run(config, runs.back(), base.name + "." + name);
    std::cout << name << ": " << runs.back().rounds << " rounds\n";
  }
  const double grid = step > 0.0 ? step
                                 : base.experiment.server_wait + base.experiment.server_interact;
  const auto path = base.out_dir / (base.name + ".compare.csv");
  favano::write_text_file(path, favano::comparison_csv(runs, grid));
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulator for asynchronous federated learning"};
  app.require_subcommand(1);

  ConfigSources run_src;
  auto* run = app.add_subcommand("run", "Run one experiment, write metrics CSV and manifest");
  add_config_options(*run, run_src);

  std::string suite;
  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "Run property suites");
  verify->add_option("suite", suite, "estimators | potential | timing | all")->required();
  verify->add_option("--seed", verify_seed, "Master seed");

  ConfigSources cmp_src;
  std::vector<std::string> methods;
  double step = 0.0;
  auto* compare = app.add_subcommand("compare", "Run several methods on one shared config");
  compare->add_option("--methods", methods, "Comma separated methods")->delimiter(',')->required();
  compare->add_option("--grid-step", step, "Sim-time grid step (default: one async round)");
  add_config_options(*compare, cmp_src);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_src);
    if (verify->parsed()) return cmd_verify(suite, verify_seed);
    if (compare->parsed()) return cmd_compare(cmp_src, methods, step);
  } catch (const favano::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const favano::IdxError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitIo;
  } catch (const favano::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const favano::ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
