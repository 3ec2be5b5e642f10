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

#ifndef FAVANO_CONFIG_HPP
#define FAVANO_CONFIG_HPP

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "favano/sim.hpp"

namespace favano {

/// Everything a `run` invocation needs: the experiment plus where to write.
struct RunConfig {
  ExperimentConfig experiment;
  std::string name = "run";
  std::filesystem::path out_dir = ".";
};

/// Sets one key (see `config_keys()`); throws ConfigError naming the key.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// key=value lines; blank lines and lines starting with '#' are skipped.
void apply_config_text(RunConfig& config, const std::string& text);

/// Recognised keys in canonical order.
std::span<const char* const> config_keys();

/// Canonical key/value echo of the experiment; applying it to a default
/// RunConfig reproduces the experiment exactly.
std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& config);

std::vector<std::string> preset_names();
/// Throws ConfigError("preset", ...) for unknown names.
RunConfig make_preset(const std::string& name);

/// JSON manifest: config echo, seed, code version, run summary.
std::string manifest_json(const RunConfig& config, const ProtocolRun& run);
/// Reads the config echo back out of a manifest.
RunConfig config_from_manifest(const std::string& manifest_text);

/// Last-value-carried-forward resampling of each run's records onto
/// sim_time = 0, step, 2 step, ... up to the largest final sim_time.
std::string comparison_csv(std::span<const ProtocolRun> runs, double step);

/// Version string compiled into manifests.
const char* code_version();

}  // namespace favano

#endif  // FAVANO_CONFIG_HPP
