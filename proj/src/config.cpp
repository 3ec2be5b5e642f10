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

#include "favano/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "favano/errors.hpp"
#include "favano/metrics.hpp"
#include "json.hpp"

#ifndef FAVANO_VERSION
#define FAVANO_VERSION "0.0.0"
#endif

namespace favano {

const char* code_version() { return FAVANO_VERSION; }

namespace {

constexpr std::array<const char*, 36> kKeys = {
    "method",      "n",          "s",           "K",
    "eta",         "eta_server", "reweight",    "time_budget",
    "rounds",      "seed",       "problem",     "noise_sigma",
    "dim",         "spread",     "data",        "split",
    "samples_per_client",        "test_samples", "features",
    "classes",     "separation", "hidden",      "batch_size",
    "data_dir",    "fast_fraction",             "lambda_fast",
    "lambda_slow", "buffer_size", "server_wait", "server_interact",
    "step_mode",   "alpha_source", "eval_every", "trace",
    "name",        "out_dir"};

std::string trim(std::string text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

double parse_real(const std::string& key, const std::string& value) {
  if (value == "inf") return std::numeric_limits<double>::infinity();
  const auto slash = value.find('/');
  if (slash != std::string::npos) {
    return parse_real(key, value.substr(0, slash)) / parse_real(key, value.substr(slash + 1));
  }
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key, "expected a number, got '" + value + "'");
  return out;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw ConfigError(key, "expected true/false, got '" + value + "'");
}

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& key, const std::string& value,
                const std::array<std::pair<const char*, Enum>, N>& names) {
  for (const auto& [name, e] : names) {
    if (value == name) return e;
  }
  std::string allowed;
  for (const auto& entry : names) allowed += std::string(allowed.empty() ? "" : "|") + entry.first;
  throw ConfigError(key, "expected one of " + allowed + ", got '" + value + "'");
}

template <typename Enum, std::size_t N>
std::string enum_name(Enum e, const std::array<std::pair<const char*, Enum>, N>& names) {
  for (const auto& [name, value] : names) {
    if (value == e) return name;
  }
  return names.front().first;
}

constexpr std::array<std::pair<const char*, ReweightMode>, 2> kReweight = {
    {{"deterministic", ReweightMode::deterministic}, {"stochastic", ReweightMode::stochastic}}};
constexpr std::array<std::pair<const char*, ProblemKind>, 3> kProblem = {
    {{"quadratic", ProblemKind::quadratic},
     {"logistic", ProblemKind::logistic},
     {"mlp", ProblemKind::mlp}}};
constexpr std::array<std::pair<const char*, DataSource>, 2> kData = {
    {{"synthetic", DataSource::synthetic}, {"idx", DataSource::idx}}};
constexpr std::array<std::pair<const char*, SplitMode>, 2> kSplit = {
    {{"iid", SplitMode::iid}, {"two-class", SplitMode::two_class}}};
constexpr std::array<std::pair<const char*, StepMode>, 3> kStepMode = {
    {{"time", StepMode::time_based}, {"direct", StepMode::direct}, {"full", StepMode::full}}};
constexpr std::array<std::pair<const char*, AlphaSource>, 2> kAlphaSource = {
    {{"exact", AlphaSource::exact}, {"empirical", AlphaSource::empirical}}};

std::string real_text(double v) {
  if (std::isinf(v)) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::span<const char* const> config_keys() { return kKeys; }

void apply_setting(RunConfig& config, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  auto& e = config.experiment;
  auto& p = e.problem;
  if (key == "method") e.method = parse_method(value);
  else if (key == "n") e.n = parse_unsigned(key, value);
  else if (key == "s") e.s = parse_unsigned(key, value);
  else if (key == "K") e.K = static_cast<int>(parse_unsigned(key, value));
  else if (key == "eta") e.eta = parse_real(key, value);
  else if (key == "eta_server") e.eta_server = parse_real(key, value);
  else if (key == "reweight") e.reweight = parse_enum(key, value, kReweight);
  else if (key == "time_budget") e.time_budget = parse_real(key, value);
  else if (key == "rounds") {
    if (value.empty() || value == "none") e.max_rounds.reset();
    else e.max_rounds = parse_unsigned(key, value);
  }
  else if (key == "seed") e.seed = parse_unsigned(key, value);
  else if (key == "problem") p.kind = parse_enum(key, value, kProblem);
  else if (key == "noise_sigma") p.noise_sigma = parse_real(key, value);
  else if (key == "dim") p.dim = parse_unsigned(key, value);
  else if (key == "spread") p.spread = parse_real(key, value);
  else if (key == "data") p.source = parse_enum(key, value, kData);
  else if (key == "split") p.split = parse_enum(key, value, kSplit);
  else if (key == "samples_per_client") p.samples_per_client = parse_unsigned(key, value);
  else if (key == "test_samples") p.test_samples = parse_unsigned(key, value);
  else if (key == "features") p.features = parse_unsigned(key, value);
  else if (key == "classes") p.classes = static_cast<int>(parse_unsigned(key, value));
  else if (key == "separation") p.separation = parse_real(key, value);
  else if (key == "hidden") p.hidden = parse_unsigned(key, value);
  else if (key == "batch_size") p.batch_size = parse_unsigned(key, value);
  else if (key == "data_dir") p.data_dir = value;
  else if (key == "fast_fraction") e.fast_fraction = parse_real(key, value);
  else if (key == "lambda_fast") e.lambda_fast = parse_real(key, value);
  else if (key == "lambda_slow") e.lambda_slow = parse_real(key, value);
  else if (key == "buffer_size" || key == "Z") e.buffer_size = parse_unsigned("buffer_size", value);
  else if (key == "server_wait") e.server_wait = parse_real(key, value);
  else if (key == "server_interact") e.server_interact = parse_real(key, value);
  else if (key == "step_mode") e.step_mode = parse_enum(key, value, kStepMode);
  else if (key == "alpha_source") e.alpha_source = parse_enum(key, value, kAlphaSource);
  else if (key == "eval_every") e.eval_every = parse_unsigned(key, value);
  else if (key == "trace") e.record_trace = parse_bool(key, value);
  else if (key == "name") config.name = value;
  else if (key == "out_dir") config.out_dir = value;
  else throw ConfigError(key, "unknown key");
}

void apply_config_text(RunConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number), "expected key=value, got '" + line + "'");
    }
    apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
  }
}

std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& e) {
  const auto& p = e.problem;
  return {
      {"method", to_string(e.method)},
      {"n", std::to_string(e.n)},
      {"s", std::to_string(e.s)},
      {"K", std::to_string(e.K)},
      {"eta", real_text(e.eta)},
      {"eta_server", real_text(e.eta_server)},
      {"reweight", enum_name(e.reweight, kReweight)},
      {"time_budget", real_text(e.time_budget)},
      {"rounds", e.max_rounds ? std::to_string(*e.max_rounds) : "none"},
      {"seed", std::to_string(e.seed)},
      {"problem", enum_name(p.kind, kProblem)},
      {"noise_sigma", real_text(p.noise_sigma)},
      {"dim", std::to_string(p.dim)},
      {"spread", real_text(p.spread)},
      {"data", enum_name(p.source, kData)},
      {"split", enum_name(p.split, kSplit)},
      {"samples_per_client", std::to_string(p.samples_per_client)},
      {"test_samples", std::to_string(p.test_samples)},
      {"features", std::to_string(p.features)},
      {"classes", std::to_string(p.classes)},
      {"separation", real_text(p.separation)},
      {"hidden", std::to_string(p.hidden)},
      {"batch_size", std::to_string(p.batch_size)},
      {"data_dir", p.data_dir},
      {"fast_fraction", real_text(e.fast_fraction)},
      {"lambda_fast", real_text(e.lambda_fast)},
      {"lambda_slow", real_text(e.lambda_slow)},
      {"buffer_size", std::to_string(e.buffer_size)},
      {"server_wait", real_text(e.server_wait)},
      {"server_interact", real_text(e.server_interact)},
      {"step_mode", enum_name(e.step_mode, kStepMode)},
      {"alpha_source", enum_name(e.alpha_source, kAlphaSource)},
      {"eval_every", std::to_string(e.eval_every)},
      {"trace", e.record_trace ? "true" : "false"},
  };
}

namespace {

// theorem_step_size for unit-curvature quadratics (L = 1, B^2 = 1) under the
// deterministic reweighting, with b taken over the speed classes present.
double quadratic_step_size(const ExperimentConfig& e) {
  const double contact = static_cast<double>(e.s) / static_cast<double>(e.n);
  std::vector<StepCountDistribution> dists;
  std::vector<double> lambdas;
  if (e.fast_fraction > 0.0) lambdas.push_back(e.lambda_fast);
  if (e.fast_fraction < 1.0) lambdas.push_back(e.lambda_slow);
  for (double lambda : lambdas) {
    switch (e.step_mode) {
      case StepMode::time_based:
        dists.push_back(contact_step_distribution(lambda, e.server_wait + e.server_interact,
                                                  contact, e.K));
        break;
      case StepMode::direct: dists.push_back(clipped_geometric(lambda, e.K)); break;
      case StepMode::full: dists.push_back(StepCountDistribution::point_mass(e.K, e.K)); break;
    }
  }
  const auto constants = theorem_constants(e.reweight, dists);
  return theorem_step_size(1.0, constants.b, e.K, 1.0, static_cast<int>(e.s));
}

std::string default_mnist_dir() {
  if (const char* dir = std::getenv("FAVANO_MNIST_DIR")) return dir;
  return "data/mnist";
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"quadratic-smoke", "quadratic-convergence", "logistic-noniid-slowmajority",
          "mnist-iid", "mnist-noniid", "mnist-noniid-slowmajority"};
}

RunConfig make_preset(const std::string& name) {
  RunConfig config;
  config.name = name;
  auto& e = config.experiment;
  auto& p = e.problem;
  if (name == "quadratic-smoke") {
    e.n = 10;
    e.s = 3;
    e.K = 5;
    e.time_budget = 700;
    p.kind = ProblemKind::quadratic;
    p.dim = 5;
    p.noise_sigma = 0.1;
    e.eta = quadratic_step_size(e);
  } else if (name == "quadratic-convergence") {
    e.n = 10;
    e.s = 3;
    e.K = 2;
    e.step_mode = StepMode::direct;
    e.fast_fraction = 1.0;
    e.time_budget = std::numeric_limits<double>::infinity();
    e.max_rounds = 2000;
    p.kind = ProblemKind::quadratic;
    p.dim = 5;
    p.noise_sigma = 0.1;
    e.eta = quadratic_step_size(e);
  } else if (name == "logistic-noniid-slowmajority") {
    e.n = 100;
    e.s = 20;
    e.K = 20;
    e.fast_fraction = 1.0 / 9.0;
    e.time_budget = 1400;
    e.eta = 0.5;
    e.eval_every = 10;
    p.kind = ProblemKind::logistic;
    p.split = SplitMode::two_class;
    p.features = 20;
    p.classes = 10;
    p.samples_per_client = 100;
    p.test_samples = 2000;
    p.separation = 1.0;
    p.batch_size = 16;
  } else if (name == "mnist-iid" || name == "mnist-noniid" || name == "mnist-noniid-slowmajority") {
    e.n = 100;
    e.s = 20;
    e.K = 20;
    e.eta = 0.5;
    e.time_budget = 5000;
    e.eval_every = 20;
    e.fast_fraction = name == "mnist-noniid-slowmajority" ? 1.0 / 9.0 : 2.0 / 3.0;
    p.kind = ProblemKind::mlp;
    p.source = DataSource::idx;
    p.split = name == "mnist-iid" ? SplitMode::iid : SplitMode::two_class;
    p.hidden = 32;
    p.batch_size = 128;
    p.data_dir = default_mnist_dir();
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "'");
  }
  return config;
}

std::string manifest_json(const RunConfig& config, const ProtocolRun& run) {
  nlohmann::ordered_json config_json = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config_echo(config.experiment)) config_json[key] = value;
  nlohmann::ordered_json out;
  out["name"] = config.name;
  out["code_version"] = code_version();
  out["seed"] = config.experiment.seed;
  out["config"] = config_json;
  out["rounds"] = run.rounds;
  out["final_sim_time"] = run.records.empty() ? 0.0 : run.records.back().sim_time;
  std::size_t slow = 0;
  for (const auto& sp : run.speeds) slow += sp.cls == SpeedClass::slow ? 1 : 0;
  out["slow_clients"] = slow;
  return out.dump(2) + "\n";
}

RunConfig config_from_manifest(const std::string& manifest_text) {
  const auto manifest = nlohmann::json::parse(manifest_text);
  RunConfig config;
  if (manifest.contains("name")) config.name = manifest["name"].get<std::string>();
  for (const auto& [key, value] : manifest.at("config").items()) {
    apply_setting(config, key, value.get<std::string>());
  }
  return config;
}

std::string comparison_csv(std::span<const ProtocolRun> runs, double step) {
  require(step > 0.0, "comparison_csv: step must be > 0");
  std::string out = "sim_time";
  double horizon = 0.0;
  for (const auto& run : runs) {
    const std::string m = to_string(run.config.method);
    out += "," + m + "_round," + m + "_f_mu," + m + "_grad_norm_sq," + m + "_test_loss," + m +
           "_test_acc," + m + "_model_variance";
    if (!run.records.empty()) horizon = std::max(horizon, run.records.back().sim_time);
  }
  out += '\n';
  std::vector<std::size_t> cursor(runs.size(), 0);
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  const auto points = static_cast<std::size_t>(std::floor(horizon / step + 1e-9));
  for (std::size_t g = 0; g <= points; ++g) {
    const double when = static_cast<double>(g) * step;
    out += format_real(when);
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const auto& recs = runs[r].records;
      while (cursor[r] + 1 < recs.size() && recs[cursor[r] + 1].sim_time <= when + 1e-9) ++cursor[r];
      if (recs.empty()) {
        out += ",,,,,,";
        continue;
      }
      const auto& rec = recs[cursor[r]];
      out += "," + std::to_string(rec.t) + "," + format_real(rec.f_mu) + "," +
             format_real(rec.grad_norm_sq) + "," + opt(rec.test_loss) + "," + opt(rec.test_acc) +
             "," + format_real(rec.model_variance);
    }
    out += '\n';
  }
  return out;
}

}  // namespace favano
