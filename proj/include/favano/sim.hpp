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

#ifndef FAVANO_SIM_HPP
#define FAVANO_SIM_HPP

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "favano/dataset.hpp"
#include "favano/errors.hpp"
#include "favano/metrics.hpp"
#include "favano/problem.hpp"
#include "favano/protocols.hpp"
#include "favano/reweighting.hpp"
#include "favano/rng.hpp"

namespace favano {

enum class SpeedClass { fast, slow };

/// A client's compute speed: each local step lasts Geometric(lambda) time
/// units on {1, 2, ...}, so a step takes 1 / lambda units on average.
struct SpeedModel {
  SpeedClass cls = SpeedClass::fast;
  double lambda = 0.5;

  double sample_step_duration(Rng& rng) const;
};

/// Simulated clock. `now` only moves forward, one duration per round.
struct ClockLedger {
  double now = 0.0;
  double server_wait = 4.0;
  double server_interact = 3.0;
  std::vector<double> durations;

  void advance(double duration);
};

/// s distinct ids drawn uniformly from {0, ..., n-1}, returned sorted.
std::vector<std::size_t> sample_selection(std::size_t n, std::size_t s, Rng& rng);

/// Local steps finished within `window` time units, clipped at K.
int elapse_steps(const SpeedModel& speed, double window, int K, Rng& rng);

enum class Method { favano, quafl, fedavg, fedbuff };

const char* to_string(Method m);
Method parse_method(const std::string& name);

/// Inputs that only some methods' round timing depends on.
struct RoundTiming {
  std::span<const SpeedModel> selected;  // fedavg
  int K = 0;                             // fedavg
  std::span<const double> arrivals;      // fedbuff: offsets from round start
  std::size_t buffer_size = 0;           // fedbuff
};

/// favano, quafl: interact + wait.
/// fedavg: interact + K * (slowest sampled per-step duration among selected).
/// fedbuff: interact + offset of the buffer_size-th earliest arrival.
double round_duration(Method method, const ClockLedger& ledger, const RoundTiming& timing,
                      Rng& rng);

/// floor(n * (1 - fast_fraction)) slow clients, placed by a seeded shuffle.
std::vector<SpeedModel> assign_speeds(std::size_t n, double fast_fraction, double lambda_fast,
                                      double lambda_slow, std::uint64_t seed);

enum class ProblemKind { quadratic, logistic, mlp };
enum class DataSource { synthetic, idx };

struct ProblemConfig {
  ProblemKind kind = ProblemKind::quadratic;
  double noise_sigma = 0.0;
  // quadratic
  std::size_t dim = 5;
  double spread = 1.0;
  // dataset problems
  DataSource source = DataSource::synthetic;
  SplitMode split = SplitMode::iid;
  std::size_t samples_per_client = 100;
  std::size_t test_samples = 2000;
  std::size_t features = 20;
  int classes = 10;
  double separation = 1.0;
  std::size_t hidden = 32;
  std::size_t batch_size = 0;
  std::string data_dir;
};

/// How many local steps a contacted client has completed.
/// time_based: derived from the simulated time since its last contact.
/// direct:     drawn from clipped_geometric(lambda, K) at each contact.
/// full:       always K.
enum class StepMode { time_based, direct, full };

/// Source of the step-count law behind alpha in time_based mode.
/// exact: contact_step_distribution; empirical: running histogram of
/// observed counts, starting from a point mass at K.
enum class AlphaSource { exact, empirical };

struct ExperimentConfig {
  Method method = Method::favano;
  std::size_t n = 10;
  std::size_t s = 3;
  int K = 5;
  double eta = 0.01;
  double eta_server = 1.0;
  ReweightMode reweight = ReweightMode::deterministic;
  double time_budget = 700.0;
  std::optional<std::size_t> max_rounds;
  std::uint64_t seed = 1;
  ProblemConfig problem;
  double fast_fraction = 2.0 / 3.0;
  double lambda_fast = 0.5;
  double lambda_slow = 1.0 / 16.0;
  std::size_t buffer_size = 10;
  double server_wait = 4.0;
  double server_interact = 3.0;
  StepMode step_mode = StepMode::time_based;
  AlphaSource alpha_source = AlphaSource::exact;
  std::size_t eval_every = 1;
  bool record_trace = false;
  // FAVANO reduction harness only.
  std::optional<double> alpha_override;
  Aggregation aggregation = Aggregation::favano;
};

/// Every invalid field, in declaration order.
std::vector<ConfigError> validation_errors(const ExperimentConfig& config);
/// Throws the first entry of validation_errors.
void validate(const ExperimentConfig& config);

/// Builds the objective for n clients. Data and centres come from streams of
/// `seed` that do not depend on the method.
std::unique_ptr<Problem> build_problem(const ProblemConfig& config, std::size_t n,
                                       std::uint64_t seed);

struct TraceRecord {
  std::size_t t = 0;
  double sim_time = 0.0;
  std::vector<std::size_t> selected;
  std::vector<int> steps;
  std::vector<double> payload_norms;
};

struct ProtocolRun {
  ExperimentConfig config;
  std::vector<SpeedModel> speeds;
  std::vector<MetricsRecord> records;
  std::vector<TraceRecord> trace;
  std::vector<double> round_durations;
  std::size_t rounds = 0;
  ParamVector final_server;
};

/// One JSON object per line: t, sim_time, selected, steps, payload_norms.
std::string trace_jsonl(std::span<const TraceRecord> trace);

ProtocolRun run_experiment(const ExperimentConfig& config);
ProtocolRun run_experiment(const ExperimentConfig& config, const Problem& problem);

}  // namespace favano

#endif  // FAVANO_SIM_HPP
