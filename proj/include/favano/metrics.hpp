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

#ifndef FAVANO_METRICS_HPP
#define FAVANO_METRICS_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "favano/param_vector.hpp"
#include "favano/problem.hpp"
#include "favano/reweighting.hpp"
#include "favano/step_distribution.hpp"

namespace favano {

struct MetricsRecord {
  std::size_t t = 0;
  double sim_time = 0.0;
  double f_mu = 0.0;
  double grad_norm_sq = 0.0;
  double phi = 0.0;
  std::optional<double> test_loss;
  std::optional<double> test_acc;
  double model_variance = 0.0;
};

/// (w_server + sum_i w^i) / (n + 1)
ParamVector mean_model(const ParamVector& w_server, std::span<const ParamVector> clients);

/// |w_server - mu|^2 + sum_i |w^i - mu|^2 around the mean model mu.
double potential(const ParamVector& w_server, std::span<const ParamVector> clients);

/// sum_i |w^i - w_server|^2, the dispersion around the server model.
double model_variance(const ParamVector& w_server, std::span<const ParamVector> clients);

/// Objective, exact gradient norm and dispersion at the mean model; test
/// metrics of the server model when `evaluate` is set and a test set exists.
MetricsRecord compute_metrics(std::size_t t, double sim_time, const Problem& problem,
                              const ParamVector& w_server, std::span<const ParamVector> clients,
                              bool evaluate = true);

/// kappa = s (n - s) / (2 n (n + 1) (s + 1)); zero when s == n.
double contraction_rate(std::size_t n, std::size_t s);

struct ContractionSetup {
  std::span<const StepCountDistribution> dists;  // one per client
  ReweightMode mode = ReweightMode::deterministic;
  std::size_t s = 1;
  double eta = 0.0;
  std::size_t trials = 10'000;
  std::uint64_t seed = 0;
};

struct ContractionReport {
  double phi = 0.0;
  double kappa = 0.0;
  double mean_next_phi = 0.0;
  double next_phi_se = 0.0;
  /// Monte-Carlo estimate of sum_i E|h_i|^2 for the reweighted progress h_i.
  double mean_progress_sq = 0.0;
  double bound = 0.0;
  /// Mean and standard error of next_phi - per-trial bound.
  double mean_slack = 0.0;
  double slack_se = 0.0;
  bool holds = false;
};

/// One server round from a fixed state, repeated `trials` times: every client
/// draws its step count, walks its local SGD path and reweights it; a random
/// subset of s clients is averaged with the server. Checks
///   E[Phi'] <= (1 - kappa) Phi + 3 (s^2 / n) eta^2 sum_i E|h_i|^2
/// up to three standard errors of the per-trial difference.
ContractionReport check_potential_contraction(const ParamVector& w_server,
                                              std::span<const ParamVector> clients,
                                              const Problem& problem,
                                              const ContractionSetup& setup);

/// Column order of the metrics CSV.
inline constexpr const char* kMetricsHeader =
    "t,sim_time,f_mu,grad_norm_sq,phi,test_loss,test_acc,model_variance";

std::string metrics_csv(std::span<const MetricsRecord> records);
/// Writes `metrics_csv(records)`; throws IoError naming the path on failure.
void write_metrics(std::span<const MetricsRecord> records, const std::filesystem::path& path);
std::vector<MetricsRecord> parse_metrics_csv(const std::string& text);
std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path);

/// Text helpers shared with the other writers.
std::string format_real(double value);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace favano

#endif  // FAVANO_METRICS_HPP
