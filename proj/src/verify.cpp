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

#include "favano/verify.hpp"

#include <cmath>
#include <cstdio>

#include "favano/errors.hpp"
#include "favano/metrics.hpp"
#include "favano/reweighting.hpp"
#include "favano/sim.hpp"

namespace favano {

namespace {

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Monte-Carlo mean of the reweighted stopped sum with Y ~ N(y_mean, y_var).
std::pair<double, double> stopped_sum_mc(ReweightMode mode, const StepCountDistribution& dist,
                                         double y_mean, double y_var, std::size_t trials,
                                         Rng& rng) {
  std::normal_distribution<double> y(y_mean, std::sqrt(y_var));
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k < trials; ++k) {
    const int steps = dist.sample(rng);
    double acc = 0.0;
    for (int q = 0; q < steps; ++q) acc += y(rng);
    const auto a = alpha(mode, dist, steps);
    const double m = a ? acc / *a : 0.0;
    sum += m;
    sum_sq += m * m;
  }
  const double n = static_cast<double>(trials);
  const double mean = sum / n;
  const double var = (sum_sq - n * mean * mean) / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

void estimators(std::vector<CheckResult>& out, std::uint64_t seed) {
  const auto dist = clipped_geometric(1.0 / 16.0, 20);
  for (auto mode : {ReweightMode::stochastic, ReweightMode::deterministic}) {
    Rng rng = make_stream(seed, "verify/unbiased", static_cast<std::uint64_t>(mode));
    const auto [mean, se] = stopped_sum_mc(mode, dist, 1.0, 4.0, 100'000, rng);
    out.push_back({"estimators", std::string("unbiased mean, ") + to_string(mode),
                   std::abs(mean - 1.0) <= 4.0 * se, num(mean) + " (se " + num(se) + ")",
                   "1 within 4 se"});
  }

  const StepCountDistribution uniform({1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto det = stopped_sum_mean_var(ReweightMode::deterministic, uniform, 1.0, 0.0);
  const auto sto = stopped_sum_mean_var(ReweightMode::stochastic, uniform, 1.0, 0.0);
  out.push_back({"estimators", "variance uniform{0,1,2}, deterministic",
                 std::abs(det.variance - 2.0 / 3.0) < 1e-12, num(det.variance), "2/3"});
  out.push_back({"estimators", "variance uniform{0,1,2}, stochastic",
                 std::abs(sto.variance - 0.5) < 1e-12, num(sto.variance), "1/2"});

  {
    Rng rng = make_stream(seed, "verify/variance");
    const auto [mean, se] = stopped_sum_mc(ReweightMode::stochastic, dist, 1.0, 4.0, 100'000, rng);
    (void)mean;
    const double predicted = stopped_sum_mean_var(ReweightMode::stochastic, dist, 1.0, 4.0).variance;
    const double measured = se * se * 100'000.0;
    out.push_back({"estimators", "variance clipped_geometric(1/16,20), stochastic",
                   std::abs(measured - predicted) <= 0.05 * predicted, num(measured),
                   num(predicted) + " within 5%"});
  }

  const int K = 20;
  const std::vector<StepCountDistribution> point{StepCountDistribution::point_mass(K, K)};
  const auto cd = theorem_constants(ReweightMode::deterministic, point);
  const auto cs = theorem_constants(ReweightMode::stochastic, point);
  out.push_back({"estimators", "theorem constants, point mass, deterministic",
                 cd.a[0] == 2.0 / K && cd.b == K, "a=" + num(cd.a[0]) + " b=" + num(cd.b),
                 "a=2/K b=K"});
  out.push_back({"estimators", "theorem constants, point mass, stochastic",
                 std::abs(cs.a[0] - (1.0 / (K * K) + 1.0 / K)) < 1e-15 && cs.b == 1.0,
                 "a=" + num(cs.a[0]) + " b=" + num(cs.b), "a=1/K^2+1/K b=1"});
}

void potential_suite(std::vector<CheckResult>& out, std::uint64_t seed) {
  const std::size_t n = 10, s = 3;
  const int K = 5;
  Rng problem_rng = make_stream(seed, "verify/potential-problem");
  const auto problem = make_heterogeneous_quadratic(n, 5, 1.0, 0.1, problem_rng);
  std::vector<StepCountDistribution> dists;
  for (std::size_t i = 0; i < n; ++i) dists.push_back(clipped_geometric(i % 3 == 0 ? 1.0 / 16 : 0.5, K));
  const auto constants = theorem_constants(ReweightMode::deterministic, dists);
  const double eta = theorem_step_size(1.0, constants.b, K, 1.0, static_cast<int>(s));

  Rng state_rng = make_stream(seed, "verify/potential-states");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t state = 0; state < 5; ++state) {
    ParamVector server(5);
    for (double& v : server.values()) v = normal(state_rng);
    std::vector<ParamVector> clients(n, ParamVector(5));
    for (auto& c : clients) for (double& v : c.values()) v = normal(state_rng);
    ContractionSetup setup{dists, ReweightMode::deterministic, s, eta, 10'000,
                           derive_seed(seed, "verify/potential-mc", state)};
    const auto report = check_potential_contraction(server, clients, *problem, setup);
    out.push_back({"potential", "contraction, state " + std::to_string(state), report.holds,
                   "E[phi']=" + num(report.mean_next_phi),
                   "<= " + num(report.bound) + " (+3 se)"});
  }
}

void timing(std::vector<CheckResult>& out, std::uint64_t seed) {
  ExperimentConfig config;
  config.method = Method::favano;
  config.time_budget = 700;
  config.seed = seed;
  const auto run = run_experiment(config);
  bool constant = !run.round_durations.empty();
  for (double d : run.round_durations) constant = constant && d == 7.0;
  out.push_back({"timing", "favano rounds last 7 units", constant,
                 std::to_string(run.round_durations.size()) + " rounds", "all equal 7"});

  ClockLedger ledger;
  Rng rng = make_stream(seed, "verify/fedavg-timing");
  const SpeedModel fast{SpeedClass::fast, 0.5};
  RoundTiming t;
  t.selected = std::span<const SpeedModel>(&fast, 1);
  t.K = 20;
  double total = 0.0;
  const std::size_t rounds = 100'000;
  for (std::size_t k = 0; k < rounds; ++k) total += round_duration(Method::fedavg, ledger, t, rng);
  const double mean = total / static_cast<double>(rounds);
  out.push_back({"timing", "fedavg mean round, one fast client", std::abs(mean - 43.0) <= 0.43,
                 num(mean), "43 within 1%"});
}

}  // namespace

std::vector<std::string> verify_suite_names() { return {"estimators", "potential", "timing", "all"}; }

std::vector<CheckResult> run_verify_suite(const std::string& suite, std::uint64_t seed) {
  std::vector<CheckResult> out;
  if (suite == "estimators" || suite == "all") estimators(out, seed);
  if (suite == "potential" || suite == "all") potential_suite(out, seed);
  if (suite == "timing" || suite == "all") timing(out, seed);
  if (out.empty()) throw ConfigError("suite", "unknown suite '" + suite + "'");
  return out;
}

}  // namespace favano
