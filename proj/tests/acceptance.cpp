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

// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "favano/config.hpp"
#include "favano/metrics.hpp"
#include "favano/reweighting.hpp"
#include "favano/rng.hpp"
#include "favano/sim.hpp"
#include "favano/step_distribution.hpp"

using namespace favano;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Moments of a pmf over {0..K} by direct enumeration.
struct Moments {
  double p_pos = 0, m1 = 0, m2 = 0, inv_pos = 0;
};

Moments enumerate(const std::vector<double>& pmf) {
  Moments m;
  for (std::size_t k = 1; k < pmf.size(); ++k) {
    m.p_pos += pmf[k];
    m.m1 += k * pmf[k];
    m.m2 += double(k * k) * pmf[k];
    m.inv_pos += pmf[k] / k;
  }
  return m;
}

std::vector<double> geometric_pmf(double lambda, int K) {
  std::vector<double> pmf(K + 1, 0.0);
  double survive = 1.0;
  for (int k = 1; k < K; ++k) {
    pmf[k] = survive * lambda;
    survive -= pmf[k];
  }
  pmf[K] = survive;
  return pmf;
}

// Variance of the reweighted stopped sum by conditioning on the step count.
double enumerated_variance(ReweightMode mode, const std::vector<double>& pmf, double mu,
                           double sigma2) {
  const Moments m = enumerate(pmf);
  double first = 0.0, second = 0.0;
  for (std::size_t k = 1; k < pmf.size(); ++k) {
    const double scale = mode == ReweightMode::deterministic ? m.m1 : m.p_pos * k;
    const double cond_mean = k * mu / scale;
    const double cond_var = k * sigma2 / (scale * scale);
    first += pmf[k] * cond_mean;
    second += pmf[k] * (cond_var + cond_mean * cond_mean);
  }
  return second - first * first;
}

Outcome estimator_unbiasedness() {
  const auto start = std::chrono::steady_clock::now();
  const auto dist = clipped_geometric(1.0 / 16.0, 20);
  Rng rng = make_stream(1, "acceptance/unbiased");
  std::normal_distribution<double> y(1.0, 2.0);
  const int trials = 100'000;
  bool ok = true;
  std::string detail;
  for (auto mode : {ReweightMode::deterministic, ReweightMode::stochastic}) {
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < trials; ++t) {
      const int e = dist.sample(rng);
      double s = 0.0;
      for (int j = 0; j < e; ++j) s += y(rng);
      const auto a = alpha(mode, dist, e);
      const double x = a ? s / *a : 0.0;
      sum += x;
      sum_sq += x * x;
    }
    const double mean = sum / trials;
    const double se = std::sqrt((sum_sq / trials - mean * mean) / (trials - 1));
    const double z = std::abs(mean - 1.0) / se;
    ok = ok && z <= 4.0;
    detail += fmt("%s mean %.5f (%.2f se); ", to_string(mode), mean, z);
  }
  const double took = seconds_since(start);
  ok = ok && took < 5.0;
  return {ok, detail + fmt("%.2f s", took)};
}

Outcome variance_closed_forms() {
  struct Case {
    std::vector<double> pmf;
    double mu, sigma2;
  };
  std::vector<Case> cases{{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0, 0.0}};
  Rng rng = make_stream(1, "acceptance/variance");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (cases.size() < 20) {
    const int K = 1 + static_cast<int>(u(rng) * 20);
    std::vector<double> pmf(K + 1);
    for (double& p : pmf) p = u(rng);
    if (cases.size() % 2 == 0) pmf[0] = 0.0;
    const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
    for (double& p : pmf) p /= total;
    cases.push_back({pmf, 4.0 * u(rng) - 2.0, 3.0 * u(rng)});
  }
  double worst = 0.0;
  for (const auto& c : cases) {
    const StepCountDistribution dist(c.pmf);
    for (auto mode : {ReweightMode::deterministic, ReweightMode::stochastic}) {
      const double got = stopped_sum_mean_var(mode, dist, c.mu, c.sigma2).variance;
      const double want = enumerated_variance(mode, c.pmf, c.mu, c.sigma2);
      worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-300));
    }
  }
  const StepCountDistribution uniform({1.0 / 3, 1.0 / 3, 1.0 / 3});
  const double det = stopped_sum_mean_var(ReweightMode::deterministic, uniform, 1.0, 0.0).variance;
  const double sto = stopped_sum_mean_var(ReweightMode::stochastic, uniform, 1.0, 0.0).variance;
  const bool worked = std::abs(det - 2.0 / 3.0) <= 1e-10 * (2.0 / 3.0) &&
                      std::abs(sto - 0.5) <= 1e-10 * 0.5;
  return {worst <= 1e-10 && worked,
          fmt("20 cases, max rel err %.2e; uniform{0,1,2}: det %.15g, stoch %.15g", worst, det, sto)};
}

Outcome potential_contraction() {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = 10, s = 3, d = 5;
  const int K = 5;
  Rng problem_rng = make_stream(1, "acceptance/potential-problem");
  const auto problem = make_heterogeneous_quadratic(n, d, 1.0, 0.1, problem_rng);
  std::vector<StepCountDistribution> dists;
  for (std::size_t i = 0; i < n; ++i) dists.push_back(clipped_geometric(i % 3 == 0 ? 1.0 / 16 : 0.5, K));
  const auto constants = theorem_constants(ReweightMode::deterministic, dists);
  const double eta = theorem_step_size(1.0, constants.b, K, 1.0, static_cast<int>(s));

  Rng state_rng = make_stream(1, "acceptance/potential-states");
  std::normal_distribution<double> normal(0.0, 1.0);
  int held = 0;
  double worst_z = -std::numeric_limits<double>::infinity();
  for (std::size_t state = 0; state < 50; ++state) {
    const double scale = 0.1 + 2.0 * std::abs(normal(state_rng));
    ParamVector server(d);
    for (double& v : server.values()) v = scale * normal(state_rng);
    std::vector<ParamVector> clients(n, ParamVector(d));
    for (auto& c : clients) {
      for (double& v : c.values()) v = scale * normal(state_rng);
    }
    const ContractionSetup setup{dists, ReweightMode::deterministic, s, eta, 10'000,
                                 derive_seed(1, "acceptance/potential-mc", state)};
    const auto report = check_potential_contraction(server, clients, *problem, setup);
    held += report.holds ? 1 : 0;
    if (report.slack_se > 0) worst_z = std::max(worst_z, report.mean_slack / report.slack_se);
  }
  const double took = seconds_since(start);
  return {held >= 48 && took < 60.0,
          fmt("%d/50 states within 3 se (eta %.3g, worst slack %.2f se), %.1f s", held, eta, worst_z, took)};
}

Outcome theorem_constants_sanity() {
  bool ok = true;
  for (int K : {1, 2, 5, 20}) {
    std::vector<StepCountDistribution> at_k{StepCountDistribution::point_mass(K, K)};
    const auto det = theorem_constants(ReweightMode::deterministic, at_k);
    const auto sto = theorem_constants(ReweightMode::stochastic, at_k);
    ok = ok && det.a[0] == 2.0 / K && det.b == K;
    ok = ok && sto.a[0] == 1.0 / (double(K) * K) + 1.0 / K && sto.b == 1.0;
  }
  double worst = 0.0;
  for (double lambda : {1.0 / 16, 0.5, 0.3}) {
    for (int K : {5, 20}) {
      const Moments m = enumerate(geometric_pmf(lambda, K));
      std::vector<StepCountDistribution> d{clipped_geometric(lambda, K)};
      const auto det = theorem_constants(ReweightMode::deterministic, d);
      const auto sto = theorem_constants(ReweightMode::stochastic, d);
      const double KK = double(K) * K;
      const double want[] = {1.0 / m.m1 + m.m2 / (KK * m.m1), m.m2 / m.m1,
                             (m.p_pos / KK + m.inv_pos) / (m.p_pos * m.p_pos), 1.0 / m.p_pos};
      const double got[] = {det.a[0], det.b, sto.a[0], sto.b};
      for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(got[k] - want[k]) / want[k]);
    }
  }
  return {ok && worst <= 1e-12, fmt("point masses exact: %s; clipped geometric max rel err %.2e",
                                    ok ? "yes" : "no", worst)};
}

Outcome timing_model() {
  bool constant = true;
  for (auto m : {Method::favano, Method::quafl}) {
    ExperimentConfig c;
    c.method = m;
    c.time_budget = 7000;
    c.eval_every = 1000;
    const auto run = run_experiment(c);
    constant = constant && run.rounds == 1000;
    for (double d : run.round_durations) constant = constant && d == 7.0;
  }

  ExperimentConfig c;
  c.method = Method::fedavg;
  c.n = 3;
  c.s = 1;
  c.K = 20;
  c.fast_fraction = 1.0;
  c.time_budget = std::numeric_limits<double>::infinity();
  c.max_rounds = 100'000;
  c.eval_every = 100'000;
  c.problem.dim = 1;
  const auto run = run_experiment(c);
  const double mean = std::accumulate(run.round_durations.begin(), run.round_durations.end(), 0.0) /
                      static_cast<double>(run.round_durations.size());
  const bool fedavg_ok = run.round_durations.size() == 100'000 && std::abs(mean - 43.0) <= 0.43;
  return {constant && fedavg_ok,
          fmt("favano/quafl rounds all 7: %s; fedavg all-fast mean %.4f over %zu rounds (43 +- 1%%)",
              constant ? "yes" : "no", mean, run.round_durations.size())};
}

Outcome convergence() {
  const auto preset = make_preset("quadratic-convergence");
  std::vector<double> minima;
  double tail_mean = 0.0;
  for (std::size_t T : {500, 1000, 2000}) {
    auto e = preset.experiment;
    e.max_rounds = T;
    const auto run = run_experiment(e);
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& r : run.records) lowest = std::min(lowest, r.grad_norm_sq);
    minima.push_back(lowest);
    if (T == 2000) {
      const std::size_t tail = T / 10;
      double sum = 0.0;
      for (std::size_t k = run.records.size() - tail; k < run.records.size(); ++k) {
        sum += run.records[k].grad_norm_sq;
      }
      tail_mean = sum / static_cast<double>(tail);
    }
  }
  const bool monotone = minima[1] < minima[0] && minima[2] < minima[1];
  return {tail_mean <= 1e-2 && monotone,
          fmt("eta %.4g; mean grad^2 over last 10%% of 2000 rounds %.3e (<= 1e-2); min at T=500/1000/2000: "
              "%.3e %.3e %.3e",
              preset.experiment.eta, tail_mean, minima[0], minima[1], minima[2])};
}

Outcome directional_reproduction() {
  const auto start = std::chrono::steady_clock::now();
  const auto preset = make_preset("logistic-noniid-slowmajority");
  std::vector<double> favano, quafl, fedbuff;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (auto m : {Method::favano, Method::quafl, Method::fedbuff}) {
      auto e = preset.experiment;
      e.seed = seed;
      e.method = m;
      const double acc = *run_experiment(e).records.back().test_acc;
      (m == Method::favano ? favano : m == Method::quafl ? quafl : fedbuff).push_back(acc);
    }
  }
  int wins = 0;
  for (std::size_t k = 0; k < 5; ++k) wins += favano[k] >= quafl[k] ? 1 : 0;
  auto stdev = [](const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / (v.size() - 1));
  };
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  };
  const double took = seconds_since(start);
  return {wins >= 4 && stdev(favano) <= stdev(fedbuff) && took < 600.0,
          fmt("favano >= quafl in %d/5 seeds; acc favano %.3f+-%.4f, quafl %.3f+-%.4f, fedbuff %.3f+-%.4f; %.1f s",
              wins, mean(favano), stdev(favano), mean(quafl), stdev(quafl), mean(fedbuff),
              stdev(fedbuff), took)};
}

Outcome determinism() {
  int checked = 0;
  std::string skipped;
  bool ok = true;
  for (const auto& name : preset_names()) {
    const auto preset = make_preset(name);
    const auto& e = preset.experiment;
    if (e.problem.source == DataSource::idx &&
        !std::filesystem::exists(std::filesystem::path(e.problem.data_dir) / "train-images-idx3-ubyte")) {
      skipped += (skipped.empty() ? "" : ",") + name;
      continue;
    }
    ok = ok && metrics_csv(run_experiment(e).records) == metrics_csv(run_experiment(e).records);
    ++checked;
  }
  for (auto m : {Method::quafl, Method::fedavg, Method::fedbuff}) {
    auto e = make_preset("quadratic-smoke").experiment;
    e.method = m;
    ok = ok && metrics_csv(run_experiment(e).records) == metrics_csv(run_experiment(e).records);
  }
  return {ok && checked >= 3,
          fmt("%d presets + 3 baseline methods bitwise identical%s%s", checked,
              skipped.empty() ? "" : "; no MNIST files, skipped: ", skipped.c_str())};
}

Outcome reduction_identity() {
  ExperimentConfig base;
  base.n = 6;
  base.s = 6;
  base.K = 4;
  base.eta = 0.1;
  base.problem.dim = 4;
  base.problem.noise_sigma = 0.0;
  base.time_budget = std::numeric_limits<double>::infinity();
  base.max_rounds = 50;

  auto favano = base;
  favano.method = Method::favano;
  favano.step_mode = StepMode::full;
  favano.alpha_override = 1.0;
  favano.aggregation = Aggregation::mean;
  auto fedavg = base;
  fedavg.method = Method::fedavg;

  const auto a = run_experiment(favano);
  const auto b = run_experiment(fedavg);
  double worst = std::abs(a.records.size() == b.records.size() ? 0.0 : 1.0);
  for (std::size_t k = 0; k < std::min(a.records.size(), b.records.size()); ++k) {
    worst = std::max(worst, std::abs(a.records[k].f_mu - b.records[k].f_mu));
  }
  for (std::size_t k = 0; k < a.final_server.dim(); ++k) {
    worst = std::max(worst, std::abs(a.final_server[k] - b.final_server[k]));
  }
  return {worst <= 1e-12 && a.rounds == 50,
          fmt("50 rounds, max |favano - fedavg| over f(mu) and final model %.3e", worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"estimator unbiasedness", estimator_unbiasedness},
      {"variance closed forms", variance_closed_forms},
      {"potential contraction", potential_contraction},
      {"theorem constants", theorem_constants_sanity},
      {"timing model", timing_model},
      {"convergence at desk scale", convergence},
      {"directional reproduction", directional_reproduction},
      {"determinism", determinism},
      {"reduction identity", reduction_identity},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    const Outcome out = check();
    failed += out.passed ? 0 : 1;
    std::printf("%s %d. %s: %s\n", out.passed ? "PASS" : "FAIL", ++index, name, out.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
