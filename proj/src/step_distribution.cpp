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

#include "favano/step_distribution.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "favano/errors.hpp"

namespace favano {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::exact_geometric: return "exact-geometric";
    case Provenance::renewal: return "renewal";
    case Provenance::empirical: return "empirical";
    case Provenance::custom: return "custom";
  }
  return "custom";
}

namespace {
Provenance provenance_from_string(const std::string& name) {
  for (auto p : {Provenance::exact_geometric, Provenance::renewal, Provenance::empirical,
                 Provenance::custom}) {
    if (to_string(p) == name) return p;
  }
  throw ContractViolation("unknown pmf provenance '" + name + "'");
}
}  // namespace

StepCountDistribution::StepCountDistribution(std::vector<double> pmf, Provenance provenance)
    : pmf_(std::move(pmf)), provenance_(provenance) {
  require(pmf_.size() >= 2, "StepCountDistribution: K must be >= 1");
  double total = 0.0;
  for (double p : pmf_) {
    require(std::isfinite(p) && p >= 0.0, "StepCountDistribution: entries must be >= 0");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-12, "StepCountDistribution: pmf must sum to 1");
  for (std::size_t k = 1; k < pmf_.size(); ++k) {
    const double kk = static_cast<double>(k);
    p_pos_ += pmf_[k];
    m1_ += kk * pmf_[k];
    m2_ += kk * kk * pmf_[k];
    inv_pos_ += pmf_[k] / kk;
  }
}

StepCountDistribution StepCountDistribution::point_mass(int K, int at) {
  require(K >= 1 && at >= 0 && at <= K, "point_mass: need 0 <= at <= K, K >= 1");
  std::vector<double> pmf(static_cast<std::size_t>(K) + 1, 0.0);
  pmf[static_cast<std::size_t>(at)] = 1.0;
  return StepCountDistribution(std::move(pmf));
}

int StepCountDistribution::sample(Rng& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cdf = 0.0;
  int last_positive = 0;
  for (std::size_t k = 0; k < pmf_.size(); ++k) {
    if (pmf_[k] <= 0.0) continue;
    cdf += pmf_[k];
    last_positive = static_cast<int>(k);
    if (u < cdf) return last_positive;
  }
  return last_positive;
}

StepCountDistribution clipped_geometric(double lambda, int K) {
  require(lambda > 0.0 && lambda <= 1.0, "clipped_geometric: lambda must lie in (0, 1]");
  require(K >= 1, "clipped_geometric: K must be >= 1");
  std::vector<double> pmf(static_cast<std::size_t>(K) + 1, 0.0);
  for (int k = 1; k < K; ++k) pmf[static_cast<std::size_t>(k)] = lambda * std::pow(1.0 - lambda, k - 1);
  pmf[static_cast<std::size_t>(K)] = std::pow(1.0 - lambda, K - 1);
  return StepCountDistribution(std::move(pmf), Provenance::exact_geometric);
}

namespace {

// pmf of min(Binomial(trials, lambda), K), accumulated into out with weight.
void add_clipped_binomial(long trials, double lambda, int K, double weight,
                          std::vector<double>& out) {
  if (lambda >= 1.0) {
    out[static_cast<std::size_t>(std::min<long>(trials, K))] += weight;
    return;
  }
  double below = 0.0;
  const double log_lambda = std::log(lambda);
  const double log_rest = std::log1p(-lambda);
  for (int k = 0; k < K && k <= trials; ++k) {
    const double log_choose = std::lgamma(static_cast<double>(trials) + 1.0) -
                              std::lgamma(k + 1.0) -
                              std::lgamma(static_cast<double>(trials - k) + 1.0);
    const double p = std::exp(log_choose + k * log_lambda + (trials - k) * log_rest);
    out[static_cast<std::size_t>(k)] += weight * p;
    below += p;
  }
  out[static_cast<std::size_t>(K)] += weight * std::max(0.0, 1.0 - below);
}

}  // namespace

StepCountDistribution contact_step_distribution(double lambda, double round_duration,
                                                double contact_prob, int K) {
  require(lambda > 0.0 && lambda <= 1.0, "contact_step_distribution: lambda must lie in (0, 1]");
  require(round_duration >= 0.0, "contact_step_distribution: round_duration must be >= 0");
  require(contact_prob > 0.0 && contact_prob <= 1.0,
          "contact_step_distribution: contact_prob must lie in (0, 1]");
  require(K >= 1, "contact_step_distribution: K must be >= 1");
  std::vector<double> pmf(static_cast<std::size_t>(K) + 1, 0.0);
  double tail = 1.0;  // P(gap >= g)
  for (long gap = 1; gap <= 1'000'000 && tail > 1e-18; ++gap) {
    const double p_gap = contact_prob * tail;
    tail *= 1.0 - contact_prob;
    const auto trials = static_cast<long>(std::floor(round_duration * static_cast<double>(gap)));
    add_clipped_binomial(trials, lambda, K, p_gap, pmf);
  }
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (double& p : pmf) p /= total;
  return StepCountDistribution(std::move(pmf), Provenance::renewal);
}

StepCountDistribution empirical_step_distribution(std::span<const double> counts) {
  require(counts.size() >= 2, "empirical_step_distribution: K must be >= 1");
  double total = 0.0;
  for (double c : counts) {
    require(c >= 0.0, "empirical_step_distribution: negative count");
    total += c;
  }
  require(total > 0.0, "empirical_step_distribution: no observations");
  std::vector<double> pmf(counts.begin(), counts.end());
  for (double& p : pmf) p /= total;
  return StepCountDistribution(std::move(pmf), Provenance::empirical);
}

std::string to_pmf_table(const StepCountDistribution& dist) {
  std::string out = "provenance " + to_string(dist.provenance()) + "\n";
  out += "K " + std::to_string(dist.max_steps()) + "\n";
  char buf[64];
  for (std::size_t k = 0; k < dist.pmf().size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu %.17g\n", k, dist[k]);
    out += buf;
  }
  return out;
}

StepCountDistribution parse_pmf_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Provenance provenance = Provenance::custom;
  int K = -1;
  std::vector<double> pmf;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string head;
    fields >> head;
    if (head == "provenance") {
      std::string name;
      fields >> name;
      provenance = provenance_from_string(name);
    } else if (head == "K") {
      fields >> K;
      require(K >= 1 && fields, "parse_pmf_table: bad K line");
      pmf.assign(static_cast<std::size_t>(K) + 1, -1.0);
    } else {
      require(K >= 1, "parse_pmf_table: K line must precede entries");
      const long k = std::stol(head);
      double p = 0.0;
      fields >> p;
      require(fields && k >= 0 && k <= K, "parse_pmf_table: bad entry '" + line + "'");
      pmf[static_cast<std::size_t>(k)] = p;
    }
  }
  require(K >= 1, "parse_pmf_table: missing K");
  for (double p : pmf) require(p >= 0.0, "parse_pmf_table: missing entry");
  return StepCountDistribution(std::move(pmf), provenance);
}

}  // namespace favano
