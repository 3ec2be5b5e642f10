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

#include "favano/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "favano/errors.hpp"
#include "favano/rng.hpp"

namespace favano {

ParamVector mean_model(const ParamVector& w_server, std::span<const ParamVector> clients) {
  require(!clients.empty(), "mean_model: need at least one client");
  ParamVector sum = w_server;
  for (const auto& w : clients) sum += w;
  return (1.0 / static_cast<double>(clients.size() + 1)) * std::move(sum);
}

double potential(const ParamVector& w_server, std::span<const ParamVector> clients) {
  const ParamVector mu = mean_model(w_server, clients);
  double phi = squared_distance(w_server, mu);
  for (const auto& w : clients) phi += squared_distance(w, mu);
  return phi;
}

double model_variance(const ParamVector& w_server, std::span<const ParamVector> clients) {
  double acc = 0.0;
  for (const auto& w : clients) acc += squared_distance(w, w_server);
  return acc;
}

MetricsRecord compute_metrics(std::size_t t, double sim_time, const Problem& problem,
                              const ParamVector& w_server, std::span<const ParamVector> clients,
                              bool evaluate) {
  MetricsRecord rec;
  rec.t = t;
  rec.sim_time = sim_time;
  const ParamVector mu = mean_model(w_server, clients);
  rec.f_mu = problem.loss(mu);
  rec.grad_norm_sq = squared_norm(problem.gradient(mu));
  rec.phi = potential(w_server, clients);
  rec.model_variance = model_variance(w_server, clients);
  if (evaluate) {
    if (auto eval = problem.evaluate(w_server)) {
      rec.test_loss = eval->loss;
      rec.test_acc = eval->accuracy;
    }
  }
  return rec;
}

double contraction_rate(std::size_t n, std::size_t s) {
  require(s >= 1 && s <= n, "contraction_rate: need 1 <= s <= n");
  const double nn = static_cast<double>(n);
  const double ss = static_cast<double>(s);
  return ss * (nn - ss) / (2.0 * nn * (nn + 1.0) * (ss + 1.0));
}

ContractionReport check_potential_contraction(const ParamVector& w_server,
                                              std::span<const ParamVector> clients,
                                              const Problem& problem,
                                              const ContractionSetup& setup) {
  const std::size_t n = clients.size();
  require(n == problem.num_clients(), "check_potential_contraction: client count mismatch");
  require(setup.dists.size() == n, "check_potential_contraction: one distribution per client");
  require(setup.trials >= 2, "check_potential_contraction: need at least two trials");
  require(setup.s >= 1 && setup.s <= n, "check_potential_contraction: need 1 <= s <= n");

  ContractionReport report;
  report.phi = potential(w_server, clients);
  report.kappa = contraction_rate(n, setup.s);
  const double noise_coeff = 3.0 * static_cast<double>(setup.s * setup.s) /
                             static_cast<double>(n) * setup.eta * setup.eta;

  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::vector<std::size_t> chosen(setup.s);
  std::vector<ParamVector> sent(n);
  std::vector<ParamVector> next(clients.begin(), clients.end());

  double sum_phi = 0.0, sum_phi_sq = 0.0;
  double sum_slack = 0.0, sum_slack_sq = 0.0;
  double sum_progress = 0.0;
  for (std::size_t trial = 0; trial < setup.trials; ++trial) {
    Rng rng = make_stream(setup.seed, "contraction", trial);
    double progress_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& dist = setup.dists[i];
      const int steps = dist.sample(rng);
      ParamVector local = clients[i];
      ParamVector acc(local.dim());
      for (int q = 0; q < steps; ++q) {
        const ParamVector g = stochastic_gradient(problem, i, local, rng);
        acc += g;
        local.axpy(-setup.eta, g);
      }
      const auto a = alpha(setup.mode, dist, steps);
      if (a) acc *= 1.0 / *a;
      else acc = ParamVector(local.dim());
      progress_sq += squared_norm(acc);
      sent[i] = clients[i];
      sent[i].axpy(-setup.eta, acc);
    }

    std::sample(ids.begin(), ids.end(), chosen.begin(), setup.s, rng);
    ParamVector server = w_server;
    for (std::size_t i : chosen) server += sent[i];
    server *= 1.0 / static_cast<double>(setup.s + 1);
    std::copy(clients.begin(), clients.end(), next.begin());
    for (std::size_t i : chosen) next[i] = server;

    const double phi_next = potential(server, next);
    const double slack = phi_next - (1.0 - report.kappa) * report.phi - noise_coeff * progress_sq;
    sum_phi += phi_next;
    sum_phi_sq += phi_next * phi_next;
    sum_slack += slack;
    sum_slack_sq += slack * slack;
    sum_progress += progress_sq;
  }

  const double m = static_cast<double>(setup.trials);
  auto standard_error = [m](double sum, double sum_sq) {
    const double mean = sum / m;
    const double var = std::max(0.0, (sum_sq - m * mean * mean) / (m - 1.0));
    return std::sqrt(var / m);
  };
  report.mean_next_phi = sum_phi / m;
  report.next_phi_se = standard_error(sum_phi, sum_phi_sq);
  report.mean_progress_sq = sum_progress / m;
  report.bound = (1.0 - report.kappa) * report.phi + noise_coeff * report.mean_progress_sq;
  report.mean_slack = sum_slack / m;
  report.slack_se = standard_error(sum_slack, sum_slack_sq);
  report.holds = report.mean_slack <= 3.0 * report.slack_se + 1e-12 * std::max(1.0, report.phi);
  return report;
}

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

std::string metrics_csv(std::span<const MetricsRecord> records) {
  std::string out = kMetricsHeader;
  out += '\n';
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& r : records) {
    out += std::to_string(r.t) + ',' + format_real(r.sim_time) + ',' + format_real(r.f_mu) + ',' +
           format_real(r.grad_norm_sq) + ',' + format_real(r.phi) + ',' + opt(r.test_loss) + ',' +
           opt(r.test_acc) + ',' + format_real(r.model_variance) + '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_metrics(std::span<const MetricsRecord> records, const std::filesystem::path& path) {
  write_text_file(path, metrics_csv(records));
}

std::vector<MetricsRecord> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(std::getline(in, line) && line == kMetricsHeader, "parse_metrics_csv: bad header");
  std::vector<MetricsRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    require(cells.size() == 8, "parse_metrics_csv: expected 8 columns in '" + line + "'");
    auto opt = [](const std::string& c) -> std::optional<double> {
      if (c.empty()) return std::nullopt;
      return std::stod(c);
    };
    MetricsRecord r;
    r.t = std::stoul(cells[0]);
    r.sim_time = std::stod(cells[1]);
    r.f_mu = std::stod(cells[2]);
    r.grad_norm_sq = std::stod(cells[3]);
    r.phi = std::stod(cells[4]);
    r.test_loss = opt(cells[5]);
    r.test_acc = opt(cells[6]);
    r.model_variance = std::stod(cells[7]);
    out.push_back(r);
  }
  return out;
}

std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path) {
  return parse_metrics_csv(read_text_file(path));
}

}  // namespace favano
