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

#include "favano/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <tuple>

#include "json.hpp"

namespace favano {

double SpeedModel::sample_step_duration(Rng& rng) const {
  if (lambda >= 1.0) return 1.0;
  return 1.0 + static_cast<double>(std::geometric_distribution<long>(lambda)(rng));
}

void ClockLedger::advance(double duration) {
  require(duration >= 0.0 && std::isfinite(duration), "ClockLedger: bad duration");
  now += duration;
  durations.push_back(duration);
}

std::vector<std::size_t> sample_selection(std::size_t n, std::size_t s, Rng& rng) {
  require(s >= 1 && s <= n, "sample_selection: need 1 <= s <= n");
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  // Partial Fisher-Yates: the first s slots are a uniform s-subset.
  for (std::size_t j = 0; j < s; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, n - 1);
    std::swap(ids[j], ids[pick(rng)]);
  }
  ids.resize(s);
  std::sort(ids.begin(), ids.end());
  return ids;
}

int elapse_steps(const SpeedModel& speed, double window, int K, Rng& rng) {
  require(window >= 0.0, "elapse_steps: window must be >= 0");
  int steps = 0;
  double elapsed = 0.0;
  while (steps < K) {
    elapsed += speed.sample_step_duration(rng);
    if (elapsed > window) break;
    ++steps;
  }
  return steps;
}

const char* to_string(Method m) {
  switch (m) {
    case Method::favano: return "favano";
    case Method::quafl: return "quafl";
    case Method::fedavg: return "fedavg";
    case Method::fedbuff: return "fedbuff";
  }
  return "favano";
}

Method parse_method(const std::string& name) {
  for (auto m : {Method::favano, Method::quafl, Method::fedavg, Method::fedbuff}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("method", "unknown method '" + name + "'");
}

double round_duration(Method method, const ClockLedger& ledger, const RoundTiming& timing,
                      Rng& rng) {
  switch (method) {
    case Method::favano:
    case Method::quafl:
      return ledger.server_interact + ledger.server_wait;
    case Method::fedavg: {
      double slowest = 0.0;
      for (const auto& speed : timing.selected) {
        slowest = std::max(slowest, speed.sample_step_duration(rng));
      }
      return ledger.server_interact + timing.K * slowest;
    }
    case Method::fedbuff: {
      require(timing.buffer_size >= 1 && timing.arrivals.size() >= timing.buffer_size,
              "round_duration: fedbuff needs at least buffer_size arrivals");
      std::vector<double> sorted(timing.arrivals.begin(), timing.arrivals.end());
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(timing.buffer_size - 1),
                       sorted.end());
      return ledger.server_interact + std::max(0.0, sorted[timing.buffer_size - 1]);
    }
  }
  return 0.0;
}

std::vector<SpeedModel> assign_speeds(std::size_t n, double fast_fraction, double lambda_fast,
                                      double lambda_slow, std::uint64_t seed) {
  const auto slow = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * (1.0 - fast_fraction) + 1e-9));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_stream(seed, "speeds");
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<SpeedModel> speeds(n, SpeedModel{SpeedClass::fast, lambda_fast});
  for (std::size_t j = 0; j < std::min(slow, n); ++j) {
    speeds[order[j]] = SpeedModel{SpeedClass::slow, lambda_slow};
  }
  return speeds;
}

std::vector<ConfigError> validation_errors(const ExperimentConfig& c) {
  std::vector<ConfigError> errors;
  auto check = [&](bool ok, const char* field, const std::string& message) {
    if (!ok) errors.emplace_back(field, message);
  };
  auto in_unit = [](double x) { return x > 0.0 && x <= 1.0; };
  check(c.n >= 1, "n", "must be >= 1");
  check(c.s >= 1 && c.s <= c.n, "s", "must satisfy 1 <= s <= n");
  check(c.K >= 1, "K", "must be >= 1");
  check(std::isfinite(c.eta) && c.eta >= 0.0, "eta", "must be finite and >= 0");
  check(std::isfinite(c.eta_server) && c.eta_server > 0.0, "eta_server", "must be > 0");
  check(c.time_budget >= 0.0, "time_budget", "must be >= 0");
  check(std::isfinite(c.time_budget) || c.max_rounds.has_value(), "time_budget",
        "must be finite unless rounds is set");
  check(c.fast_fraction >= 0.0 && c.fast_fraction <= 1.0, "fast_fraction", "must lie in [0, 1]");
  check(in_unit(c.lambda_fast), "lambda_fast", "must lie in (0, 1]");
  check(in_unit(c.lambda_slow), "lambda_slow", "must lie in (0, 1]");
  check(c.method != Method::fedbuff || (c.buffer_size >= 1 && c.buffer_size <= c.n), "buffer_size",
        "must satisfy 1 <= Z <= n");
  check(c.server_wait >= 0.0, "server_wait", "must be >= 0");
  check(c.server_interact >= 0.0, "server_interact", "must be >= 0");
  check(c.method == Method::fedavg || c.method == Method::fedbuff ||
            c.server_wait + c.server_interact > 0.0,
        "server_wait", "asynchronous rounds need a positive duration");
  check(c.eval_every >= 1, "eval_every", "must be >= 1");
  check(!c.alpha_override || *c.alpha_override > 0.0, "alpha_override", "must be > 0");
  const auto& p = c.problem;
  check(std::isfinite(p.noise_sigma) && p.noise_sigma >= 0.0, "noise_sigma", "must be >= 0");
  if (p.kind == ProblemKind::quadratic) {
    check(p.dim >= 1, "dim", "must be >= 1");
    check(p.spread >= 0.0, "spread", "must be >= 0");
  } else {
    check(p.hidden >= 1, "hidden", "must be >= 1");
    if (p.source == DataSource::synthetic) {
      check(p.samples_per_client >= 1, "samples_per_client", "must be >= 1");
      check(p.features >= 1, "features", "must be >= 1");
      check(p.classes >= 2, "classes", "must be >= 2");
      check(p.split == SplitMode::iid || 2 * c.n >= static_cast<std::size_t>(p.classes), "split",
            "two-class split needs 2n >= classes");
    } else {
      check(!p.data_dir.empty(), "data_dir", "required for idx data");
    }
  }
  return errors;
}

void validate(const ExperimentConfig& config) {
  auto errors = validation_errors(config);
  if (!errors.empty()) throw errors.front();
}

std::unique_ptr<Problem> build_problem(const ProblemConfig& p, std::size_t n, std::uint64_t seed) {
  if (p.kind == ProblemKind::quadratic) {
    Rng rng = make_stream(seed, "problem");
    return make_heterogeneous_quadratic(n, p.dim, p.spread, p.noise_sigma, rng);
  }
  std::shared_ptr<Dataset> train;
  std::shared_ptr<Dataset> test;
  if (p.source == DataSource::synthetic) {
    const std::uint64_t centers = derive_seed(seed, "centers");
    Rng train_rng = make_stream(seed, "train-data");
    Rng test_rng = make_stream(seed, "test-data");
    train = std::make_shared<Dataset>(make_gaussian_mixture(
        n * p.samples_per_client, p.features, p.classes, p.separation, centers, train_rng));
    test = std::make_shared<Dataset>(make_gaussian_mixture(
        std::max<std::size_t>(p.test_samples, 1), p.features, p.classes, p.separation, centers,
        test_rng));
  } else {
    const std::filesystem::path dir(p.data_dir);
    train = std::make_shared<Dataset>(
        load_idx_dataset(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte"));
    test = std::make_shared<Dataset>(
        load_idx_dataset(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"));
  }
  Rng split_rng = make_stream(seed, "split");
  auto shards = split_dataset(*train, n, p.split, split_rng);
  if (p.kind == ProblemKind::logistic) {
    return std::make_unique<SoftmaxRegression>(train, std::move(shards), test, p.noise_sigma,
                                               p.batch_size);
  }
  return std::make_unique<TinyMlp>(train, std::move(shards), test, p.hidden, p.noise_sigma,
                                   p.batch_size, derive_seed(seed, "mlp"));
}

std::string trace_jsonl(std::span<const TraceRecord> trace) {
  std::string out;
  for (const auto& r : trace) {
    nlohmann::json j = {{"t", r.t},
                        {"sim_time", r.sim_time},
                        {"selected", r.selected},
                        {"steps", r.steps},
                        {"payload_norms", r.payload_norms}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

// Mutable state of one run; the per-method loops live below.
class Simulation {
 public:
  Simulation(const ExperimentConfig& config, const Problem& problem)
      : cfg_(config),
        problem_(problem),
        method_name_(to_string(config.method)),
        selection_rng_(make_stream(config.seed, method_name_ + "/selection")),
        timing_rng_(make_stream(config.seed, method_name_ + "/timing")) {
    require(problem.num_clients() == config.n, "run_experiment: problem has wrong client count");
    run_.config = config;
    run_.speeds = assign_speeds(config.n, config.fast_fraction, config.lambda_fast,
                                config.lambda_slow, config.seed);
    ledger_.server_wait = config.server_wait;
    ledger_.server_interact = config.server_interact;

    const ParamVector w0 = problem.initial_point();
    server_ = ServerState{w0, 0, config.s, config.eta};
    last_contact_.assign(config.n, 0.0);
    const double contact_prob = static_cast<double>(config.s) / static_cast<double>(config.n);
    for (std::size_t i = 0; i < config.n; ++i) {
      const double lambda = run_.speeds[i].lambda;
      step_laws_.push_back(clipped_geometric(lambda, config.K));
      clients_.push_back(make_client(i, w0, config.K, config.reweight, alpha_law(i, contact_prob)));
      grad_rngs_.push_back(make_stream(config.seed, method_name_ + "/grad", i));
      if (config.alpha_source == AlphaSource::empirical) {
        std::vector<double> counts(static_cast<std::size_t>(config.K) + 1, 0.0);
        counts.back() = 1.0;
        observed_.push_back(std::move(counts));
      }
    }
  }

  ProtocolRun run() && {
    record(true);
    switch (cfg_.method) {
      case Method::favano:
      case Method::quafl: run_async(); break;
      case Method::fedavg: run_fedavg(); break;
      case Method::fedbuff: run_fedbuff(); break;
    }
    if (run_.records.back().t != server_.t) record(true);
    run_.rounds = server_.t;
    run_.round_durations = ledger_.durations;
    run_.final_server = server_.w;
    return std::move(run_);
  }

 private:
  StepCountDistribution alpha_law(std::size_t i, double contact_prob) const {
    const double lambda = run_.speeds[i].lambda;
    switch (cfg_.step_mode) {
      case StepMode::full: return StepCountDistribution::point_mass(cfg_.K, cfg_.K);
      case StepMode::direct: return clipped_geometric(lambda, cfg_.K);
      case StepMode::time_based:
        if (cfg_.alpha_source == AlphaSource::empirical) {
          return StepCountDistribution::point_mass(cfg_.K, cfg_.K);
        }
        return contact_step_distribution(lambda, cfg_.server_wait + cfg_.server_interact,
                                         contact_prob, cfg_.K);
    }
    return StepCountDistribution::point_mass(cfg_.K, cfg_.K);
  }

  bool rounds_left() const { return !cfg_.max_rounds || server_.t < *cfg_.max_rounds; }
  bool fits(double duration) const { return ledger_.now + duration <= cfg_.time_budget; }

  void record(bool force) {
    if (!force && server_.t % cfg_.eval_every != 0) return;
    std::vector<ParamVector> models;
    models.reserve(clients_.size());
    for (const auto& c : clients_) models.push_back(c.w_local);
    run_.records.push_back(compute_metrics(server_.t, ledger_.now, problem_, server_.w, models));
  }

  void trace(TraceRecord rec) {
    if (cfg_.record_trace) run_.trace.push_back(std::move(rec));
  }

  // Steps the contacted client has completed since its last contact.
  int contact_steps(std::size_t i) {
    switch (cfg_.step_mode) {
      case StepMode::full: return cfg_.K;
      case StepMode::direct: return step_laws_[i].sample(timing_rng_);
      case StepMode::time_based:
        return elapse_steps(run_.speeds[i], ledger_.now - last_contact_[i], cfg_.K, timing_rng_);
    }
    return 0;
  }

  void local_steps(ClientState& c, int steps) {
    for (int q = 0; q < steps; ++q) {
      c = client_local_step(std::move(c), problem_, cfg_.eta, grad_rngs_[c.id]);
    }
  }

  void run_async() {
    const RoundTiming timing{};
    while (rounds_left()) {
      const double duration = round_duration(cfg_.method, ledger_, timing, timing_rng_);
      if (!fits(duration)) break;
      ledger_.advance(duration);
      const auto selected = sample_selection(cfg_.n, cfg_.s, selection_rng_);

      TraceRecord rec{server_.t + 1, ledger_.now, selected, {}, {}};
      for (std::size_t i : selected) {
        const int steps = contact_steps(i);
        local_steps(clients_[i], steps);
        last_contact_[i] = ledger_.now;
        rec.steps.push_back(steps);
      }

      if (cfg_.method == Method::favano) {
        std::vector<ParamVector> payloads;
        payloads.reserve(selected.size());
        for (std::size_t i : selected) {
          payloads.push_back(favano_payload(clients_[i], cfg_.alpha_override));
          rec.payload_norms.push_back(norm(payloads.back()));
        }
        server_ = favano_server_round(std::move(server_), payloads, cfg_.aggregation);
        for (std::size_t i : selected) clients_[i] = favano_reset(std::move(clients_[i]), server_.w);
      } else {
        std::vector<ClientState> picked;
        for (std::size_t i : selected) {
          rec.payload_norms.push_back(norm(clients_[i].w_local));
          picked.push_back(std::move(clients_[i]));
        }
        auto result = quafl_round(std::move(server_), std::move(picked));
        server_ = std::move(result.server);
        for (auto& c : result.clients) clients_[c.id] = std::move(c);
      }

      if (!observed_.empty()) {
        for (std::size_t j = 0; j < selected.size(); ++j) {
          const std::size_t i = selected[j];
          observed_[i][static_cast<std::size_t>(rec.steps[j])] += 1.0;
          clients_[i].dist = empirical_step_distribution(observed_[i]);
        }
      }
      trace(std::move(rec));
      record(false);
    }
  }

  void run_fedavg() {
    while (rounds_left()) {
      const auto selected = sample_selection(cfg_.n, cfg_.s, selection_rng_);
      std::vector<SpeedModel> speeds;
      for (std::size_t i : selected) speeds.push_back(run_.speeds[i]);
      RoundTiming timing;
      timing.selected = speeds;
      timing.K = cfg_.K;
      const double duration = round_duration(Method::fedavg, ledger_, timing, timing_rng_);
      if (!fits(duration)) break;
      ledger_.advance(duration);

      std::vector<ClientState> picked;
      std::vector<Rng> rngs;
      for (std::size_t i : selected) {
        picked.push_back(std::move(clients_[i]));
        rngs.push_back(grad_rngs_[i]);
      }
      auto result = fedavg_round(std::move(server_), std::move(picked), problem_, cfg_.eta, cfg_.K, rngs);
      server_ = std::move(result.server);
      TraceRecord rec{server_.t, ledger_.now, selected, {}, {}};
      for (std::size_t j = 0; j < selected.size(); ++j) {
        grad_rngs_[selected[j]] = rngs[j];
        clients_[selected[j]] = std::move(result.clients[j]);
        rec.steps.push_back(cfg_.K);
      }
      trace(std::move(rec));
      record(false);
    }
  }

  double local_update_time(std::size_t i) {
    double total = 0.0;
    for (int q = 0; q < cfg_.K; ++q) total += run_.speeds[i].sample_step_duration(timing_rng_);
    return total;
  }

  void run_fedbuff() {
    using Arrival = std::tuple<double, std::size_t>;  // (time, client id)
    std::priority_queue<Arrival, std::vector<Arrival>, std::greater<>> arrivals;
    for (std::size_t i = 0; i < cfg_.n; ++i) arrivals.emplace(local_update_time(i), i);
    FedBuffState buffer{server_.w, {}, cfg_.buffer_size, 0};

    while (rounds_left()) {
      const double start = ledger_.now;
      TraceRecord rec{server_.t + 1, 0.0, {}, {}, {}};
      std::vector<double> offsets;
      while (offsets.size() < cfg_.buffer_size) {
        const auto [when, i] = arrivals.top();
        const double delivered = std::max(when, start);
        if (!fits(ledger_.server_interact + (delivered - start))) return;
        arrivals.pop();
        offsets.push_back(delivered - start);

        ClientState& c = clients_[i];
        local_steps(c, cfg_.K);
        ParamVector delta = c.w_init - c.w_local;
        rec.selected.push_back(i);
        rec.steps.push_back(cfg_.K);
        rec.payload_norms.push_back(norm(delta));
        buffer = fedbuff_step(std::move(buffer), std::move(delta), cfg_.eta_server);
        c = favano_reset(std::move(c), buffer.w);
        arrivals.emplace(delivered + local_update_time(i), i);
      }
      RoundTiming timing;
      timing.arrivals = offsets;
      timing.buffer_size = cfg_.buffer_size;
      ledger_.advance(round_duration(Method::fedbuff, ledger_, timing, timing_rng_));
      server_.w = buffer.w;
      ++server_.t;
      rec.sim_time = ledger_.now;
      trace(std::move(rec));
      record(false);
    }
  }

  const ExperimentConfig& cfg_;
  const Problem& problem_;
  std::string method_name_;
  Rng selection_rng_;
  Rng timing_rng_;
  ClockLedger ledger_;
  ServerState server_;
  std::vector<ClientState> clients_;
  std::vector<StepCountDistribution> step_laws_;
  std::vector<Rng> grad_rngs_;
  std::vector<double> last_contact_;
  std::vector<std::vector<double>> observed_;
  ProtocolRun run_;
};

}  // namespace

ProtocolRun run_experiment(const ExperimentConfig& config, const Problem& problem) {
  validate(config);
  return Simulation(config, problem).run();
}

ProtocolRun run_experiment(const ExperimentConfig& config) {
  validate(config);
  const auto problem = build_problem(config.problem, config.n, config.seed);
  return run_experiment(config, *problem);
}

}  // namespace favano
