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

#ifndef FAVANO_PROTOCOLS_HPP
#define FAVANO_PROTOCOLS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "favano/param_vector.hpp"
#include "favano/problem.hpp"
#include "favano/reweighting.hpp"
#include "favano/rng.hpp"
#include "favano/step_distribution.hpp"

namespace favano {

/// Local memory of one client: current model, the server model it last
/// received (its anchor), and the number of local steps since that contact.
struct ClientState {
  std::size_t id = 0;
  ParamVector w_local;
  ParamVector w_init;
  int q = 0;
  int K = 1;
  ReweightMode mode = ReweightMode::deterministic;
  StepCountDistribution dist = StepCountDistribution::point_mass(1, 1);
};

ClientState make_client(std::size_t id, const ParamVector& w0, int K, ReweightMode mode,
                        StepCountDistribution dist);

struct ServerState {
  ParamVector w;
  std::size_t t = 0;
  std::size_t s = 1;
  double eta = 0.0;
};

/// Server aggregation rule. `mean` is the plain average of the payloads and
/// only exists to compare FAVANO against FedAvg.
enum class Aggregation { favano, mean };

/// One SGD step on the client's own objective. Rejects q == K.
ClientState client_local_step(ClientState c, const Problem& problem, double eta, Rng& rng);

/// Reweighted model sent on contact. `alpha_override` replaces the
/// reweighting divisor (used to reduce FAVANO to FedAvg).
ParamVector favano_payload(const ClientState& c, std::optional<double> alpha_override = {});

/// Post-contact state: anchor and local model set to w_server, q = 0.
ClientState favano_reset(ClientState c, const ParamVector& w_server);

/// Payload followed by reset.
std::pair<ParamVector, ClientState> favano_client_contact(
    ClientState c, const ParamVector& w_server, std::optional<double> alpha_override = {});

/// w <- (w_prev + sum payloads) / (s + 1), or the plain payload mean.
ServerState favano_server_round(ServerState srv, std::span<const ParamVector> payloads,
                                Aggregation rule = Aggregation::favano);

struct RoundResult {
  ServerState server;
  std::vector<ClientState> clients;
};

/// QuAFL: server w <- (w_prev + sum w^i) / (s + 1); each selected client
/// w^i <- w_prev / (s + 1) + s / (s + 1) w^i, q <- 0.
RoundResult quafl_round(ServerState srv, std::vector<ClientState> selected);

/// Weight QuAFL puts on a client's own model in its post-contact update.
constexpr double quafl_client_self_weight(std::size_t s) {
  return static_cast<double>(s) / static_cast<double>(s + 1);
}

/// FedAvg: every selected client runs exactly K local steps from w_prev
/// (using rngs[j] for the j-th client); the server takes the mean and the
/// selected clients adopt it.
RoundResult fedavg_round(ServerState srv, std::vector<ClientState> selected,
                         const Problem& problem, double eta, int K, std::span<Rng> rngs);

struct FedBuffState {
  ParamVector w;
  std::vector<ParamVector> buffer;
  std::size_t capacity = 10;
  std::size_t t = 0;
};

/// Appends `delta` (anchor minus local model, i.e. a pseudo-gradient). When
/// the buffer reaches capacity: w <- w - eta_server * mean(buffer), buffer
/// cleared, t incremented.
FedBuffState fedbuff_step(FedBuffState state, ParamVector delta, double eta_server);

}  // namespace favano

#endif  // FAVANO_PROTOCOLS_HPP
