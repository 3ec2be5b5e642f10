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

#include "favano/protocols.hpp"

#include "favano/errors.hpp"

namespace favano {

ClientState make_client(std::size_t id, const ParamVector& w0, int K, ReweightMode mode,
                        StepCountDistribution dist) {
  require(K >= 1, "make_client: K must be >= 1");
  require(dist.max_steps() == K, "make_client: distribution support must match K");
  return ClientState{id, w0, w0, 0, K, mode, std::move(dist)};
}

ClientState client_local_step(ClientState c, const Problem& problem, double eta, Rng& rng) {
  require(c.q < c.K, "client_local_step: q == K, client must wait for the server");
  const ParamVector g = stochastic_gradient(problem, c.id, c.w_local, rng);
  c.w_local.axpy(-eta, g);
  require_finite(c.w_local, "client_local_step");
  ++c.q;
  return c;
}

ParamVector favano_payload(const ClientState& c, std::optional<double> alpha_override) {
  if (alpha_override) return unbiased_update(c.w_init, c.w_local, *alpha_override);
  const auto a = alpha(c.mode, c.dist, c.q);
  if (!a) return c.w_init;  // no progress since the last contact
  return unbiased_update(c.w_init, c.w_local, *a);
}

ClientState favano_reset(ClientState c, const ParamVector& w_server) {
  require_same_dim(c.w_local, w_server);
  c.w_init = w_server;
  c.w_local = w_server;
  c.q = 0;
  return c;
}

std::pair<ParamVector, ClientState> favano_client_contact(ClientState c,
                                                          const ParamVector& w_server,
                                                          std::optional<double> alpha_override) {
  ParamVector payload = favano_payload(c, alpha_override);
  return {std::move(payload), favano_reset(std::move(c), w_server)};
}

ServerState favano_server_round(ServerState srv, std::span<const ParamVector> payloads,
                                Aggregation rule) {
  require(payloads.size() == srv.s, "favano_server_round: expected s payloads");
  ParamVector sum(srv.w.dim());
  for (const auto& p : payloads) sum += p;
  if (rule == Aggregation::favano) {
    sum += srv.w;
    srv.w = (1.0 / static_cast<double>(srv.s + 1)) * std::move(sum);
  } else {
    srv.w = (1.0 / static_cast<double>(srv.s)) * std::move(sum);
  }
  require_finite(srv.w, "favano_server_round");
  ++srv.t;
  return srv;
}

RoundResult quafl_round(ServerState srv, std::vector<ClientState> selected) {
  require(selected.size() == srv.s, "quafl_round: expected s clients");
  const double inv = 1.0 / static_cast<double>(srv.s + 1);
  const double self = quafl_client_self_weight(srv.s);
  const ParamVector w_prev = srv.w;
  ParamVector sum = w_prev;
  for (const auto& c : selected) sum += c.w_local;
  srv.w = inv * std::move(sum);
  require_finite(srv.w, "quafl_round");
  for (auto& c : selected) {
    ParamVector next = inv * w_prev;
    next.axpy(self, c.w_local);
    c.w_local = next;
    c.w_init = std::move(next);
    c.q = 0;
  }
  ++srv.t;
  return {std::move(srv), std::move(selected)};
}

RoundResult fedavg_round(ServerState srv, std::vector<ClientState> selected,
                         const Problem& problem, double eta, int K, std::span<Rng> rngs) {
  require(selected.size() == srv.s, "fedavg_round: expected s clients");
  require(rngs.size() == selected.size(), "fedavg_round: one rng per client");
  require(K >= 0, "fedavg_round: K must be >= 0");
  ParamVector sum(srv.w.dim());
  for (std::size_t j = 0; j < selected.size(); ++j) {
    auto& c = selected[j];
    c = favano_reset(std::move(c), srv.w);
    for (int step = 0; step < K; ++step) c = client_local_step(std::move(c), problem, eta, rngs[j]);
    sum += c.w_local;
  }
  srv.w = (1.0 / static_cast<double>(srv.s)) * std::move(sum);
  require_finite(srv.w, "fedavg_round");
  for (auto& c : selected) c = favano_reset(std::move(c), srv.w);
  ++srv.t;
  return {std::move(srv), std::move(selected)};
}

FedBuffState fedbuff_step(FedBuffState state, ParamVector delta, double eta_server) {
  require_same_dim(state.w, delta);
  require(state.capacity >= 1, "fedbuff_step: buffer capacity must be >= 1");
  state.buffer.push_back(std::move(delta));
  if (state.buffer.size() == state.capacity) {
    ParamVector sum(state.w.dim());
    for (const auto& d : state.buffer) sum += d;
    state.w.axpy(-eta_server / static_cast<double>(state.capacity), sum);
    require_finite(state.w, "fedbuff_step");
    state.buffer.clear();
    ++state.t;
  }
  return state;
}

}  // namespace favano
