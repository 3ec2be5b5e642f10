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

#include "favano/reweighting.hpp"

#include <algorithm>
#include <cmath>

#include "favano/errors.hpp"

namespace favano {

const char* to_string(ReweightMode mode) {
  return mode == ReweightMode::stochastic ? "stochastic" : "deterministic";
}

std::optional<double> alpha(ReweightMode mode, const StepCountDistribution& dist,
                            int realized_steps) {
  if (mode == ReweightMode::deterministic) {
    require(dist.m1() > 0.0, "alpha: E[min(E, K)] must be positive");
    return dist.m1();
  }
  require(realized_steps >= 0, "alpha: realized step count must be >= 0");
  const int clipped = std::min(realized_steps, dist.max_steps());
  if (clipped == 0) return std::nullopt;
  require(dist.p_pos() > 0.0, "alpha: P(E > 0) must be positive");
  return dist.p_pos() * clipped;
}

ParamVector unbiased_update(const ParamVector& w_init, const ParamVector& w_local, double alpha) {
  require_same_dim(w_init, w_local);
  require(alpha > 0.0 && std::isfinite(alpha), "unbiased_update: alpha must be > 0");
  if (alpha == 1.0) return w_local;
  ParamVector out = w_init;
  const double inv = 1.0 / alpha;
  for (std::size_t k = 0; k < out.dim(); ++k) out[k] += inv * (w_local[k] - w_init[k]);
  return out;
}

MeanVariance stopped_sum_mean_var(ReweightMode mode, const StepCountDistribution& dist,
                                  double y_mean, double y_var) {
  require(y_var >= 0.0, "stopped_sum_mean_var: y_var must be >= 0");
  const double mu2 = y_mean * y_mean;
  if (mode == ReweightMode::stochastic) {
    const double p = dist.p_pos();
    require(p > 0.0, "stopped_sum_mean_var: P(S > 0) must be positive");
    return {y_mean, (mu2 * p * (1.0 - p) + y_var * dist.inv_pos()) / (p * p)};
  }
  const double m1 = dist.m1();
  require(m1 > 0.0, "stopped_sum_mean_var: E[S] must be positive");
  return {y_mean, mu2 * dist.variance() / (m1 * m1) + y_var / m1};
}

TheoremConstants theorem_constants(ReweightMode mode,
                                   std::span<const StepCountDistribution> dists) {
  require(!dists.empty(), "theorem_constants: need at least one distribution");
  const int K = dists.front().max_steps();
  const double K2 = static_cast<double>(K) * K;
  TheoremConstants out;
  out.a.reserve(dists.size());
  for (const auto& dist : dists) {
    require(dist.max_steps() == K, "theorem_constants: distributions must share K");
    if (mode == ReweightMode::stochastic) {
      const double p = dist.p_pos();
      require(p > 0.0, "theorem_constants: P(E > 0) must be positive");
      out.a.push_back((p / K2 + dist.inv_pos()) / (p * p));
      out.b = std::max(out.b, 1.0 / p);
    } else {
      const double m1 = dist.m1();
      require(m1 > 0.0, "theorem_constants: E[min(E, K)] must be positive");
      out.a.push_back(1.0 / m1 + dist.m2() / (K2 * m1));
      out.b = std::max(out.b, dist.m2() / m1);
    }
  }
  return out;
}

double theorem_step_size(double b_squared, double b, int K, double L, int s) {
  require(b_squared >= 1.0 && b > 0.0 && K >= 1 && L > 0.0 && s >= 1,
          "theorem_step_size: invalid constants");
  return 1.0 / (20.0 * b_squared * b * K * L * s);
}

double complexity_bound(double r0, double b_term, double e_term, double d_term, double epsilon) {
  require(epsilon > 0.0, "complexity_bound: epsilon must be > 0");
  require(r0 >= 0.0 && b_term >= 0.0 && e_term >= 0.0 && d_term >= 0.0,
          "complexity_bound: inputs must be >= 0");
  return 36.0 * b_term * r0 / (epsilon * epsilon) +
         15.0 * r0 * std::sqrt(e_term) / std::pow(epsilon, 1.5) + 3.0 * d_term * r0 / epsilon;
}

}  // namespace favano
