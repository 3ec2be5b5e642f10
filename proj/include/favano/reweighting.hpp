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

#ifndef FAVANO_REWEIGHTING_HPP
#define FAVANO_REWEIGHTING_HPP

#include <optional>
#include <span>
#include <vector>

#include "favano/param_vector.hpp"
#include "favano/step_distribution.hpp"

namespace favano {

enum class ReweightMode { stochastic, deterministic };

const char* to_string(ReweightMode mode);

/// Divisor applied to a client's accumulated progress.
///
///   stochastic:    P(E > 0) * min(realized, K)
///   deterministic: E[min(E, K)]
///
/// Returns nullopt for a stochastic contact with zero realized steps: the
/// client has made no progress and sends its anchor unchanged.
std::optional<double> alpha(ReweightMode mode, const StepCountDistribution& dist,
                            int realized_steps);

/// w_init + (w_local - w_init) / alpha. Returns w_local itself when alpha == 1.
ParamVector unbiased_update(const ParamVector& w_init, const ParamVector& w_local, double alpha);

struct MeanVariance {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of the reweighted stopped sum
/// 1{S > 0} / alpha(S) * sum_{q <= S} Y_q with S ~ dist and i.i.d. Y_q of the
/// given mean and variance. The mean is y_mean in both modes.
MeanVariance stopped_sum_mean_var(ReweightMode mode, const StepCountDistribution& dist,
                                  double y_mean, double y_var);

struct TheoremConstants {
  std::vector<double> a;
  double b = 0.0;
};

/// Per-client a^i and the shared b entering the convergence rate.
TheoremConstants theorem_constants(ReweightMode mode,
                                   std::span<const StepCountDistribution> dists);

/// Largest admissible step size 1 / (20 B^2 b K L s).
double theorem_step_size(double b_squared, double b, int K, double L, int s);

/// Rounds needed to reach epsilon for an error bound
/// r0 / (eta (T + 1)) + b eta + e eta^2 with eta <= 1/d:
/// 36 b r0 / eps^2 + 15 r0 sqrt(e) / eps^1.5 + 3 d r0 / eps.
double complexity_bound(double r0, double b_term, double e_term, double d_term, double epsilon);

}  // namespace favano

#endif  // FAVANO_REWEIGHTING_HPP
