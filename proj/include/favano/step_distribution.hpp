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

#ifndef FAVANO_STEP_DISTRIBUTION_HPP
#define FAVANO_STEP_DISTRIBUTION_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "favano/rng.hpp"

namespace favano {

enum class Provenance { exact_geometric, renewal, empirical, custom };

std::string to_string(Provenance p);

/// Law of the clipped local-step count min(E, K) on {0, ..., K}.
///
/// Moments are computed once, by direct summation over the support:
///   p_pos   = P(E > 0)
///   m1      = E[min(E, K)]
///   m2      = E[min(E, K)^2]
///   inv_pos = E[1{E > 0} / min(E, K)]
class StepCountDistribution {
 public:
  /// Rejects K < 1, negative entries, and sums further than 1e-12 from 1.
  explicit StepCountDistribution(std::vector<double> pmf,
                                 Provenance provenance = Provenance::custom);

  static StepCountDistribution point_mass(int K, int at);

  int max_steps() const noexcept { return static_cast<int>(pmf_.size()) - 1; }
  std::span<const double> pmf() const noexcept { return pmf_; }
  double operator[](std::size_t k) const { return pmf_[k]; }
  Provenance provenance() const noexcept { return provenance_; }

  double p_pos() const noexcept { return p_pos_; }
  double m1() const noexcept { return m1_; }
  double m2() const noexcept { return m2_; }
  double inv_pos() const noexcept { return inv_pos_; }
  double variance() const noexcept { return m2_ - m1_ * m1_; }

  /// Inverse-CDF draw.
  int sample(Rng& rng) const;

 private:
  std::vector<double> pmf_;
  Provenance provenance_;
  double p_pos_ = 0.0;
  double m1_ = 0.0;
  double m2_ = 0.0;
  double inv_pos_ = 0.0;
};

/// E ~ Geometric(lambda) on {1, 2, ...}, clipped at K.
StepCountDistribution clipped_geometric(double lambda, int K);

/// Steps completed between two server contacts when every local step lasts
/// Geometric(lambda) time units, rounds last `round_duration` units and the
/// client is contacted each round independently with probability
/// `contact_prob`. Given a window of w units the count is Binomial(w, lambda);
/// the window is round_duration times a Geometric(contact_prob) round gap.
StepCountDistribution contact_step_distribution(double lambda, double round_duration,
                                                double contact_prob, int K);

/// Normalised histogram; counts[k] observations of k steps.
StepCountDistribution empirical_step_distribution(std::span<const double> counts);

/// Plain-text table:
///   provenance <name>
///   K <K>
///   <k> <pmf[k]>      (one line per k, %.17g)
std::string to_pmf_table(const StepCountDistribution& dist);
StepCountDistribution parse_pmf_table(const std::string& text);

}  // namespace favano

#endif  // FAVANO_STEP_DISTRIBUTION_HPP
