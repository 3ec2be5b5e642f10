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

#ifndef FAVANO_PROBLEM_HPP
#define FAVANO_PROBLEM_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "favano/dataset.hpp"
#include "favano/param_vector.hpp"
#include "favano/rng.hpp"

namespace favano {

/// Constants of the bounded gradient dissimilarity condition:
/// (1/n) sum_i |grad f_i(x)|^2 <= G^2 + B^2 |grad f(x)|^2.
struct Dissimilarity {
  double g_squared = 0.0;
  double b_squared = 1.0;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// A finite-sum objective f(w) = (1/n) sum_i f_i(w) split across n clients.
///
/// Subclasses provide per-client loss and exact gradient. The gradient
/// oracle used by training adds isotropic Gaussian noise on top of
/// `sampled_gradient`, which is the exact gradient unless a subclass draws
/// minibatches.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::size_t num_clients() const = 0;
  virtual std::size_t dim() const = 0;
  virtual double client_loss(std::size_t client, const ParamVector& w) const = 0;
  virtual ParamVector client_gradient(std::size_t client, const ParamVector& w) const = 0;

  virtual ParamVector sampled_gradient(std::size_t client, const ParamVector& w, Rng& rng) const;
  /// Held-out evaluation of a single model, if the problem has a test set.
  virtual std::optional<Evaluation> evaluate(const ParamVector& w) const;
  virtual ParamVector initial_point() const;

  double loss(const ParamVector& w) const;
  ParamVector gradient(const ParamVector& w) const;

  double noise_sigma() const noexcept { return noise_sigma_; }
  std::optional<double> smoothness() const noexcept { return smoothness_; }
  std::optional<Dissimilarity> dissimilarity() const noexcept { return dissimilarity_; }
  /// f_* and its argmin, when known in closed form.
  virtual std::optional<double> optimal_value() const { return std::nullopt; }
  virtual std::optional<ParamVector> minimizer() const { return std::nullopt; }

 protected:
  explicit Problem(double noise_sigma);
  void set_smoothness(double L) { smoothness_ = L; }
  void set_dissimilarity(Dissimilarity d);

 private:
  double noise_sigma_ = 0.0;
  std::optional<double> smoothness_;
  std::optional<Dissimilarity> dissimilarity_;
};

/// g = sampled_gradient + N(0, (sigma^2/d) I), so E|g - grad f_i|^2 = sigma^2
/// when the sampled gradient is exact. With sigma = 0 no noise is drawn and
/// the result is exactly `sampled_gradient`.
ParamVector stochastic_gradient(const Problem& problem, std::size_t client, const ParamVector& w,
                                Rng& rng);

/// f_i(w) = 1/2 sum_k h_ik (w_k - c_ik)^2 with diagonal curvature h_i > 0.
class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(std::vector<ParamVector> centers, std::vector<ParamVector> curvatures,
                   double noise_sigma);
  /// Identity curvature.
  QuadraticProblem(std::vector<ParamVector> centers, double noise_sigma);

  std::size_t num_clients() const override { return centers_.size(); }
  std::size_t dim() const override { return centers_.front().dim(); }
  double client_loss(std::size_t client, const ParamVector& w) const override;
  ParamVector client_gradient(std::size_t client, const ParamVector& w) const override;
  std::optional<double> optimal_value() const override;
  std::optional<ParamVector> minimizer() const override { return minimizer_; }

  const ParamVector& center(std::size_t client) const { return centers_.at(client); }

 private:
  std::vector<ParamVector> centers_;
  std::vector<ParamVector> curvatures_;
  ParamVector minimizer_;
};

/// n clients with centres c_i ~ N(0, spread^2 I) and identity curvature.
std::unique_ptr<QuadraticProblem> make_heterogeneous_quadratic(std::size_t n, std::size_t d,
                                                               double spread, double noise_sigma,
                                                               Rng& rng);

/// Classification objective whose client i owns one DataShard; f_i is the
/// mean cross-entropy over that shard.
class ShardedClassifier : public Problem {
 public:
  std::size_t num_clients() const override { return shards_.size(); }
  double client_loss(std::size_t client, const ParamVector& w) const override;
  ParamVector client_gradient(std::size_t client, const ParamVector& w) const override;
  /// Minibatch gradient (ids drawn with replacement) when batch_size > 0 and
  /// smaller than the shard; otherwise the full-shard gradient.
  ParamVector sampled_gradient(std::size_t client, const ParamVector& w, Rng& rng) const override;
  std::optional<Evaluation> evaluate(const ParamVector& w) const override;

  const Dataset& train() const { return *train_; }
  std::span<const DataShard> shards() const { return shards_; }
  int num_classes() const { return num_classes_; }

 protected:
  ShardedClassifier(std::shared_ptr<const Dataset> train, std::vector<DataShard> shards,
                    std::shared_ptr<const Dataset> test, double noise_sigma,
                    std::size_t batch_size);

  /// Cross-entropy of one example; accumulates scale * gradient into `grad`
  /// when non-null.
  virtual double example_loss(std::span<const double> x, int label, const ParamVector& w,
                              ParamVector* grad, double scale) const = 0;
  virtual int predict(std::span<const double> x, const ParamVector& w) const = 0;

 private:
  double batch_loss(std::span<const std::size_t> ids, const ParamVector& w,
                    ParamVector* grad) const;

  std::shared_ptr<const Dataset> train_;
  std::vector<DataShard> shards_;
  std::shared_ptr<const Dataset> test_;
  std::size_t batch_size_ = 0;
  int num_classes_ = 0;
};

/// Multinomial logistic regression: logits = W x + b.
class SoftmaxRegression final : public ShardedClassifier {
 public:
  SoftmaxRegression(std::shared_ptr<const Dataset> train, std::vector<DataShard> shards,
                    std::shared_ptr<const Dataset> test, double noise_sigma,
                    std::size_t batch_size = 0);

  std::size_t dim() const override;

 protected:
  double example_loss(std::span<const double> x, int label, const ParamVector& w,
                      ParamVector* grad, double scale) const override;
  int predict(std::span<const double> x, const ParamVector& w) const override;
};

/// One tanh hidden layer followed by a softmax output layer.
class TinyMlp final : public ShardedClassifier {
 public:
  TinyMlp(std::shared_ptr<const Dataset> train, std::vector<DataShard> shards,
          std::shared_ptr<const Dataset> test, std::size_t hidden, double noise_sigma,
          std::size_t batch_size = 0, std::uint64_t init_seed = 0);

  std::size_t dim() const override;
  ParamVector initial_point() const override;
  std::size_t hidden() const noexcept { return hidden_; }

 protected:
  double example_loss(std::span<const double> x, int label, const ParamVector& w,
                      ParamVector* grad, double scale) const override;
  int predict(std::span<const double> x, const ParamVector& w) const override;

 private:
  void forward(std::span<const double> x, const ParamVector& w, std::vector<double>& hidden,
               std::vector<double>& logits) const;

  std::size_t hidden_;
  std::uint64_t init_seed_;
};

}  // namespace favano

#endif  // FAVANO_PROBLEM_HPP
