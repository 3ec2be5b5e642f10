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

#include "favano/problem.hpp"

#include <algorithm>
#include <cmath>

#include "favano/errors.hpp"

namespace favano {

Problem::Problem(double noise_sigma) : noise_sigma_(noise_sigma) {
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "Problem: noise_sigma must be >= 0");
}

void Problem::set_dissimilarity(Dissimilarity d) {
  require(d.b_squared >= 1.0, "Problem: dissimilarity B^2 must be >= 1");
  require(d.g_squared >= 0.0, "Problem: dissimilarity G^2 must be >= 0");
  dissimilarity_ = d;
}

ParamVector Problem::sampled_gradient(std::size_t client, const ParamVector& w, Rng&) const {
  return client_gradient(client, w);
}

std::optional<Evaluation> Problem::evaluate(const ParamVector&) const { return std::nullopt; }

ParamVector Problem::initial_point() const { return ParamVector(dim()); }

double Problem::loss(const ParamVector& w) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < num_clients(); ++i) acc += client_loss(i, w);
  return acc / static_cast<double>(num_clients());
}

ParamVector Problem::gradient(const ParamVector& w) const {
  ParamVector acc(dim());
  for (std::size_t i = 0; i < num_clients(); ++i) acc += client_gradient(i, w);
  return (1.0 / static_cast<double>(num_clients())) * std::move(acc);
}

ParamVector stochastic_gradient(const Problem& problem, std::size_t client, const ParamVector& w,
                                Rng& rng) {
  require(client < problem.num_clients(), "stochastic_gradient: client id out of range");
  require(w.dim() == problem.dim(), "stochastic_gradient: dimension mismatch");
  require_finite(w, "stochastic_gradient");
  ParamVector g = problem.sampled_gradient(client, w, rng);
  if (problem.noise_sigma() > 0.0) {
    std::normal_distribution<double> noise(
        0.0, problem.noise_sigma() / std::sqrt(static_cast<double>(w.dim())));
    for (double& v : g.values()) v += noise(rng);
  }
  return g;
}

// ---------------------------------------------------------------------------

QuadraticProblem::QuadraticProblem(std::vector<ParamVector> centers,
                                   std::vector<ParamVector> curvatures, double noise_sigma)
    : Problem(noise_sigma), centers_(std::move(centers)), curvatures_(std::move(curvatures)) {
  require(!centers_.empty(), "QuadraticProblem: need at least one client");
  require(centers_.size() == curvatures_.size(), "QuadraticProblem: centers/curvatures size");
  const std::size_t d = centers_.front().dim();
  require(d >= 1, "QuadraticProblem: dimension must be >= 1");
  double max_h = 0.0;
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    require_same_dim(centers_[i], centers_.front());
    require_same_dim(curvatures_[i], centers_.front());
    for (double h : curvatures_[i].values()) {
      require(h > 0.0, "QuadraticProblem: curvature must be positive");
      max_h = std::max(max_h, h);
    }
  }
  set_smoothness(max_h);

  minimizer_ = ParamVector(d);
  for (std::size_t k = 0; k < d; ++k) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < centers_.size(); ++i) {
      num += curvatures_[i][k] * centers_[i][k];
      den += curvatures_[i][k];
    }
    minimizer_[k] = num / den;
  }

  // Shared curvature H: grad f_i = grad f + H (cbar - c_i), cross terms vanish.
  const bool shared = std::all_of(curvatures_.begin(), curvatures_.end(),
                                  [&](const ParamVector& h) { return h == curvatures_.front(); });
  if (shared) {
    ParamVector mean_center(d);
    for (const auto& c : centers_) mean_center += c;
    mean_center *= 1.0 / static_cast<double>(centers_.size());
    double g2 = 0.0;
    for (const auto& c : centers_) {
      for (std::size_t k = 0; k < d; ++k) {
        const double v = curvatures_.front()[k] * (c[k] - mean_center[k]);
        g2 += v * v;
      }
    }
    set_dissimilarity({g2 / static_cast<double>(centers_.size()), 1.0});
  }
}

namespace {
std::vector<ParamVector> unit_curvatures(const std::vector<ParamVector>& centers) {
  std::vector<ParamVector> out;
  out.reserve(centers.size());
  for (const auto& c : centers) out.emplace_back(c.dim(), 1.0);
  return out;
}
}  // namespace

QuadraticProblem::QuadraticProblem(std::vector<ParamVector> centers, double noise_sigma)
    : QuadraticProblem(centers, unit_curvatures(centers), noise_sigma) {}

double QuadraticProblem::client_loss(std::size_t client, const ParamVector& w) const {
  const auto& c = centers_.at(client);
  const auto& h = curvatures_[client];
  require_same_dim(w, c);
  double acc = 0.0;
  for (std::size_t k = 0; k < w.dim(); ++k) {
    const double diff = w[k] - c[k];
    acc += h[k] * diff * diff;
  }
  return 0.5 * acc;
}

ParamVector QuadraticProblem::client_gradient(std::size_t client, const ParamVector& w) const {
  const auto& c = centers_.at(client);
  const auto& h = curvatures_[client];
  require_same_dim(w, c);
  ParamVector g(w.dim());
  for (std::size_t k = 0; k < w.dim(); ++k) g[k] = h[k] * (w[k] - c[k]);
  return g;
}

std::optional<double> QuadraticProblem::optimal_value() const { return loss(minimizer_); }

std::unique_ptr<QuadraticProblem> make_heterogeneous_quadratic(std::size_t n, std::size_t d,
                                                               double spread, double noise_sigma,
                                                               Rng& rng) {
  require(n >= 1 && d >= 1, "make_heterogeneous_quadratic: n and d must be >= 1");
  std::normal_distribution<double> normal(0.0, spread);
  std::vector<ParamVector> centers;
  centers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ParamVector c(d);
    for (double& v : c.values()) v = normal(rng);
    centers.push_back(std::move(c));
  }
  return std::make_unique<QuadraticProblem>(std::move(centers), noise_sigma);
}

// ---------------------------------------------------------------------------

ShardedClassifier::ShardedClassifier(std::shared_ptr<const Dataset> train,
                                     std::vector<DataShard> shards,
                                     std::shared_ptr<const Dataset> test, double noise_sigma,
                                     std::size_t batch_size)
    : Problem(noise_sigma),
      train_(std::move(train)),
      shards_(std::move(shards)),
      test_(std::move(test)),
      batch_size_(batch_size) {
  require(train_ != nullptr && train_->size() > 0, "ShardedClassifier: empty training set");
  require(!shards_.empty(), "ShardedClassifier: no shards");
  for (const auto& shard : shards_) {
    require(!shard.example_ids.empty(), "ShardedClassifier: empty shard");
    for (std::size_t id : shard.example_ids) {
      require(id < train_->size(), "ShardedClassifier: shard id out of range");
    }
  }
  num_classes_ = train_->num_classes();
  if (test_) {
    require(test_->feature_dim == train_->feature_dim, "ShardedClassifier: test feature dim");
    num_classes_ = std::max(num_classes_, test_->num_classes());
  }
}

double ShardedClassifier::batch_loss(std::span<const std::size_t> ids, const ParamVector& w,
                                     ParamVector* grad) const {
  require(w.dim() == dim(), "ShardedClassifier: dimension mismatch");
  const double scale = 1.0 / static_cast<double>(ids.size());
  double acc = 0.0;
  for (std::size_t id : ids) {
    acc += example_loss(train_->example(id), train_->labels[id], w, grad, scale);
  }
  return acc * scale;
}

double ShardedClassifier::client_loss(std::size_t client, const ParamVector& w) const {
  return batch_loss(shards_.at(client).example_ids, w, nullptr);
}

ParamVector ShardedClassifier::client_gradient(std::size_t client, const ParamVector& w) const {
  ParamVector g(dim());
  batch_loss(shards_.at(client).example_ids, w, &g);
  return g;
}

ParamVector ShardedClassifier::sampled_gradient(std::size_t client, const ParamVector& w,
                                                Rng& rng) const {
  const auto& ids = shards_.at(client).example_ids;
  if (batch_size_ == 0 || batch_size_ >= ids.size()) return client_gradient(client, w);
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  std::vector<std::size_t> batch(batch_size_);
  for (auto& id : batch) id = ids[pick(rng)];
  ParamVector g(dim());
  batch_loss(batch, w, &g);
  return g;
}

std::optional<Evaluation> ShardedClassifier::evaluate(const ParamVector& w) const {
  if (!test_ || test_->size() == 0) return std::nullopt;
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < test_->size(); ++k) {
    const auto x = test_->example(k);
    loss += example_loss(x, test_->labels[k], w, nullptr, 0.0);
    if (predict(x, w) == test_->labels[k]) ++correct;
  }
  const double count = static_cast<double>(test_->size());
  return Evaluation{loss / count, static_cast<double>(correct) / count};
}

namespace {

// Softmax cross-entropy on `logits`; overwrites logits with p - e_label.
double softmax_xent(std::vector<double>& logits, int label) {
  const double top = *std::max_element(logits.begin(), logits.end());
  const double target = logits[static_cast<std::size_t>(label)];
  double z = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    z += v;
  }
  const double loss = top + std::log(z) - target;
  for (double& v : logits) v /= z;
  logits[static_cast<std::size_t>(label)] -= 1.0;
  return loss;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

// Layout: W (classes x features, row-major), then b (classes).
SoftmaxRegression::SoftmaxRegression(std::shared_ptr<const Dataset> train,
                                     std::vector<DataShard> shards,
                                     std::shared_ptr<const Dataset> test, double noise_sigma,
                                     std::size_t batch_size)
    : ShardedClassifier(std::move(train), std::move(shards), std::move(test), noise_sigma,
                        batch_size) {
  // Hessian of softmax cross-entropy is bounded by 1/2 |(x, 1)|^2.
  double max_sq = 0.0;
  for (std::size_t k = 0; k < this->train().size(); ++k) {
    double sq = 1.0;
    for (double v : this->train().example(k)) sq += v * v;
    max_sq = std::max(max_sq, sq);
  }
  set_smoothness(0.5 * max_sq);
}

std::size_t SoftmaxRegression::dim() const {
  const auto classes = static_cast<std::size_t>(num_classes());
  return classes * (train().feature_dim + 1);
}

double SoftmaxRegression::example_loss(std::span<const double> x, int label, const ParamVector& w,
                                       ParamVector* grad, double scale) const {
  const auto classes = static_cast<std::size_t>(num_classes());
  const std::size_t p = x.size();
  const std::size_t bias = classes * p;
  std::vector<double> logits(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    double acc = w[bias + c];
    for (std::size_t j = 0; j < p; ++j) acc += w[c * p + j] * x[j];
    logits[c] = acc;
  }
  const double loss = softmax_xent(logits, label);
  if (grad != nullptr) {
    auto g = grad->values();
    for (std::size_t c = 0; c < classes; ++c) {
      const double r = scale * logits[c];
      for (std::size_t j = 0; j < p; ++j) g[c * p + j] += r * x[j];
      g[bias + c] += r;
    }
  }
  return loss;
}

int SoftmaxRegression::predict(std::span<const double> x, const ParamVector& w) const {
  const auto classes = static_cast<std::size_t>(num_classes());
  const std::size_t p = x.size();
  std::vector<double> logits(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    double acc = w[classes * p + c];
    for (std::size_t j = 0; j < p; ++j) acc += w[c * p + j] * x[j];
    logits[c] = acc;
  }
  return static_cast<int>(argmax(logits));
}

// Layout: W1 (hidden x features), b1 (hidden), W2 (classes x hidden), b2 (classes).
TinyMlp::TinyMlp(std::shared_ptr<const Dataset> train, std::vector<DataShard> shards,
                 std::shared_ptr<const Dataset> test, std::size_t hidden, double noise_sigma,
                 std::size_t batch_size, std::uint64_t init_seed)
    : ShardedClassifier(std::move(train), std::move(shards), std::move(test), noise_sigma,
                        batch_size),
      hidden_(hidden),
      init_seed_(init_seed) {
  require(hidden >= 1, "TinyMlp: hidden width must be >= 1");
}

std::size_t TinyMlp::dim() const {
  const std::size_t p = train().feature_dim;
  const auto classes = static_cast<std::size_t>(num_classes());
  return hidden_ * (p + 1) + classes * (hidden_ + 1);
}

ParamVector TinyMlp::initial_point() const {
  const std::size_t p = train().feature_dim;
  const auto classes = static_cast<std::size_t>(num_classes());
  Rng rng = make_stream(init_seed_, "mlp-init");
  ParamVector w(dim());
  std::normal_distribution<double> first(0.0, 1.0 / std::sqrt(static_cast<double>(p)));
  std::normal_distribution<double> second(0.0, 1.0 / std::sqrt(static_cast<double>(hidden_)));
  for (std::size_t k = 0; k < hidden_ * p; ++k) w[k] = first(rng);
  const std::size_t w2 = hidden_ * (p + 1);
  for (std::size_t k = 0; k < classes * hidden_; ++k) w[w2 + k] = second(rng);
  return w;
}

void TinyMlp::forward(std::span<const double> x, const ParamVector& w, std::vector<double>& hidden,
                      std::vector<double>& logits) const {
  const std::size_t p = x.size();
  const auto classes = static_cast<std::size_t>(num_classes());
  const std::size_t b1 = hidden_ * p;
  const std::size_t w2 = b1 + hidden_;
  const std::size_t b2 = w2 + classes * hidden_;
  hidden.assign(hidden_, 0.0);
  for (std::size_t h = 0; h < hidden_; ++h) {
    double acc = w[b1 + h];
    const double* row = &w.values()[h * p];
    for (std::size_t j = 0; j < p; ++j) acc += row[j] * x[j];
    hidden[h] = std::tanh(acc);
  }
  logits.assign(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    double acc = w[b2 + c];
    for (std::size_t h = 0; h < hidden_; ++h) acc += w[w2 + c * hidden_ + h] * hidden[h];
    logits[c] = acc;
  }
}

double TinyMlp::example_loss(std::span<const double> x, int label, const ParamVector& w,
                             ParamVector* grad, double scale) const {
  std::vector<double> hidden;
  std::vector<double> logits;
  forward(x, w, hidden, logits);
  const double loss = softmax_xent(logits, label);
  if (grad == nullptr) return loss;

  const std::size_t p = x.size();
  const auto classes = static_cast<std::size_t>(num_classes());
  const std::size_t b1 = hidden_ * p;
  const std::size_t w2 = b1 + hidden_;
  const std::size_t b2 = w2 + classes * hidden_;
  auto g = grad->values();
  std::vector<double> back(hidden_, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    const double r = scale * logits[c];
    for (std::size_t h = 0; h < hidden_; ++h) {
      g[w2 + c * hidden_ + h] += r * hidden[h];
      back[h] += r * w[w2 + c * hidden_ + h];
    }
    g[b2 + c] += r;
  }
  for (std::size_t h = 0; h < hidden_; ++h) {
    const double r = back[h] * (1.0 - hidden[h] * hidden[h]);
    for (std::size_t j = 0; j < p; ++j) g[h * p + j] += r * x[j];
    g[b1 + h] += r;
  }
  return loss;
}

int TinyMlp::predict(std::span<const double> x, const ParamVector& w) const {
  std::vector<double> hidden;
  std::vector<double> logits;
  forward(x, w, hidden, logits);
  return static_cast<int>(argmax(logits));
}

}  // namespace favano
