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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <vector>

#include "doctest.h"
#include "favano/dataset.hpp"
#include "favano/errors.hpp"
#include "favano/param_vector.hpp"
#include "favano/problem.hpp"
#include "favano/rng.hpp"

using namespace favano;

namespace {

// Central differences on the client loss, compared coordinate by coordinate.
void check_gradient(const Problem& problem, std::size_t client, const ParamVector& w) {
  const double eps = 1e-5;
  const ParamVector g = problem.client_gradient(client, w);
  REQUIRE(g.dim() == w.dim());
  for (std::size_t k = 0; k < w.dim(); ++k) {
    ParamVector up = w, down = w;
    up[k] += eps;
    down[k] -= eps;
    const double fd = (problem.client_loss(client, up) - problem.client_loss(client, down)) / (2 * eps);
    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
  }
}

ParamVector random_vector(std::size_t d, double scale, Rng& rng) {
  std::normal_distribution<double> normal(0.0, scale);
  ParamVector v(d);
  for (double& x : v.values()) x = normal(rng);
  return v;
}

struct Mixture {
  std::shared_ptr<const Dataset> train;
  std::shared_ptr<const Dataset> test;
  std::vector<DataShard> shards;
};

Mixture small_mixture(std::size_t n, SplitMode mode, std::uint64_t seed) {
  Rng rng(seed);
  auto train = std::make_shared<Dataset>(make_gaussian_mixture(60 * n, 3, 3, 1.5, seed, rng));
  auto test = std::make_shared<Dataset>(make_gaussian_mixture(90, 3, 3, 1.5, seed, rng));
  Mixture m{train, test, split_dataset(*train, n, mode, rng)};
  return m;
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_idx_images(const std::filesystem::path& path, std::uint32_t magic, std::uint32_t count,
                      std::uint32_t rows, std::uint32_t cols, std::size_t pixels) {
  std::ofstream out(path, std::ios::binary);
  write_be32(out, magic);
  write_be32(out, count);
  write_be32(out, rows);
  write_be32(out, cols);
  for (std::size_t k = 0; k < pixels; ++k) out.put(static_cast<char>(k % 2 ? 255 : k % 7));
}

void write_idx_labels(const std::filesystem::path& path, std::uint32_t count,
                      const std::vector<unsigned char>& labels) {
  std::ofstream out(path, std::ios::binary);
  write_be32(out, 0x801);
  write_be32(out, count);
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

}  // namespace

TEST_CASE("param vector arithmetic") {
  ParamVector a{1.0, 2.0};
  ParamVector b{3.0, -1.0};
  CHECK(a + b == ParamVector{4.0, 1.0});
  CHECK(a - b == ParamVector{-2.0, 3.0});
  CHECK(2.0 * a == ParamVector{2.0, 4.0});
  CHECK(dot(a, b) == 1.0);
  CHECK(squared_distance(a, b) == 13.0);
  a.axpy(0.5, b);
  CHECK(a == ParamVector{2.5, 1.5});
  CHECK_THROWS_AS(a + ParamVector(3), ContractViolation);
  CHECK_THROWS_AS((ParamVector{NAN}), ContractViolation);
}

TEST_CASE("quadratic gradients") {
  QuadraticProblem centered({ParamVector{1.0, -2.0}}, 0.0);
  CHECK(centered.client_gradient(0, ParamVector{1.0, -2.0}) == ParamVector{0.0, 0.0});

  QuadraticProblem origin({ParamVector{0.0, 0.0}}, 0.0);
  CHECK(origin.client_gradient(0, ParamVector{2.0, 0.0}) == ParamVector{2.0, 0.0});
  CHECK(origin.client_loss(0, ParamVector{2.0, 0.0}) == 2.0);

  Rng rng(5);
  auto hetero = make_heterogeneous_quadratic(4, 5, 1.0, 0.0, rng);
  ParamVector grad_at_min = hetero->gradient(*hetero->minimizer());
  CHECK(squared_norm(grad_at_min) < 1e-24);
  CHECK(hetero->loss(*hetero->minimizer()) == doctest::Approx(*hetero->optimal_value()));
  CHECK(hetero->smoothness().value() == 1.0);
  CHECK(hetero->dissimilarity().has_value());
}

TEST_CASE("finite differences match analytic gradients") {
  Rng rng(11);
  SUBCASE("diagonal quadratic") {
    std::vector<ParamVector> centers{random_vector(4, 1.0, rng), random_vector(4, 1.0, rng)};
    std::vector<ParamVector> curv{ParamVector{1.0, 2.0, 0.5, 3.0}, ParamVector{0.2, 1.0, 1.0, 4.0}};
    QuadraticProblem problem(centers, curv, 0.0);
    for (std::size_t i = 0; i < 2; ++i) check_gradient(problem, i, random_vector(4, 1.0, rng));
  }
  SUBCASE("softmax regression") {
    auto m = small_mixture(3, SplitMode::iid, 3);
    SoftmaxRegression problem(m.train, m.shards, m.test, 0.0);
    for (std::size_t i = 0; i < 3; ++i) check_gradient(problem, i, random_vector(problem.dim(), 0.5, rng));
  }
  SUBCASE("tiny mlp") {
    auto m = small_mixture(2, SplitMode::iid, 4);
    TinyMlp problem(m.train, m.shards, m.test, 5, 0.0, 0, 9);
    check_gradient(problem, 0, problem.initial_point());
    check_gradient(problem, 1, random_vector(problem.dim(), 0.5, rng));
  }
}

TEST_CASE("noisy logistic gradient is unbiased") {
  auto m = small_mixture(2, SplitMode::iid, 21);
  for (std::size_t batch : {std::size_t{0}, std::size_t{8}}) {
    SoftmaxRegression problem(m.train, m.shards, m.test, 0.1, batch);
    Rng rng(17);
    const ParamVector w = random_vector(problem.dim(), 0.3, rng);
    const ParamVector exact = problem.client_gradient(0, w);
    const std::size_t draws = 100000;
    std::vector<double> sum(w.dim()), sum_sq(w.dim());
    for (std::size_t t = 0; t < draws; ++t) {
      const ParamVector g = stochastic_gradient(problem, 0, w, rng);
      for (std::size_t k = 0; k < w.dim(); ++k) {
        sum[k] += g[k];
        sum_sq[k] += g[k] * g[k];
      }
    }
    for (std::size_t k = 0; k < w.dim(); ++k) {
      const double mean = sum[k] / draws;
      const double var = sum_sq[k] / draws - mean * mean;
      CHECK(std::abs(mean - exact[k]) <= 4.0 * std::sqrt(var / draws));
    }
  }
}

TEST_CASE("classifier evaluation") {
  auto m = small_mixture(2, SplitMode::iid, 2);
  SoftmaxRegression problem(m.train, m.shards, m.test, 0.0);
  auto eval = problem.evaluate(problem.initial_point());
  REQUIRE(eval.has_value());
  CHECK(eval->loss == doctest::Approx(std::log(3.0)));
  CHECK(eval->accuracy >= 0.0);
  CHECK(eval->accuracy <= 1.0);
  QuadraticProblem q({ParamVector{0.0}}, 0.0);
  CHECK_FALSE(q.evaluate(ParamVector{1.0}).has_value());
}

TEST_CASE("iid split deals equal shards") {
  Dataset data;
  data.feature_dim = 1;
  for (int k = 0; k < 100; ++k) {
    data.features.push_back(k);
    data.labels.push_back(k % 10);
  }
  Rng rng(1);
  auto shards = split_dataset(data, 4, SplitMode::iid, rng);
  REQUIRE(shards.size() == 4);
  std::set<std::size_t> seen;
  for (const auto& s : shards) {
    CHECK(s.example_ids.size() == 25);
    seen.insert(s.example_ids.begin(), s.example_ids.end());
  }
  CHECK(seen.size() == 100);

  auto uneven = split_dataset(data, 7, SplitMode::iid, rng);
  std::size_t total = 0;
  for (const auto& s : uneven) {
    CHECK(s.example_ids.size() >= 14);
    CHECK(s.example_ids.size() <= 15);
    total += s.example_ids.size();
  }
  CHECK(total == 100);
  CHECK_THROWS_AS(split_dataset(data, 101, SplitMode::iid, rng), ContractViolation);
  CHECK_THROWS_AS(split_dataset(Dataset{}, 1, SplitMode::iid, rng), ContractViolation);
}

TEST_CASE("two-class split") {
  auto labelled = [](std::size_t per_class, int classes) {
    Dataset d;
    d.feature_dim = 1;
    for (int c = 0; c < classes; ++c) {
      for (std::size_t k = 0; k < per_class; ++k) {
        d.features.push_back(0.0);
        d.labels.push_back(c);
      }
    }
    return d;
  };
  auto labels_of = [](const Dataset& d, const DataShard& s) {
    std::set<int> out;
    for (auto id : s.example_ids) out.insert(d.labels[id]);
    return out;
  };

  SUBCASE("n=5 covers all ten labels") {
    Dataset data = labelled(100, 10);
    Rng rng(3);
    auto shards = split_dataset(data, 5, SplitMode::two_class, rng);
    std::set<int> covered;
    std::set<std::size_t> ids;
    for (const auto& s : shards) {
      auto l = labels_of(data, s);
      CHECK(l.size() == 2);
      covered.insert(l.begin(), l.end());
      for (auto id : s.example_ids) CHECK(ids.insert(id).second);
    }
    CHECK(covered.size() == 10);
    CHECK(ids.size() == 1000);
  }
  SUBCASE("mnist-sized split") {
    Dataset data = labelled(6000, 10);
    Rng rng(8);
    auto shards = split_dataset(data, 100, SplitMode::two_class, rng);
    std::size_t total = 0;
    for (const auto& s : shards) {
      CHECK(labels_of(data, s).size() <= 2);
      CHECK(s.example_ids.size() >= 599);
      CHECK(s.example_ids.size() <= 601);
      total += s.example_ids.size();
    }
    CHECK(total == 60000);
  }
  SUBCASE("too few clients to own every label") {
    Dataset data = labelled(10, 10);
    Rng rng(3);
    CHECK_THROWS_AS(split_dataset(data, 4, SplitMode::two_class, rng), ContractViolation);
  }
  SUBCASE("manifest lists each shard") {
    Dataset data = labelled(10, 4);
    Rng rng(3);
    auto shards = split_dataset(data, 2, SplitMode::two_class, rng);
    auto json = shard_manifest_json(data, shards);
    CHECK(json.find("\"owner\"") != std::string::npos);
    CHECK(json.find("\"example_ids\"") != std::string::npos);
  }
}

TEST_CASE("idx loader") {
  const auto dir = std::filesystem::temp_directory_path() / "favano_idx_test";
  std::filesystem::create_directories(dir);
  const auto images = dir / "images.idx3";
  const auto labels = dir / "labels.idx1";

  write_idx_images(images, 0x803, 4, 3, 2, 4 * 6);
  write_idx_labels(labels, 4, {7, 1, 0, 9});
  Dataset data = load_idx_dataset(images, labels);
  CHECK(data.size() == 4);
  CHECK(data.rows == 3);
  CHECK(data.cols == 2);
  CHECK(data.feature_dim == 6);
  CHECK(data.example(0)[1] == 1.0);
  CHECK(data.example(0)[2] == doctest::Approx(2.0 / 255.0));
  CHECK(data.labels == std::vector<int>{7, 1, 0, 9});

  auto kind_of = [&](const std::filesystem::path& img, const std::filesystem::path& lab) {
    try {
      load_idx_dataset(img, lab);
    } catch (const IdxError& e) {
      return e.kind();
    }
    FAIL("expected IdxError");
    return IdxError::Kind::open_failed;
  };
  CHECK(kind_of(dir / "missing", labels) == IdxError::Kind::open_failed);
  write_idx_images(images, 0x801, 4, 3, 2, 24);
  CHECK(kind_of(images, labels) == IdxError::Kind::bad_magic);
  write_idx_images(images, 0x803, 4, 3, 2, 20);
  CHECK(kind_of(images, labels) == IdxError::Kind::truncated);
  write_idx_images(images, 0x803, 4, 3, 2, 24);
  write_idx_labels(labels, 3, {7, 1, 0});
  CHECK(kind_of(images, labels) == IdxError::Kind::count_mismatch);
  std::filesystem::remove_all(dir);
}

TEST_CASE("official mnist files when present") {
  const char* env = std::getenv("FAVANO_MNIST_DIR");
  const std::filesystem::path dir = env ? env : "data/mnist";
  const auto images = dir / "train-images-idx3-ubyte";
  const auto labels = dir / "train-labels-idx1-ubyte";
  if (!std::filesystem::exists(images) || !std::filesystem::exists(labels)) {
    MESSAGE("MNIST files not found; skipped");
    return;
  }
  Dataset data = load_idx_dataset(images, labels);
  CHECK(data.size() == 60000);
  CHECK(data.rows == 28);
  CHECK(data.cols == 28);
}
