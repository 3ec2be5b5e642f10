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

#include "favano/dataset.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <set>

#include "favano/errors.hpp"
#include "json.hpp"

namespace favano {

int Dataset::num_classes() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

std::vector<std::size_t> Dataset::label_histogram() const {
  std::vector<std::size_t> hist(static_cast<std::size_t>(num_classes()), 0);
  for (int y : labels) ++hist[static_cast<std::size_t>(y)];
  return hist;
}

namespace {

// Deals `ids` into `parts` nearly equal blocks; block j gets one extra
// element when j < ids.size() % parts.
std::vector<std::vector<std::size_t>> deal(const std::vector<std::size_t>& ids, std::size_t parts) {
  std::vector<std::vector<std::size_t>> out(parts);
  const std::size_t base = ids.size() / parts;
  const std::size_t extra = ids.size() % parts;
  std::size_t pos = 0;
  for (std::size_t j = 0; j < parts; ++j) {
    const std::size_t len = base + (j < extra ? 1 : 0);
    out[j].assign(ids.begin() + static_cast<std::ptrdiff_t>(pos),
                  ids.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

std::vector<std::size_t> shuffled_ids(std::size_t count, Rng& rng) {
  std::vector<std::size_t> ids(count);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::shuffle(ids.begin(), ids.end(), rng);
  return ids;
}

std::vector<DataShard> split_iid(const Dataset& data, std::size_t n, Rng& rng) {
  auto blocks = deal(shuffled_ids(data.size(), rng), n);
  std::vector<DataShard> shards(n);
  for (std::size_t i = 0; i < n; ++i) {
    shards[i].owner = i;
    shards[i].example_ids = std::move(blocks[i]);
  }
  return shards;
}

std::vector<DataShard> split_two_class(const Dataset& data, std::size_t n, Rng& rng) {
  std::vector<int> classes;
  {
    std::set<int> present(data.labels.begin(), data.labels.end());
    classes.assign(present.begin(), present.end());
  }
  require(classes.size() >= 2, "split_dataset: two-class mode needs at least 2 distinct labels");
  require(2 * n >= classes.size(),
          "split_dataset: two-class mode needs 2n >= number of labels so every example is owned");

  std::vector<int> pool;
  auto refill = [&] {
    pool = classes;
    std::shuffle(pool.begin(), pool.end(), rng);
  };
  auto take = [&](int exclude) {
    if (pool.empty()) refill();
    auto it = std::find_if(pool.begin(), pool.end(), [&](int c) { return c != exclude; });
    const int c = *it;
    pool.erase(it);
    return c;
  };

  std::map<int, std::vector<std::size_t>> holders;
  for (std::size_t i = 0; i < n; ++i) {
    const int first = take(-1);
    const int second = take(first);
    holders[first].push_back(i);
    holders[second].push_back(i);
  }

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t id : shuffled_ids(data.size(), rng)) by_class[data.labels[id]].push_back(id);

  std::vector<DataShard> shards(n);
  for (std::size_t i = 0; i < n; ++i) shards[i].owner = i;
  for (const auto& [label, owners] : holders) {
    auto blocks = deal(by_class[label], owners.size());
    for (std::size_t j = 0; j < owners.size(); ++j) {
      auto& ids = shards[owners[j]].example_ids;
      ids.insert(ids.end(), blocks[j].begin(), blocks[j].end());
    }
  }
  for (auto& shard : shards) std::sort(shard.example_ids.begin(), shard.example_ids.end());
  return shards;
}

}  // namespace

std::vector<DataShard> split_dataset(const Dataset& data, std::size_t n, SplitMode mode, Rng& rng) {
  require(data.size() > 0, "split_dataset: empty dataset");
  require(n >= 1, "split_dataset: need at least one client");
  require(n <= data.size(), "split_dataset: more clients than examples");
  return mode == SplitMode::iid ? split_iid(data, n, rng) : split_two_class(data, n, rng);
}

std::string shard_manifest_json(const Dataset& data, std::span<const DataShard> shards) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& shard : shards) {
    std::map<std::string, std::size_t> hist;
    for (std::size_t id : shard.example_ids) ++hist[std::to_string(data.labels[id])];
    out.push_back({{"owner", shard.owner},
                   {"size", shard.example_ids.size()},
                   {"labels", hist},
                   {"example_ids", shard.example_ids}});
  }
  return out.dump(1);
}

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::open_failed, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    throw IdxError(IdxError::Kind::truncated, "truncated header in " + path.string());
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

}  // namespace

Dataset load_idx_dataset(const std::filesystem::path& images_path,
                         const std::filesystem::path& labels_path) {
  const auto images = read_bytes(images_path);
  const auto labels = read_bytes(labels_path);

  if (read_be32(images, 0, images_path) != kImageMagic) {
    throw IdxError(IdxError::Kind::bad_magic, "bad image magic in " + images_path.string());
  }
  if (read_be32(labels, 0, labels_path) != kLabelMagic) {
    throw IdxError(IdxError::Kind::bad_magic, "bad label magic in " + labels_path.string());
  }
  const std::size_t count = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t label_count = read_be32(labels, 4, labels_path);
  if (count != label_count) {
    throw IdxError(IdxError::Kind::count_mismatch,
                   "image count " + std::to_string(count) + " != label count " +
                       std::to_string(label_count));
  }
  const std::size_t pixels = rows * cols;
  if (images.size() < 16 + count * pixels) {
    throw IdxError(IdxError::Kind::truncated, "truncated pixel data in " + images_path.string());
  }
  if (labels.size() < 8 + count) {
    throw IdxError(IdxError::Kind::truncated, "truncated label data in " + labels_path.string());
  }

  Dataset data;
  data.rows = rows;
  data.cols = cols;
  data.feature_dim = pixels;
  data.features.resize(count * pixels);
  for (std::size_t k = 0; k < count * pixels; ++k) data.features[k] = images[16 + k] / 255.0;
  data.labels.resize(count);
  for (std::size_t k = 0; k < count; ++k) data.labels[k] = labels[8 + k];
  return data;
}

Dataset make_gaussian_mixture(std::size_t count, std::size_t feature_dim, int num_classes,
                              double separation, std::uint64_t center_seed, Rng& rng) {
  require(count > 0 && feature_dim > 0 && num_classes >= 1,
          "make_gaussian_mixture: empty shape");
  Rng center_rng(center_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> centers(static_cast<std::size_t>(num_classes) * feature_dim);
  for (double& c : centers) c = separation * normal(center_rng);

  // Balanced labels, random order.
  std::vector<int> labels(count);
  for (std::size_t k = 0; k < count; ++k) labels[k] = static_cast<int>(k % num_classes);
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset data;
  data.feature_dim = feature_dim;
  data.labels = std::move(labels);
  data.features.resize(count * feature_dim);
  for (std::size_t k = 0; k < count; ++k) {
    const double* center = centers.data() + static_cast<std::size_t>(data.labels[k]) * feature_dim;
    for (std::size_t j = 0; j < feature_dim; ++j) {
      data.features[k * feature_dim + j] = center[j] + normal(rng);
    }
  }
  return data;
}

}  // namespace favano
