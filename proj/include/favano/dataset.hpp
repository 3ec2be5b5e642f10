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

#ifndef FAVANO_DATASET_HPP
#define FAVANO_DATASET_HPP

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "favano/rng.hpp"

namespace favano {

/// Labelled examples with a common feature dimension, stored row-major.
struct Dataset {
  std::size_t feature_dim = 0;
  std::vector<double> features;  // size() * feature_dim
  std::vector<int> labels;
  // Image geometry when loaded from IDX; zero otherwise.
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> example(std::size_t id) const {
    return {features.data() + id * feature_dim, feature_dim};
  }
  int num_classes() const;
  std::vector<std::size_t> label_histogram() const;
};

/// The examples owned by one client, as ids into the parent Dataset.
struct DataShard {
  std::size_t owner = 0;
  std::vector<std::size_t> example_ids;
};

enum class SplitMode { iid, two_class };

/// Partitions `data` across `n` clients.
///
/// iid: a uniform shuffle dealt out in contiguous blocks, remainder handed
/// out one extra example per shard starting from shard 0.
///
/// two_class: every client draws two distinct labels from a pool that
/// holds each label once per pass; the pool is refilled when it runs dry.
/// Each label's examples are then divided evenly among the clients that
/// drew it.
std::vector<DataShard> split_dataset(const Dataset& data, std::size_t n, SplitMode mode, Rng& rng);

/// JSON text: [{"owner": i, "size": m, "labels": {...}, "example_ids": [...]}, ...]
std::string shard_manifest_json(const Dataset& data, std::span<const DataShard> shards);

class IdxError : public std::runtime_error {
 public:
  enum class Kind { open_failed, bad_magic, truncated, count_mismatch };

  IdxError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Reads an IDX3 image file (magic 0x00000803) and IDX1 label file (magic
/// 0x00000801). Pixels are scaled to [0, 1] by dividing by 255.
Dataset load_idx_dataset(const std::filesystem::path& images_path,
                         const std::filesystem::path& labels_path);

/// Isotropic Gaussian clusters, one per class. Class centres are drawn from
/// N(0, separation^2 I) with `center_seed`, samples with `rng`, so a train
/// and a test set drawn with the same centre seed share the same classes.
Dataset make_gaussian_mixture(std::size_t count, std::size_t feature_dim, int num_classes,
                              double separation, std::uint64_t center_seed, Rng& rng);

}  // namespace favano

#endif  // FAVANO_DATASET_HPP
