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

#ifndef FAVANO_RNG_HPP
#define FAVANO_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace favano {

using Rng = std::mt19937_64;

// All randomness in a run is derived from one master seed. A stream is
// identified by a name plus up to two integer keys (client id, round, ...),
// so adding a consumer never perturbs the draws of another.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                    std::uint64_t key1 = 0, std::uint64_t key2 = 0) noexcept {
  std::uint64_t h = splitmix64(master ^ fnv1a(stream));
  h = splitmix64(h ^ key1);
  return splitmix64(h ^ (key2 * 0xd6e8feb86659fd93ULL));
}

inline Rng make_stream(std::uint64_t master, std::string_view stream, std::uint64_t key1 = 0,
                       std::uint64_t key2 = 0) {
  return Rng(derive_seed(master, stream, key1, key2));
}

}  // namespace favano

#endif  // FAVANO_RNG_HPP
