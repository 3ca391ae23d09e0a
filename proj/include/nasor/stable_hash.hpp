// Copyright 2026 The Nasor Engine Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NASOR_STABLE_HASH_HPP_
#define NASOR_STABLE_HASH_HPP_

#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

namespace nasor {

// Deterministic hashing used for scheduler interleavings and fault draws.
// std::hash is implementation-defined, so reproducible runs need a pinned
// mixer.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

// Uniform draw in [0, 1) derived from a hash value.
inline double hash_to_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Fisher-Yates permutation of {0..n-1} keyed by `key`.
inline std::vector<std::size_t> keyed_permutation(std::size_t n,
                                                  std::uint64_t key) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::uint64_t state = key;
  for (std::size_t i = n; i > 1; --i) {
    state = splitmix64(state);
    std::size_t j = static_cast<std::size_t>(state % i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

}  // namespace nasor

#endif  // NASOR_STABLE_HASH_HPP_
