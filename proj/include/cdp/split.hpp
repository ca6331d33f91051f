// Copyright 2026 The cdpbench Authors
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

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cdp/rng.hpp"

namespace cdp {

struct SplitIds {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

/// Seeded shuffle of the tuple ids followed by a contiguous partition.
/// Train and validation sizes are floors of their fractions; the
/// remainder goes to test.
inline SplitIds split_dataset(std::vector<int> ids, const std::array<double, 3>& fractions,
                              std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("split_dataset: negative fraction");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split_dataset: fractions must sum to 1");
  if (ids.size() < 10) throw std::invalid_argument("split_dataset: need at least 10 tuples");

  auto eng = make_engine(mix_seed({seed, fnv1a64("split")}));
  deterministic_shuffle(ids, eng);

  const std::size_t n = ids.size();
  const std::size_t n_train = static_cast<std::size_t>(std::floor(fractions[0] * n));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(fractions[1] * n));

  SplitIds out;
  out.train.assign(ids.begin(), ids.begin() + n_train);
  out.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  out.test.assign(ids.begin() + n_train + n_val, ids.end());
  return out;
}

inline SplitIds split_dataset(int n_tuples, const std::array<double, 3>& fractions,
                              std::uint64_t seed) {
  std::vector<int> ids(n_tuples);
  for (int i = 0; i < n_tuples; ++i) ids[i] = i + 1;
  return split_dataset(std::move(ids), fractions, seed);
}

inline void require_disjoint(const SplitIds& s) {
  std::vector<int> all;
  all.insert(all.end(), s.train.begin(), s.train.end());
  all.insert(all.end(), s.val.begin(), s.val.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::vector<int> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("split: train/val/test tuple ids overlap");
}

}  // namespace cdp
