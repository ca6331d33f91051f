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

#include <string>
#include <vector>

#include "cdp/attack.hpp"
#include "cdp/channel.hpp"
#include "cdp/types.hpp"

namespace cdp {

/// Synthesizes n tuples: a fresh random template each, printed once per
/// defender profile. Fakes are added separately by attack_tuples.
inline std::vector<CdpTuple> generate_tuples(int n, int size, double density,
                                             const std::vector<PrinterProfile>& defenders,
                                             std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("generate_tuples: n must be positive");
  if (defenders.empty()) throw std::invalid_argument("generate_tuples: no defender profiles");
  for (const auto& p : defenders) p.validate();
  std::vector<CdpTuple> tuples;
  tuples.reserve(n);
  for (int i = 1; i <= n; ++i) {
    CdpTuple t;
    t.tpl = make_random_template(size, size, density, seed, i);
    for (const auto& p : defenders)
      t.add_original(print_and_scan(t.tpl, p, print_seed_for(seed, i, "x:" + p.id)));
    tuples.push_back(std::move(t));
  }
  return tuples;
}

/// Runs the estimation-and-reprint attack over every tuple, producing the
/// full |attackers| x |defenders| fake grid.
inline void attack_tuples(std::vector<CdpTuple>& tuples, const EstimatorSpec& estimator,
                          const std::vector<PrinterProfile>& attacker_profiles,
                          std::uint64_t seed,
                          const std::vector<PrinterProfile>* defender_profiles = nullptr,
                          std::uint64_t dataset_seed = 0) {
  for (auto& t : tuples)
    t = fabricate_fakes(t, estimator, attacker_profiles, seed, defender_profiles, dataset_seed);
}

}  // namespace cdp
