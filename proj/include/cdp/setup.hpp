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

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cdp/types.hpp"

namespace cdp {

/// One experiment condition: which originals and fakes the defender trains
/// on, and the list of (d_test, a_test) evaluation cells. A cell scores
/// originals from printer d_test against fakes printed a_test/d_test.
struct SetupSpec {
  std::string name;
  std::vector<PrinterId> d_train;
  std::vector<PrinterId> a_train;
  std::vector<std::pair<PrinterId, PrinterId>> cells;  // (d_test, a_test)

  void validate(const std::vector<PrinterId>& known_defenders,
                const std::vector<PrinterId>& known_attackers) const {
    auto known = [](const std::vector<PrinterId>& ids, const PrinterId& id) {
      return std::find(ids.begin(), ids.end(), id) != ids.end();
    };
    if (name.empty()) throw std::invalid_argument("SetupSpec: empty name");
    if (d_train.empty()) throw std::invalid_argument("SetupSpec " + name + ": empty d_train");
    if (a_train.empty())
      throw std::invalid_argument("SetupSpec " + name +
                                  ": a_train must name at least one fake source");
    if (cells.empty()) throw std::invalid_argument("SetupSpec " + name + ": no test cells");
    for (const auto& d : d_train)
      if (!known(known_defenders, d))
        throw std::invalid_argument("SetupSpec " + name + ": unknown defender printer " + d);
    for (const auto& a : a_train)
      if (!known(known_attackers, a))
        throw std::invalid_argument("SetupSpec " + name + ": unknown attacker printer " + a);
    for (const auto& [d, a] : cells) {
      if (!known(known_defenders, d))
        throw std::invalid_argument("SetupSpec " + name + ": unknown test defender " + d);
      if (!known(known_attackers, a))
        throw std::invalid_argument("SetupSpec " + name + ": unknown test attacker " + a);
    }
  }
};

/// Builds the named study presets over the first two configured printers
/// (letters A and B refer to list positions). setup1_* trains on a single
/// fake source, setup2_* on both sources for one defender printer, setup3
/// on everything.
inline std::vector<SetupSpec> make_setup_presets(const std::vector<PrinterId>& defenders,
                                                 const std::vector<PrinterId>& attackers) {
  if (defenders.empty() || attackers.empty())
    throw std::invalid_argument("make_setup_presets: need at least one printer per side");
  std::vector<SetupSpec> out;
  const PrinterId dA = defenders[0];
  const PrinterId aA = attackers[0];

  auto cells_for = [&](const PrinterId& d) {
    std::vector<std::pair<PrinterId, PrinterId>> cells;
    for (const auto& a : attackers) cells.emplace_back(d, a);
    return cells;
  };

  out.push_back({"setup1_AA", {dA}, {aA}, cells_for(dA)});
  if (attackers.size() >= 2) out.push_back({"setup1_AB", {dA}, {attackers[1]}, cells_for(dA)});
  if (defenders.size() >= 2) {
    const PrinterId dB = defenders[1];
    out.push_back({"setup1_BA", {dB}, {aA}, cells_for(dB)});
    if (attackers.size() >= 2) out.push_back({"setup1_BB", {dB}, {attackers[1]}, cells_for(dB)});
    out.push_back({"setup2_B", {dB}, attackers, cells_for(dB)});
  }
  out.push_back({"setup2_A", {dA}, attackers, cells_for(dA)});
  if (defenders.size() >= 2) {
    std::vector<std::pair<PrinterId, PrinterId>> all_cells;
    for (const auto& d : defenders) {
      auto c = cells_for(d);
      all_cells.insert(all_cells.end(), c.begin(), c.end());
    }
    out.push_back({"setup3", defenders, attackers, all_cells});
  }

  // Table order: setup1 blocks, then setup2, then setup3.
  std::stable_sort(out.begin(), out.end(),
                   [](const SetupSpec& x, const SetupSpec& y) { return x.name < y.name; });
  return out;
}

inline const SetupSpec& find_setup(const std::vector<SetupSpec>& setups, const std::string& name) {
  for (const auto& s : setups)
    if (s.name == name) return s;
  std::string names;
  for (const auto& s : setups) names += (names.empty() ? "" : ", ") + s.name;
  throw std::invalid_argument("unknown setup \"" + name + "\" (available: " + names + ")");
}

}  // namespace cdp
