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

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cdp/image.hpp"
#include "cdp/rng.hpp"

namespace cdp {

using PrinterId = std::string;

/// Fake provenance key: attacker printer first, source (defender) printer
/// second. Rendered as "a/d" in file names and reports.
using FakeKey = std::pair<PrinterId, PrinterId>;

inline std::string fake_key_string(const FakeKey& k) { return k.first + "/" + k.second; }

inline FakeKey parse_fake_key(const std::string& s) {
  const auto pos = s.find('/');
  if (pos == std::string::npos || pos == 0 || pos + 1 == s.size())
    throw std::invalid_argument("fake key must look like \"attacker/defender\": " + s);
  return {s.substr(0, pos), s.substr(pos + 1)};
}

/// The defender's binary reference pattern. Pixel 1 is a white (ink free)
/// site, pixel 0 is printed ink.
struct DigitalTemplate {
  Image pixels;
  int id = 0;

  DigitalTemplate() = default;
  DigitalTemplate(Image px, int tpl_id) : pixels(std::move(px)), id(tpl_id) { validate(); }

  int width() const { return pixels.width(); }
  int height() const { return pixels.height(); }

  void validate() const {
    if (pixels.width() < 8 || pixels.height() < 8)
      throw std::invalid_argument("DigitalTemplate: dimensions must be at least 8x8");
    if (!pixels.is_binary())
      throw std::invalid_argument("DigitalTemplate: pixels must be exactly 0 or 1");
  }
};

/// Uniform random binary template with the given white-pixel density.
inline DigitalTemplate make_random_template(int width, int height, double density,
                                            std::uint64_t seed, int id) {
  if (density <= 0.0 || density >= 1.0)
    throw std::invalid_argument("make_random_template: density must lie in (0,1)");
  Image px(width, height);
  auto eng = make_engine(mix_seed({seed, fnv1a64("template"), static_cast<std::uint64_t>(id)}));
  for (auto& v : px.pixels()) v = uniform01(eng) < density ? 1.0 : 0.0;
  return DigitalTemplate(std::move(px), id);
}

enum class Kind { Original, Fake };

/// One print-and-scan result in [0,1] intensity, together with where it
/// came from. Fakes carry the attacker printer id in addition to the
/// defender printer the estimate was sourced from.
struct PrintedCode {
  Image pixels;
  int template_id = 0;
  Kind kind = Kind::Original;
  PrinterId defender_printer;
  std::optional<PrinterId> attacker_printer;

  PrintedCode() = default;
  PrintedCode(Image px, int tpl_id, Kind k, PrinterId defender,
              std::optional<PrinterId> attacker = std::nullopt)
      : pixels(std::move(px)),
        template_id(tpl_id),
        kind(k),
        defender_printer(std::move(defender)),
        attacker_printer(std::move(attacker)) {
    validate();
  }

  void validate() const {
    if (!pixels.in_unit_range())
      throw std::invalid_argument("PrintedCode: pixel values must lie in [0,1]");
    if (kind == Kind::Original && attacker_printer.has_value())
      throw std::invalid_argument("PrintedCode: originals must not name an attacker printer");
    if (kind == Kind::Fake && !attacker_printer.has_value())
      throw std::invalid_argument("PrintedCode: fakes must name an attacker printer");
  }
};

/// One dataset row: a template, its originals keyed by defender printer
/// and its fakes keyed by (attacker, defender) printer pair.
struct CdpTuple {
  DigitalTemplate tpl;
  std::map<PrinterId, PrintedCode> originals;
  std::map<FakeKey, PrintedCode> fakes;

  int id() const { return tpl.id; }

  void add_original(PrintedCode code) {
    check_member(code);
    if (code.kind != Kind::Original)
      throw std::invalid_argument("CdpTuple: add_original requires an original");
    originals.insert_or_assign(code.defender_printer, std::move(code));
  }

  void add_fake(PrintedCode code) {
    check_member(code);
    if (code.kind != Kind::Fake)
      throw std::invalid_argument("CdpTuple: add_fake requires a fake");
    FakeKey key{*code.attacker_printer, code.defender_printer};
    fakes.insert_or_assign(key, std::move(code));
  }

  const PrintedCode& original(const PrinterId& d) const {
    auto it = originals.find(d);
    if (it == originals.end())
      throw std::invalid_argument("tuple " + std::to_string(id()) +
                                  ": no original for printer " + d);
    return it->second;
  }

  const PrintedCode& fake(const FakeKey& key) const {
    auto it = fakes.find(key);
    if (it == fakes.end())
      throw std::invalid_argument("tuple " + std::to_string(id()) + ": no fake " +
                                  fake_key_string(key));
    return it->second;
  }

  /// Checks that the fake key set is exactly attackers x defenders.
  void validate_complete(const std::vector<PrinterId>& defenders,
                         const std::vector<PrinterId>& attackers) const {
    for (const auto& d : defenders)
      if (!originals.count(d))
        throw std::invalid_argument("tuple " + std::to_string(id()) +
                                    ": missing original for printer " + d);
    std::size_t expected = attackers.size() * defenders.size();
    if (fakes.size() != expected)
      throw std::invalid_argument("tuple " + std::to_string(id()) + ": expected " +
                                  std::to_string(expected) + " fakes, found " +
                                  std::to_string(fakes.size()));
    for (const auto& a : attackers)
      for (const auto& d : defenders)
        if (!fakes.count({a, d}))
          throw std::invalid_argument("tuple " + std::to_string(id()) + ": missing fake " +
                                      a + "/" + d);
  }

 private:
  void check_member(const PrintedCode& code) const {
    if (code.template_id != tpl.id)
      throw std::invalid_argument("CdpTuple: member template id mismatch");
    if (!code.pixels.same_shape(tpl.pixels))
      throw std::invalid_argument("CdpTuple: member dimensions differ from template");
  }
};

}  // namespace cdp
