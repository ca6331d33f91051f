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

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdp/attack.hpp"
#include "cdp/authenticator.hpp"
#include "cdp/channel.hpp"
#include "cdp/ini.hpp"
#include "cdp/setup.hpp"

namespace cdp {

/// Everything a run needs: virtual printers, who prints and who attacks,
/// the estimator behind the attack, and training hyperparameters.
struct RunConfig {
  std::vector<PrinterProfile> profiles;
  std::vector<PrinterId> defenders;
  std::vector<PrinterId> attackers;
  EstimatorSpec estimator;
  TrainConfig train;

  const PrinterProfile& profile(const PrinterId& id) const {
    for (const auto& p : profiles)
      if (p.id == id) return p;
    throw std::invalid_argument("config: unknown printer profile \"" + id + "\"");
  }

  std::vector<PrinterProfile> profiles_for(const std::vector<PrinterId>& ids) const {
    std::vector<PrinterProfile> out;
    for (const auto& id : ids) out.push_back(profile(id));
    return out;
  }

  void validate() const {
    if (profiles.empty()) throw std::invalid_argument("config: no printer profiles");
    for (const auto& p : profiles) p.validate();
    for (std::size_t i = 0; i < profiles.size(); ++i)
      for (std::size_t j = i + 1; j < profiles.size(); ++j)
        if (profiles[i].id == profiles[j].id)
          throw std::invalid_argument("config: duplicate printer id " + profiles[i].id);
    if (defenders.empty()) throw std::invalid_argument("config: no defender printers");
    for (const auto& d : defenders) profile(d);
    for (const auto& a : attackers) profile(a);
    estimator.validate();
    train.validate();
  }
};

/// Two virtual presses: vpA is the milder channel, vpB spreads and blurs
/// more and scans with a darker gamma. Both destroy enough of the pattern
/// that a thresholding attacker keeps a measurable error rate.
inline RunConfig default_run_config() {
  RunConfig cfg;
  cfg.profiles = {
      {"vpA", 1.0, 0.8, 0.05, 1.0, 11, std::nullopt},
      {"vpB", 1.1, 0.9, 0.05, 0.9, 22, std::nullopt},
  };
  cfg.defenders = {"vpA", "vpB"};
  cfg.attackers = {"vpA", "vpB"};
  cfg.estimator.method = EstimatorSpec::Method::WienerThenThreshold;
  cfg.estimator.psf_sigma = 0.8;
  cfg.estimator.noise_ratio = 0.05;
  return cfg;
}

namespace config_detail {

inline EstimatorSpec::Method parse_method(const std::string& name) {
  if (name == "otsu") return EstimatorSpec::Method::GlobalOtsu;
  if (name == "fixed") return EstimatorSpec::Method::FixedThreshold;
  if (name == "wiener") return EstimatorSpec::Method::WienerThenThreshold;
  throw std::invalid_argument("config: unknown estimator method \"" + name +
                              "\" (expected otsu, fixed or wiener)");
}

}  // namespace config_detail

/// Applies an INI document on top of the defaults. Profile sections are
/// named "[printer <id>]"; estimator and train settings live in
/// "[estimator]" and "[train]"; "[printers]" selects defender/attacker
/// id lists. Custom experiment conditions use "[setup <name>]".
inline RunConfig run_config_from_ini(const IniDoc& doc) {
  RunConfig cfg = default_run_config();

  const auto profile_sections = doc.find_prefix("printer ");
  if (!profile_sections.empty()) {
    cfg.profiles.clear();
    for (const auto* s : profile_sections) {
      PrinterProfile p;
      p.id = ini_detail::trim(s->name.substr(8));
      p.dot_gain = s->get_double("dot_gain", 0.0);
      p.psf_sigma = s->get_double("psf_sigma", 0.0);
      p.noise_sigma = s->get_double("noise_sigma", 0.0);
      p.scan_gamma = s->get_double("scan_gamma", 1.0);
      p.seed_salt = static_cast<std::uint64_t>(s->get_int("seed_salt", 0));
      if (s->has("attack_noise_sigma"))
        p.attack_noise_sigma = s->get_double("attack_noise_sigma", 0.0);
      cfg.profiles.push_back(std::move(p));
    }
    cfg.defenders.clear();
    cfg.attackers.clear();
    for (const auto& p : cfg.profiles) {
      cfg.defenders.push_back(p.id);
      cfg.attackers.push_back(p.id);
    }
  }

  if (const IniSection* s = doc.find("printers")) {
    if (s->has("defenders")) cfg.defenders = split_list(s->get("defenders"));
    if (s->has("attackers")) cfg.attackers = split_list(s->get("attackers"));
  }

  if (const IniSection* s = doc.find("estimator")) {
    if (s->has("method")) cfg.estimator.method = config_detail::parse_method(s->get("method"));
    cfg.estimator.level = s->get_double("threshold", cfg.estimator.level);
    cfg.estimator.psf_sigma = s->get_double("psf_sigma", cfg.estimator.psf_sigma);
    cfg.estimator.noise_ratio = s->get_double("noise_ratio", cfg.estimator.noise_ratio);
    cfg.estimator.sharpen = s->get_bool("sharpen", cfg.estimator.sharpen);
  }

  if (const IniSection* s = doc.find("train")) {
    cfg.train.epochs = static_cast<int>(s->get_int("epochs", cfg.train.epochs));
    cfg.train.lr = s->get_double("lr", cfg.train.lr);
    cfg.train.early_stop_patience =
        static_cast<int>(s->get_int("patience", cfg.train.early_stop_patience));
    cfg.train.batch_size = static_cast<int>(s->get_int("batch_size", cfg.train.batch_size));
    cfg.train.tau = s->get_double("tau", cfg.train.tau);
    cfg.train.augment = s->get_bool("augment", cfg.train.augment);
    if (s->has("seeds")) {
      cfg.train.seeds.clear();
      for (const auto& item : split_list(s->get("seeds")))
        cfg.train.seeds.push_back(std::stoull(item));
    }
  }

  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  return run_config_from_ini(parse_ini_file(path));
}

/// Named experiment conditions: the standard presets over the configured
/// printers plus any "[setup <name>]" sections from the document.
inline std::vector<SetupSpec> setups_from_ini(const IniDoc& doc, const RunConfig& cfg) {
  std::vector<SetupSpec> setups = make_setup_presets(cfg.defenders, cfg.attackers);
  for (const auto* s : doc.find_prefix("setup ")) {
    SetupSpec spec;
    spec.name = ini_detail::trim(s->name.substr(6));
    spec.d_train = split_list(s->require("d_train"));
    spec.a_train = split_list(s->require("a_train"));
    for (const auto& cell : split_list(s->require("cells"))) {
      const FakeKey key = parse_fake_key(cell);  // written a/d like fake superscripts
      spec.cells.emplace_back(key.second, key.first);
    }
    spec.validate(cfg.defenders, cfg.attackers);
    // A custom setup overrides a preset of the same name.
    std::erase_if(setups, [&](const SetupSpec& p) { return p.name == spec.name; });
    setups.push_back(std::move(spec));
  }
  return setups;
}

}  // namespace cdp
