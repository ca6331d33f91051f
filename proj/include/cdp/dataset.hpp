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

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdp/image.hpp"
#include "cdp/ini.hpp"
#include "cdp/png_io.hpp"
#include "cdp/split.hpp"
#include "cdp/types.hpp"

namespace cdp {

namespace fs = std::filesystem;

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

/// On-disk index of a dataset directory. Image paths are relative to the
/// manifest location.
struct DatasetManifest {
  int version = kManifestVersion;
  std::string image_format = "png8-gray";
  int width = 0, height = 0;
  std::vector<PrinterId> defender_printers;
  std::vector<PrinterId> attacker_printers;
  std::string estimator;
  std::uint64_t seed = 0;

  struct Entry {
    int id = 0;
    std::string template_path;
    std::map<PrinterId, std::string> originals;
    std::map<std::string, std::string> fakes;  // keyed "a/d"
  };
  std::vector<Entry> tuples;
};

namespace dataset_detail {

inline std::string template_file(int id) { return "t_" + std::to_string(id) + ".png"; }
inline std::string original_file(const PrinterId& d, int id) {
  return "x_" + d + "_" + std::to_string(id) + ".png";
}
inline std::string fake_file(const FakeKey& key, int id) {
  return "f_" + key.first + "_" + key.second + "_" + std::to_string(id) + ".png";
}

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["version"] = m.version;
  j["image_format"] = m.image_format;
  j["width"] = m.width;
  j["height"] = m.height;
  j["defender_printers"] = m.defender_printers;
  j["attacker_printers"] = m.attacker_printers;
  j["estimator"] = m.estimator;
  j["seed"] = m.seed;
  j["tuples"] = nlohmann::json::array();
  for (const auto& e : m.tuples) {
    nlohmann::json je;
    je["id"] = e.id;
    je["template"] = e.template_path;
    je["originals"] = e.originals;
    je["fakes"] = e.fakes;
    j["tuples"].push_back(je);
  }
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.version = j.at("version").get<int>();
  if (m.version != kManifestVersion)
    throw std::runtime_error("manifest: unsupported version " + std::to_string(m.version));
  m.image_format = j.at("image_format").get<std::string>();
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  m.defender_printers = j.at("defender_printers").get<std::vector<std::string>>();
  m.attacker_printers = j.at("attacker_printers").get<std::vector<std::string>>();
  m.estimator = j.at("estimator").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& je : j.at("tuples")) {
    DatasetManifest::Entry e;
    e.id = je.at("id").get<int>();
    e.template_path = je.at("template").get<std::string>();
    e.originals = je.at("originals").get<std::map<std::string, std::string>>();
    e.fakes = je.at("fakes").get<std::map<std::string, std::string>>();
    m.tuples.push_back(e);
  }
  return m;
}

}  // namespace dataset_detail

/// Writes every image as 8-bit grayscale PNG plus a JSON manifest. Images
/// are written first and the manifest last via rename, so a failed run
/// never leaves a manifest pointing at missing files.
inline fs::path save_dataset(const std::vector<CdpTuple>& tuples, const fs::path& directory,
                             std::uint64_t seed, const std::string& estimator_summary = "") {
  if (tuples.empty()) throw std::invalid_argument("save_dataset: empty tuple list");
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw std::runtime_error("save_dataset: cannot create " + directory.string());

  DatasetManifest m;
  m.width = tuples.front().tpl.width();
  m.height = tuples.front().tpl.height();
  m.seed = seed;
  m.estimator = estimator_summary;

  std::set<PrinterId> defenders, attackers;
  for (const auto& t : tuples) {
    if (t.tpl.width() != m.width || t.tpl.height() != m.height)
      throw std::invalid_argument("save_dataset: inconsistent dimensions at tuple " +
                                  std::to_string(t.id()));
    for (const auto& [d, code] : t.originals) defenders.insert(d);
    for (const auto& [key, code] : t.fakes) attackers.insert(key.first);
  }
  m.defender_printers.assign(defenders.begin(), defenders.end());
  m.attacker_printers.assign(attackers.begin(), attackers.end());

  for (const auto& t : tuples) {
    DatasetManifest::Entry e;
    e.id = t.id();
    e.template_path = dataset_detail::template_file(t.id());
    write_png_gray8((directory / e.template_path).string(), t.tpl.pixels);
    for (const auto& [d, code] : t.originals) {
      const auto name = dataset_detail::original_file(d, t.id());
      write_png_gray8((directory / name).string(), code.pixels);
      e.originals[d] = name;
    }
    for (const auto& [key, code] : t.fakes) {
      const auto name = dataset_detail::fake_file(key, t.id());
      write_png_gray8((directory / name).string(), code.pixels);
      e.fakes[fake_key_string(key)] = name;
    }
    m.tuples.push_back(std::move(e));
  }

  const fs::path manifest_path = directory / kManifestName;
  const fs::path tmp_path = directory / (std::string(kManifestName) + ".tmp");
  {
    std::ofstream os(tmp_path);
    if (!os) throw std::runtime_error("save_dataset: cannot open " + tmp_path.string());
    os << dataset_detail::manifest_to_json(m).dump(2) << "\n";
    if (!os) throw std::runtime_error("save_dataset: manifest write failed");
  }
  fs::rename(tmp_path, manifest_path);
  return manifest_path;
}

/// Loads a dataset directory back into memory and revalidates every tuple
/// invariant (file presence, declared dimensions, binary templates, dense
/// ids starting at 1).
inline std::vector<CdpTuple> load_dataset(const fs::path& directory,
                                          DatasetManifest* manifest_out = nullptr) {
  const fs::path manifest_path =
      fs::is_directory(directory) ? directory / kManifestName : directory;
  std::ifstream is(manifest_path);
  if (!is) throw std::runtime_error("load_dataset: cannot open " + manifest_path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("load_dataset: invalid manifest JSON: " + std::string(e.what()));
  }
  DatasetManifest m = dataset_detail::manifest_from_json(j);
  const fs::path base = manifest_path.parent_path();

  std::vector<CdpTuple> tuples;
  std::set<int> seen_ids;
  for (const auto& e : m.tuples) {
    if (!seen_ids.insert(e.id).second)
      throw std::runtime_error("load_dataset: duplicate tuple id " + std::to_string(e.id));
    Image tpx = read_png_gray8((base / e.template_path).string());
    if (tpx.width() != m.width || tpx.height() != m.height)
      throw std::runtime_error("load_dataset: template dimensions differ from manifest at tuple " +
                               std::to_string(e.id));
    CdpTuple t;
    t.tpl = DigitalTemplate(std::move(tpx), e.id);
    for (const auto& [d, rel] : e.originals) {
      Image px = read_png_gray8((base / rel).string());
      t.add_original(PrintedCode(std::move(px), e.id, Kind::Original, d));
    }
    for (const auto& [key_str, rel] : e.fakes) {
      const FakeKey key = parse_fake_key(key_str);
      Image px = read_png_gray8((base / rel).string());
      t.add_fake(PrintedCode(std::move(px), e.id, Kind::Fake, key.second, key.first));
    }
    if (!m.attacker_printers.empty())
      t.validate_complete(m.defender_printers, m.attacker_printers);
    tuples.push_back(std::move(t));
  }

  // Ids must be dense 1..N.
  int expect = 1;
  for (int id : seen_ids)
    if (id != expect++)
      throw std::runtime_error("load_dataset: tuple ids are not dense 1..N");

  if (manifest_out) *manifest_out = std::move(m);
  return tuples;
}

// ---------------------------------------------------------------------------
// External layout ingestion

/// Directory layout of an externally produced dataset. Each role maps to a
/// subdirectory; corresponding images share a file name across roles.
struct RealLayout {
  std::string template_dir;
  std::map<PrinterId, std::string> original_dirs;
  std::map<FakeKey, std::string> fake_dirs;
};

/// Reads a layout description: [layout] template = <dir>, plus one
/// "[layout.originals]" section (printer id = dir) and one "[layout.fakes]"
/// section (a/d = dir).
inline RealLayout parse_real_layout(const IniDoc& doc) {
  RealLayout layout;
  const IniSection* base = doc.find("layout");
  if (!base) throw std::invalid_argument("layout config: missing [layout] section");
  layout.template_dir = base->require("template");
  const IniSection* originals = doc.find("layout.originals");
  if (!originals || originals->values.empty())
    throw std::invalid_argument("layout config: missing [layout.originals] section");
  for (const auto& [printer, dir] : originals->values) layout.original_dirs[printer] = dir;
  const IniSection* fakes = doc.find("layout.fakes");
  if (fakes)
    for (const auto& [key_str, dir] : fakes->values)
      layout.fake_dirs[parse_fake_key(key_str)] = dir;
  return layout;
}

struct RealLoadReport {
  int loaded = 0;
  int skipped = 0;
  int width = 0, height = 0;
  std::vector<std::string> warnings;
};

/// Ingests a dataset laid out per RealLayout under root. Tuples are formed
/// by matching file names across the role directories in sorted template
/// order; incomplete or dimension-mismatched tuples are skipped with a
/// warning rather than failing the load.
inline std::vector<CdpTuple> load_real_dataset(const fs::path& root, const RealLayout& layout,
                                               RealLoadReport* report = nullptr) {
  auto list_dir = [&](const std::string& sub) {
    const fs::path dir = root / sub;
    if (!fs::is_directory(dir)) {
      std::string found;
      if (fs::is_directory(root))
        for (const auto& e : fs::directory_iterator(root))
          found += (found.empty() ? "" : ", ") + e.path().filename().string();
      throw std::runtime_error("load_real_dataset: missing role directory \"" + sub +
                               "\" under " + root.string() + " (found: " + found + ")");
    }
    std::map<std::string, fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file()) files[e.path().filename().string()] = e.path();
    return files;
  };

  const auto template_files = list_dir(layout.template_dir);
  std::map<PrinterId, std::map<std::string, fs::path>> original_files;
  for (const auto& [d, sub] : layout.original_dirs) original_files[d] = list_dir(sub);
  std::map<FakeKey, std::map<std::string, fs::path>> fake_files;
  for (const auto& [key, sub] : layout.fake_dirs) fake_files[key] = list_dir(sub);

  RealLoadReport rep;
  std::vector<CdpTuple> tuples;
  int next_id = 1;
  for (const auto& [name, tpath] : template_files) {
    bool complete = true;
    for (const auto& [d, files] : original_files)
      if (!files.count(name)) {
        rep.warnings.push_back("tuple " + name + ": missing original for printer " + d);
        complete = false;
      }
    for (const auto& [key, files] : fake_files)
      if (!files.count(name)) {
        rep.warnings.push_back("tuple " + name + ": missing fake " + fake_key_string(key));
        complete = false;
      }
    if (!complete) {
      ++rep.skipped;
      continue;
    }

    try {
      Image tpx = read_png_gray8(tpath.string());
      if (rep.width == 0) {
        rep.width = tpx.width();
        rep.height = tpx.height();
      }
      // Scanned templates may carry interpolation residue; snap to binary.
      for (auto& v : tpx.pixels()) v = v >= 0.5 ? 1.0 : 0.0;

      CdpTuple t;
      const int id = next_id;
      t.tpl = DigitalTemplate(std::move(tpx), id);
      for (const auto& [d, files] : original_files) {
        Image px = read_png_gray8(files.at(name).string());
        if (!px.same_shape(t.tpl.pixels)) throw std::invalid_argument("dimension mismatch");
        t.add_original(PrintedCode(std::move(px), id, Kind::Original, d));
      }
      for (const auto& [key, files] : fake_files) {
        Image px = read_png_gray8(files.at(name).string());
        if (!px.same_shape(t.tpl.pixels)) throw std::invalid_argument("dimension mismatch");
        t.add_fake(PrintedCode(std::move(px), id, Kind::Fake, key.second, key.first));
      }
      tuples.push_back(std::move(t));
      ++next_id;
      ++rep.loaded;
    } catch (const std::exception& e) {
      rep.warnings.push_back("tuple " + name + ": skipped (" + e.what() + ")");
      ++rep.skipped;
    }
  }
  if (report) *report = std::move(rep);
  return tuples;
}

}  // namespace cdp
