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

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdp {

// Plain-text configuration: "[section]" headers, "key = value" lines,
// '#' or ';' comments. Section names may repeat a prefix, for example
// "[printer vpA]" and "[printer vpB]".

struct IniSection {
  std::string name;
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback = "") const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }

  std::string require(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end())
      throw std::invalid_argument("config section [" + name + "]: missing key \"" + key + "\"");
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw std::invalid_argument("config [" + name + "] " + key + ": not a number: " +
                                  it->second);
    }
  }

  long get_int(const std::string& key, long fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      std::size_t pos = 0;
      const long v = std::stol(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw std::invalid_argument("config [" + name + "] " + key + ": not an integer: " +
                                  it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config [" + name + "] " + key + ": not a boolean: " + v);
  }
};

struct IniDoc {
  std::vector<IniSection> sections;

  const IniSection* find(const std::string& name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }

  std::vector<const IniSection*> find_prefix(const std::string& prefix) const {
    std::vector<const IniSection*> out;
    for (const auto& s : sections)
      if (s.name.rfind(prefix, 0) == 0) out.push_back(&s);
    return out;
  }
};

namespace ini_detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace ini_detail

inline IniDoc parse_ini(std::istream& is) {
  IniDoc doc;
  IniSection* current = nullptr;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = ini_detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": unterminated section header");
      doc.sections.push_back({ini_detail::trim(line.substr(1, line.size() - 2)), {}});
      current = &doc.sections.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    if (!current) {
      doc.sections.push_back({"", {}});
      current = &doc.sections.back();
    }
    current->values[ini_detail::trim(line.substr(0, eq))] = ini_detail::trim(line.substr(eq + 1));
  }
  return doc;
}

inline IniDoc parse_ini_string(const std::string& text) {
  std::istringstream is(text);
  return parse_ini(is);
}

inline IniDoc parse_ini_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  return parse_ini(is);
}

/// Splits a comma-separated list into trimmed non-empty items.
inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = ini_detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace cdp
