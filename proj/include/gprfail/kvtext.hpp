#pragma once

// Minimal reader for the "[section] / key = value / # comment" text format
// shared by the material table and the run configuration.

#include "gprfail/core.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

namespace gprfail {

struct KvEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct KvSection {
  std::string name;  // empty for keys before the first header
  int line = 0;
  std::vector<KvEntry> entries;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<KvSection> parse_kv_text(const std::string& text) {
  std::vector<KvSection> out;
  out.push_back(KvSection{"", 0, {}});
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
      std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw ConfigError("empty section name", line_no);
      out.push_back(KvSection{name, line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key", line_no);
    for (const auto& e : out.back().entries)
      if (e.key == key) throw ConfigError("duplicate key '" + key + "'", line_no);
    out.back().entries.push_back(KvEntry{key, value, line_no});
  }
  return out;
}

inline double parse_double(const std::string& s, int line_no) {
  const std::string t = trim(s);
  if (t.empty()) throw ConfigError("empty numeric value", line_no);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
    throw ConfigError("not a finite number: '" + t + "'", line_no);
  return v;
}

inline long parse_int(const std::string& s, int line_no) {
  const std::string t = trim(s);
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    throw ConfigError("not an integer: '" + t + "'", line_no);
  return v;
}

inline std::vector<double> parse_double_list(const std::string& s, int line_no) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(parse_double(item, line_no));
  return out;
}

}  // namespace gprfail
