#include "vdlab/config.hpp"

#include <cstdlib>

#include "vdlab/errors.hpp"
#include "vdlab/util.hpp"

namespace vdlab {

namespace {

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || trim(end).size() > 0) {
    throw ValueError("config key '" + key + "': not a number: '" + value + "'");
  }
  return v;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  return parse_string(read_text_file(path), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  std::string section;
  int lineno = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError(strfmt("%s:%d: unterminated section header", origin.c_str(), lineno));
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(strfmt("%s:%d: expected 'key = value'", origin.c_str(), lineno));
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ParseError(strfmt("%s:%d: empty key", origin.c_str(), lineno));
    }
    cfg.entries_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

void Config::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

void Config::set_from_assignment(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty()) {
    throw ValueError("expected key=value, got '" + assignment + "'");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_double(key, it->second);
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  double v = parse_double(key, it->second);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw ValueError("config key '" + key + "': expected integer, got '" + it->second + "'");
  }
  return i;
}

std::uint64_t Config::get_uint64(const std::string& key, std::uint64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  char* end = nullptr;
  unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || trim(end).size() > 0) {
    throw ValueError("config key '" + key + "': expected unsigned integer");
  }
  return static_cast<std::uint64_t>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::string v = to_lower(it->second);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValueError("config key '" + key + "': expected boolean, got '" + it->second + "'");
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::vector<double>& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<double> out;
  for (const std::string& part : split(it->second, ',')) {
    std::string p = trim(part);
    if (p.empty()) continue;
    out.push_back(parse_double(key, p));
  }
  return out;
}

std::string Config::require_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ValueError("missing required config key '" + key + "'");
  return it->second;
}

double Config::require_double(const std::string& key) const {
  require_string(key);
  return get_double(key, 0.0);
}

int Config::require_int(const std::string& key) const {
  require_string(key);
  return get_int(key, 0);
}

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

std::uint64_t Config::hash() const { return fnv1a64(canonical()); }

}  // namespace vdlab
