#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vdlab {

// Structured text configuration: `[section]` headers and `key = value`
// lines, `#`/`;` comments. Keys are addressed as "section.key"; keys before
// the first section header live in the "" section and are addressed bare.
class Config {
 public:
  Config() = default;

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  // "key=value" as accepted on the command line.
  void set_from_assignment(const std::string& assignment);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated list of numbers.
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  // Required variants: throw ValueError when the key is missing.
  std::string require_string(const std::string& key) const;
  double require_double(const std::string& key) const;
  int require_int(const std::string& key) const;

  // Applies every entry of `other` on top of this config.
  void merge(const Config& other);

  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Canonical "key = value" text, keys sorted; stable across runs.
  std::string canonical() const;
  std::uint64_t hash() const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace vdlab
