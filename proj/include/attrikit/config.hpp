// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "attrikit/common.hpp"

namespace attrikit {

/// Flat key=value configuration. Lines are `key=value`, UTF-8; blank lines
/// and lines starting with '#' are ignored. Serialization is sorted by key
/// so the config hash is stable.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load_file(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set_int(const std::string& key, int64_t v) { values_[key] = std::to_string(v); }
  void set_double(const std::string& key, double v);

  std::string get(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  /// Overlays `other` on top of this config (other wins).
  void merge(const KeyValueConfig& other);

  std::string serialize() const;
  uint64_t hash() const { return fnv1a64(serialize()); }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::vector<std::string> split_string(const std::string& s, char sep);
std::string trim_string(const std::string& s);

}  // namespace attrikit
