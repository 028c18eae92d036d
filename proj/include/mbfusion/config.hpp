#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mbfusion {

/// `key = value` config file with '#' comments, plus command-line
/// `--set key=value` overrides. Typed getters track which keys were
/// consumed so unknown keys can be rejected per command schema.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  void apply_override(const std::string& key_equals_value);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;

  /// Comma list of doubles; "v x N" items repeat v N times (e.g. "35x127,30x50").
  std::vector<double> get_double_list(const std::string& key) const;

  /// Throws ParamError naming every key never consumed by a getter.
  void reject_unknown_keys() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

}  // namespace mbfusion
