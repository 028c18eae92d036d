#include "mbfusion/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mbfusion/errors.hpp"

namespace mbfusion {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParamError("config: cannot open " + path);
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParamError("config: line " + std::to_string(lineno) + " is not key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ParamError("config: empty key at line " + std::to_string(lineno));
    cfg.values_[key] = value;
  }
  return cfg;
}

void Config::apply_override(const std::string& kv) {
  const std::size_t eq = kv.find('=');
  if (eq == std::string::npos) throw ParamError("--set expects key=value, got: " + kv);
  set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw ParamError("config: empty key");
  values_[key] = value;
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  consumed_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string Config::require_string(const std::string& key) const {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty())
    throw ParamError("config: missing required key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParamError("config: key '" + key + "' is not a number: " + it->second);
  }
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParamError("config: key '" + key + "' is not an integer: " + it->second);
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParamError("config: key '" + key + "' is not a boolean: " + it->second);
}

std::uint64_t Config::get_seed(const std::string& key, std::uint64_t fallback) const {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw ParamError("config: key '" + key + "' is not a seed: " + it->second);
  }
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end() || trim(it->second).empty()) return {};
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const std::size_t x = item.find('x');
    try {
      if (x != std::string::npos) {
        const double v = std::stod(trim(item.substr(0, x)));
        const long long count = std::stoll(trim(item.substr(x + 1)));
        if (count < 1) throw std::invalid_argument("count");
        out.insert(out.end(), static_cast<std::size_t>(count), v);
      } else {
        out.push_back(std::stod(item));
      }
    } catch (const std::exception&) {
      throw ParamError("config: bad list item '" + item + "' in key '" + key + "'");
    }
  }
  return out;
}

void Config::reject_unknown_keys() const {
  std::string unknown;
  for (const auto& [k, v] : values_)
    if (!consumed_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  if (!unknown.empty()) throw ParamError("config: unknown keys: " + unknown);
}

}  // namespace mbfusion
