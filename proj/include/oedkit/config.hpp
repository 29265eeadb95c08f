#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "csv.hpp"
#include "error.hpp"

namespace oedkit {

// Flat key-value config. Grammar (one statement per line):
//   # or ; starts a comment line
//   [section]            prefixes following keys with "section."
//   key = value          key: [A-Za-z0-9_.-]+, value: rest of line, trimmed
// Dotted keys may also be written in full. Lists are comma-separated.
class Config {
 public:
  Config() = default;

  static Config parse(std::istream& in, const std::string& origin = "<config>") {
    Config c;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string s = csv::trim(line);
      const std::string where = origin + ":" + std::to_string(lineno);
      if (s.empty() || s[0] == '#' || s[0] == ';') continue;
      if (s.front() == '[') {
        if (s.back() != ']') throw Error(ErrorKind::InvalidArgument, where + ": unterminated section");
        section = csv::trim(s.substr(1, s.size() - 2));
        if (!valid_key(section)) throw Error(ErrorKind::InvalidArgument, where + ": bad section name");
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos)
        throw Error(ErrorKind::InvalidArgument, where + ": expected key = value");
      std::string key = csv::trim(s.substr(0, eq));
      if (!valid_key(key)) throw Error(ErrorKind::InvalidArgument, where + ": bad key '" + key + "'");
      if (!section.empty()) key = section + "." + key;
      if (c.values_.count(key))
        throw Error(ErrorKind::InvalidArgument, where + ": duplicate key '" + key + "'");
      c.values_[key] = csv::trim(s.substr(eq + 1));
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read config " + path);
    return parse(in, path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get(const std::string& key, const std::string& fallback = "") const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    return has(key) ? csv::parse_double(get(key), key) : fallback;
  }

  long get_int(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    const double v = csv::parse_double(get(key), key);
    if (v != static_cast<double>(static_cast<long>(v)))
      throw Error(ErrorKind::InvalidArgument, key + ": expected an integer");
    return static_cast<long>(v);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorKind::InvalidArgument, key + ": expected true or false");
  }

  std::vector<double> get_list(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    for (const auto& cell : csv::split(get(key))) out.push_back(csv::parse_double(cell, key));
    return out;
  }

  // Keys not in the allowed set.
  std::vector<std::string> unknown_keys(const std::set<std::string>& allowed) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!allowed.count(k)) out.push_back(k);
    return out;
  }

 private:
  static bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char ch : k)
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.' || ch == '-'))
        return false;
    return true;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace oedkit
