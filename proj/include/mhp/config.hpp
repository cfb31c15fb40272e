#pragma once

// Sectioned key-value run configuration with flag overrides.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mhp/catalog.hpp"
#include "mhp/errors.hpp"
#include "mhp/priors.hpp"
#include "mhp/sampler/common.hpp"

namespace mhp {

using ConfigSection = std::map<std::string, std::string>;
using ConfigFile = std::map<std::string, ConfigSection>;

/// INI text: `[section]` headers, `key = value` lines, `;` or `#` comments.
inline ConfigFile parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  ConfigFile out;
  for (const auto& [name, node] : tree) {
    if (node.empty()) throw ValidationError("config key '" + name + "' must sit inside a [section]");
    auto& section = out[name];
    for (const auto& [key, value] : node) section[key] = value.get_value<std::string>();
  }
  return out;
}

inline ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  ensure(static_cast<bool>(in), "cannot open config '" + path + "'");
  return parse_config(in);
}

/// Resolved settings for one command: the [common] section, then the
/// command's own section, then flag overrides. Unknown sections and keys
/// are rejected.
class RunConfig {
 public:
  RunConfig() = default;
  RunConfig(std::string command, std::set<std::string> allowed)
      : command_(std::move(command)), allowed_(std::move(allowed)) {}

  void merge_file(const ConfigFile& file, const std::set<std::string>& known_sections) {
    for (const auto& [section, _] : file)
      ensure(section == "common" || known_sections.count(section) > 0, "unknown config section [" + section + "]");
    for (const char* name : {"common", command_.c_str()}) {
      const auto it = file.find(name);
      if (it == file.end()) continue;
      for (const auto& [k, v] : it->second) set(k, v);
    }
  }

  void set(const std::string& key, const std::string& value) {
    ensure(is_allowed(key), "unknown config key '" + key + "' for command " + command_);
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const ConfigSection& values() const { return values_; }
  const std::string& command() const { return command_; }

  std::string str(const std::string& key, const std::string& fallback = "") const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }
  std::string require(const std::string& key) const {
    ensure(has(key), "missing required setting '" + key + "'");
    return values_.at(key);
  }
  double real(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto v = detail::parse_real(values_.at(key));
    ensure(v.has_value(), "setting '" + key + "' is not a number");
    return *v;
  }
  long integer(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    const double v = real(key, 0.0);
    ensure(v == std::floor(v) && std::abs(v) < 9e15, "setting '" + key + "' is not an integer");
    return static_cast<long>(v);
  }
  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string v = values_.at(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ValidationError("setting '" + key + "' is not a boolean");
  }

 private:
  bool is_allowed(const std::string& key) const {
    if (allowed_.count(key)) return true;
    // prior.<name> entries are validated when applied.
    return key.rfind("prior.", 0) == 0 && allowed_.count("prior.*");
  }

  std::string command_;
  std::set<std::string> allowed_;
  ConfigSection values_;
};

/// Applies L, M, J, N and prior.<name> settings on top of a preset.
inline void apply_prior_overrides(PriorSet& p, const RunConfig& cfg) {
  p.nonpar.L = static_cast<int>(cfg.integer("L", p.nonpar.L));
  p.nonpar.M = static_cast<int>(cfg.integer("M", p.nonpar.M));
  p.nonpar.J = static_cast<int>(cfg.integer("J", p.nonpar.J));
  p.semipar.N = static_cast<int>(cfg.integer("N", p.semipar.N));
  ensure(p.nonpar.L >= 1 && p.nonpar.M >= 2 && p.nonpar.J >= 1 && p.semipar.N >= 2,
         "need L >= 1, M >= 2, J >= 1 and N >= 2");
  const std::map<std::string, ScalarPrior*> slots = {
      {"theta", &p.nonpar.theta},  {"d", &p.nonpar.d},         {"c0", &p.nonpar.c0},
      {"b1", &p.nonpar.b1},        {"b2", &p.nonpar.b2},       {"a_beta", &p.nonpar.a_beta},
      {"b_beta", &p.nonpar.b_beta}, {"mu", &p.nonpar.mu},      {"phi", &p.nonpar.phi},
      {"e0", &p.nonpar.e0},        {"b_g0", &p.nonpar.b_g0},   {"etas.mu", &p.etas.mu},
      {"etas.a", &p.etas.a},       {"etas.b", &p.etas.b},      {"etas.psi", &p.etas.psi},
      {"etas.p", &p.etas.p},       {"etas.c", &p.etas.c},      {"alpha0", &p.semipar.alpha0},
      {"a0", &p.semipar.a0},       {"b0", &p.semipar.b0}};
  for (const auto& [key, value] : cfg.values()) {
    if (key.rfind("prior.", 0) != 0) continue;
    const auto name = key.substr(6);
    const auto it = slots.find(name);
    ensure(it != slots.end(), "unknown prior '" + key + "'");
    *it->second = parse_prior(value);
  }
}

inline ChainSettings chain_settings(const RunConfig& cfg) {
  ChainSettings s;
  s.iterations = cfg.integer("iterations", s.iterations);
  s.burn_in = cfg.integer("burn_in", s.burn_in);
  s.thin = cfg.integer("thin", s.thin);
  s.seed = static_cast<std::uint64_t>(cfg.integer("seed", static_cast<long>(s.seed)));
  s.adapt = cfg.flag("adapt", s.adapt);
  s.check_invariants = cfg.flag("check_invariants", s.check_invariants);
  s.validate();
  return s;
}

}  // namespace mhp
