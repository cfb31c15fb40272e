#pragma once

// Chain persistence: line-delimited JSON snapshots, run manifests and
// checkpoints.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhp/errors.hpp"
#include "mhp/sampler/chain.hpp"
#include "mhp/sampler/common.hpp"

namespace mhp {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

namespace detail {

// JSON has no infinities; store them as strings.
inline json real_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double real_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return stats::kInf;
    if (s == "-inf") return stats::kNegInf;
    if (s == "nan") return std::nan("");
  }
  throw ValidationError("expected a number in chain file");
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  ensure(static_cast<bool>(out), "cannot write '" + path.string() + "'");
  return out;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  ensure(static_cast<bool>(in), "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("corrupt JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace detail

inline json to_json(const Snapshot& s) {
  json j;
  j["iteration"] = s.iteration;
  json scalars = json::object();
  for (const auto& [k, v] : s.scalars) scalars[k] = detail::real_to_json(v);
  j["scalars"] = scalars;
  json vectors = json::object();
  for (const auto& [k, v] : s.vectors) {
    json arr = json::array();
    for (double x : v) arr.push_back(detail::real_to_json(x));
    vectors[k] = arr;
  }
  j["vectors"] = vectors;
  j["parent"] = s.parent;
  return j;
}

inline Snapshot snapshot_from_json(const json& j) {
  try {
    Snapshot s;
    s.iteration = j.at("iteration").get<long>();
    for (const auto& [k, v] : j.at("scalars").items()) s.scalars[k] = detail::real_from_json(v);
    for (const auto& [k, v] : j.at("vectors").items()) {
      auto& vec = s.vectors[k];
      for (const auto& x : v) vec.push_back(detail::real_from_json(x));
    }
    s.parent = j.at("parent").get<std::vector<int>>();
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed snapshot record: ") + e.what());
  }
}

inline json to_json(const ChainMeta& m) {
  return json{{"model", std::string(to_string(m.model))},
              {"L", m.L},
              {"M", m.M},
              {"J", m.J},
              {"N", m.N},
              {"kappa0", detail::real_to_json(m.bounds.kappa0)},
              {"kappa_max", detail::real_to_json(m.bounds.kappa_max)},
              {"window_end", m.window_end},
              {"events", m.events},
              {"seed", m.seed},
              {"iterations", m.iterations},
              {"burn_in", m.burn_in},
              {"thin", m.thin}};
}

inline ChainMeta meta_from_json(const json& j) {
  try {
    ChainMeta m;
    m.model = parse_model(j.at("model").get<std::string>());
    m.L = j.at("L").get<int>();
    m.M = j.at("M").get<int>();
    m.J = j.at("J").get<int>();
    m.N = j.at("N").get<int>();
    m.bounds = {detail::real_from_json(j.at("kappa0")), detail::real_from_json(j.at("kappa_max"))};
    m.window_end = j.at("window_end").get<double>();
    m.events = j.at("events").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.iterations = j.at("iterations").get<long>();
    m.burn_in = j.at("burn_in").get<long>();
    m.thin = j.at("thin").get<long>();
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed chain metadata: ") + e.what());
  }
}

inline void write_snapshots(const std::filesystem::path& path, const std::vector<Snapshot>& snapshots) {
  auto out = detail::open_out(path);
  for (const auto& s : snapshots) out << to_json(s).dump() << '\n';
}

inline std::vector<Snapshot> read_snapshots(const std::filesystem::path& path) {
  std::ifstream in(path);
  ensure(static_cast<bool>(in), "cannot open snapshot file '" + path.string() + "'");
  std::vector<Snapshot> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw ValidationError("corrupt snapshot record at line " + std::to_string(row) + " of '" + path.string() + "'");
    }
    out.push_back(snapshot_from_json(j));
  }
  ensure(!out.empty(), "snapshot file '" + path.string() + "' is empty");
  return out;
}

inline json acceptance_json(const ChainOutput& chain) {
  json acc = json::object();
  for (const auto& [k, a] : chain.acceptance)
    acc[k] = {{"proposed", a.proposed}, {"accepted", a.accepted}, {"rate", a.rate()}, {"scale", a.scale}};
  return acc;
}

/// Manifest fields common to every command.
inline json base_manifest(const std::string& command, const std::map<std::string, std::string>& config) {
  return json{{"command", command}, {"version", kVersion}, {"config", config}};
}

/// Writes `snapshots.jsonl` and `manifest.json` for a fitted chain.
inline void save_chain(const std::filesystem::path& dir, const ChainOutput& chain, json manifest) {
  write_snapshots(dir / "snapshots.jsonl", chain.snapshots);
  manifest["meta"] = to_json(chain.meta);
  manifest["acceptance"] = acceptance_json(chain);
  manifest["timings"] = chain.timings;
  manifest["wall_seconds"] = chain.wall_seconds;
  manifest["snapshots"] = chain.snapshots.size();
  auto out = detail::open_out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

inline ChainOutput load_chain(const std::filesystem::path& dir) {
  const json manifest = detail::read_json_file(dir / "manifest.json");
  ensure(manifest.contains("meta"), "manifest in '" + dir.string() + "' has no chain metadata");
  ChainOutput chain;
  chain.meta = meta_from_json(manifest.at("meta"));
  if (manifest.contains("acceptance")) {
    for (const auto& [k, v] : manifest.at("acceptance").items())
      chain.acceptance[k] = {v.at("proposed").get<long>(), v.at("accepted").get<long>(), v.at("scale").get<double>()};
  }
  chain.snapshots = read_snapshots(dir / "snapshots.jsonl");
  return chain;
}

inline json to_json(const Checkpoint& c) {
  json scales = json::object();
  for (const auto& [k, s] : c.scales)
    scales[k] = {{"log_scale", s.log_scale},
                 {"adapt_steps", s.adapt_steps},
                 {"proposed", s.proposed},
                 {"accepted", s.accepted}};
  json saved = json::array();
  for (const auto& s : c.saved) saved.push_back(to_json(s));
  return json{{"iteration", c.iteration}, {"state", to_json(c.state)}, {"rng", c.rng}, {"scales", scales},
              {"saved", saved}};
}

inline Checkpoint checkpoint_from_json(const json& j) {
  try {
    Checkpoint c;
    c.iteration = j.at("iteration").get<long>();
    c.state = snapshot_from_json(j.at("state"));
    c.rng = j.at("rng").get<std::string>();
    for (const auto& [k, v] : j.at("scales").items()) {
      AdaptiveScale s;
      s.log_scale = v.at("log_scale").get<double>();
      s.adapt_steps = v.at("adapt_steps").get<long>();
      s.proposed = v.at("proposed").get<long>();
      s.accepted = v.at("accepted").get<long>();
      c.scales[k] = s;
    }
    for (const auto& s : j.at("saved")) c.saved.push_back(snapshot_from_json(s));
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  // Write then rename so an interrupted save leaves the previous checkpoint intact.
  const auto tmp = path.string() + ".tmp";
  {
    auto out = detail::open_out(tmp);
    out << to_json(c).dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(detail::read_json_file(path));
}

}  // namespace mhp
