#pragma once

// Pieces shared by every MCMC sampler: adaptive log-normal Metropolis steps,
// snapshots, chain settings and output containers.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mhp/catalog.hpp"
#include "mhp/errors.hpp"
#include "mhp/stats.hpp"

namespace mhp {

enum class ModelKind { etas, semipar, nonpar, nonpar_general };

inline std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::etas: return "etas";
    case ModelKind::semipar: return "semipar";
    case ModelKind::nonpar: return "nonpar";
    case ModelKind::nonpar_general: return "nonpar-general";
  }
  return "?";
}

inline ModelKind parse_model(std::string_view name) {
  if (name == "etas") return ModelKind::etas;
  if (name == "semipar") return ModelKind::semipar;
  if (name == "nonpar") return ModelKind::nonpar;
  if (name == "nonpar-general") return ModelKind::nonpar_general;
  throw ValidationError("unknown model '" + std::string(name) + "'");
}

/// Random-walk scale on the log of a positive parameter, tuned by
/// Robbins-Monro towards a target acceptance rate while adaptation is on.
struct AdaptiveScale {
  double log_scale = std::log(0.5);
  long adapt_steps = 0;
  long proposed = 0;  // counted only while adaptation is off
  long accepted = 0;

  double scale() const { return std::exp(log_scale); }
  double rate() const { return proposed == 0 ? 0.0 : static_cast<double>(accepted) / proposed; }

  void record(bool accept, bool adapt, double target = 0.3) {
    if (adapt) {
      ++adapt_steps;
      const double gain = std::pow(static_cast<double>(adapt_steps) + 1.0, -0.6);
      log_scale += gain * ((accept ? 1.0 : 0.0) - target);
      log_scale = std::clamp(log_scale, -12.0, 3.0);
    } else {
      ++proposed;
      if (accept) ++accepted;
    }
  }
};

/// One log-normal random-walk Metropolis-Hastings step for a positive scalar.
/// The log x' - log x term is the Jacobian of the multiplicative proposal.
template <class LogTarget>
bool mh_lognormal_step(double& x, LogTarget&& log_target, AdaptiveScale& scale, stats::SeededRng& rng,
                       bool adapt) {
  const double proposal = stats::sample_lognormal_step(x, scale.scale(), rng);
  bool accept = false;
  if (proposal > 0.0 && std::isfinite(proposal)) {
    const double lp = log_target(proposal);
    if (!std::isnan(lp) && lp > stats::kNegInf) {
      const double lc = log_target(x);
      const double log_ratio = lp - lc + std::log(proposal) - std::log(x);
      accept = !(lc > stats::kNegInf) || std::log(rng.uniform()) < log_ratio;
    }
  }
  if (accept) x = proposal;
  scale.record(accept, adapt);
  return accept;
}

/// Parameter values of one saved iteration. Parents are 1-based, 0 marks an immigrant.
struct Snapshot {
  long iteration = 0;
  std::map<std::string, double> scalars;
  std::map<std::string, std::vector<double>> vectors;
  std::vector<int> parent;

  double scalar(const std::string& key) const {
    const auto it = scalars.find(key);
    ensure(it != scalars.end(), "snapshot has no value '" + key + "'");
    return it->second;
  }
  const std::vector<double>& vector(const std::string& key) const {
    const auto it = vectors.find(key);
    ensure(it != vectors.end(), "snapshot has no vector '" + key + "'");
    return it->second;
  }
  bool has(const std::string& key) const { return scalars.count(key) > 0 || vectors.count(key) > 0; }

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct ChainSettings {
  long iterations = 20000;
  long burn_in = 10000;
  long thin = 5;
  std::uint64_t seed = 1;
  bool adapt = true;
  double target_acceptance = 0.3;
  // Per-sweep structural checks (branching validity, count identities).
  bool check_invariants = false;
  // Initial log-normal proposal scales by parameter name.
  std::map<std::string, double> scales;

  void validate() const {
    ensure(iterations > 0 && burn_in >= 0 && burn_in < iterations, "need 0 <= burn_in < iterations");
    ensure(thin >= 1, "thin must be at least 1");
    for (const auto& [k, v] : scales) ensure(v > 0.0, "proposal scale for " + k + " must be positive");
  }
};

struct ChainMeta {
  ModelKind model = ModelKind::nonpar;
  int L = 0;
  int M = 0;
  int J = 0;
  int N = 0;
  MarkBounds bounds;
  double window_end = 0.0;
  std::size_t events = 0;
  std::uint64_t seed = 0;
  long iterations = 0;
  long burn_in = 0;
  long thin = 1;
};

struct AcceptanceStats {
  long proposed = 0;
  long accepted = 0;
  double scale = 0.0;
  double rate() const { return proposed == 0 ? 0.0 : static_cast<double>(accepted) / proposed; }
};

struct ChainOutput {
  ChainMeta meta;
  std::vector<Snapshot> snapshots;
  std::map<std::string, AcceptanceStats> acceptance;
  std::map<std::string, double> timings;  // seconds per update block
  double wall_seconds = 0.0;
};

/// Accumulates wall time per named block.
class BlockTimer {
 public:
  explicit BlockTimer(std::map<std::string, double>* sink) : sink_(sink) {}
  template <class F>
  void time(const char* name, F&& f) {
    if (!sink_) {
      f();
      return;
    }
    const auto start = std::chrono::steady_clock::now();
    f();
    (*sink_)[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

 private:
  std::map<std::string, double>* sink_;
};

/// Checks 0 <= parent[i] < i + 1 with the first event an immigrant.
inline bool valid_branching(const std::vector<int>& parent) {
  for (std::size_t i = 0; i < parent.size(); ++i)
    if (parent[i] < 0 || static_cast<std::size_t>(parent[i]) > i) return false;
  return true;
}

inline std::size_t immigrant_count(const std::vector<int>& parent) {
  std::size_t n = 0;
  for (int p : parent) n += p == 0;
  return n;
}

}  // namespace mhp
