#pragma once

// Chain driver: burn-in with proposal tuning, thinning, checkpoints, and
// independent chains on separate generator streams.

#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mhp/priors.hpp"
#include "mhp/sampler/common.hpp"
#include "mhp/sampler/etas.hpp"
#include "mhp/sampler/nonpar.hpp"
#include "mhp/sampler/semipar.hpp"

namespace mhp {

/// Everything needed to continue a chain exactly where it stopped.
struct Checkpoint {
  long iteration = 0;  // completed sweeps
  Snapshot state;
  std::string rng;
  std::map<std::string, AdaptiveScale> scales;
  std::vector<Snapshot> saved;
};

struct ChainHooks {
  long checkpoint_every = 0;
  std::function<void(const Checkpoint&)> on_checkpoint;
  const Checkpoint* resume = nullptr;
  // Called after every sweep with the 1-based iteration; used for progress.
  std::function<void(long)> on_iteration;
};

namespace detail {

template <class Sampler>
ChainOutput drive(Sampler& sampler, ChainMeta meta, const ChainSettings& settings, const ChainHooks& hooks,
                  stats::SeededRng rng) {
  settings.validate();
  const auto start = std::chrono::steady_clock::now();
  ChainOutput out;
  out.meta = meta;
  out.meta.seed = settings.seed;
  out.meta.iterations = settings.iterations;
  out.meta.burn_in = settings.burn_in;
  out.meta.thin = settings.thin;

  for (const auto& [name, value] : settings.scales) {
    auto it = sampler.scales().find(name);
    if (it != sampler.scales().end()) it->second.log_scale = std::log(value);
  }

  long first = 1;
  if (hooks.resume) {
    sampler.restore(hooks.resume->state);
    rng = stats::SeededRng::deserialize(hooks.resume->rng);
    sampler.scales() = hooks.resume->scales;
    out.snapshots = hooks.resume->saved;
    first = hooks.resume->iteration + 1;
  }

  for (long it = first; it <= settings.iterations; ++it) {
    const bool adapt = settings.adapt && it <= settings.burn_in;
    try {
      sampler.sweep(rng, adapt, &out.timings);
      if (settings.check_invariants) sampler.check_invariants();
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(it) + ": " + e.what());
    }
    const double ll = sampler.log_likelihood();
    if (!std::isfinite(ll))
      throw NumericalError("non-finite log-likelihood after the sweep at iteration " + std::to_string(it));
    if (it > settings.burn_in && (it - settings.burn_in) % settings.thin == 0)
      out.snapshots.push_back(sampler.snapshot(it));
    if (hooks.on_iteration) hooks.on_iteration(it);
    if (hooks.checkpoint_every > 0 && hooks.on_checkpoint && it % hooks.checkpoint_every == 0 &&
        it < settings.iterations) {
      hooks.on_checkpoint(Checkpoint{it, sampler.snapshot(it), rng.serialize(), sampler.scales(), out.snapshots});
    }
  }
  for (const auto& [name, s] : sampler.scales()) out.acceptance[name] = {s.proposed, s.accepted, s.scale()};
  if constexpr (std::is_same_v<Sampler, SemiparSampler>) {
    const auto& a = sampler.atom_acceptance();
    const auto& b = sampler.stick_acceptance();
    out.acceptance["atoms"] = {a.proposed, a.accepted, 0.0};
    out.acceptance["sticks"] = {b.proposed, b.accepted, 0.0};
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace detail

/// Runs one chain of the chosen model on the pattern. Deterministic in the
/// seed and stream; timings are the only run-dependent output.
inline ChainOutput run_chain(ModelKind model, const MarkedPointPattern& pattern, const PriorSet& priors,
                             const ChainSettings& settings, const ChainHooks& hooks = {},
                             std::uint64_t stream = 0) {
  ChainMeta meta;
  meta.model = model;
  meta.bounds = pattern.bounds;
  meta.window_end = pattern.window_end;
  meta.events = pattern.size();
  stats::SeededRng rng(settings.seed, stream);
  switch (model) {
    case ModelKind::nonpar:
    case ModelKind::nonpar_general: {
      NonparSampler sampler(pattern, priors.nonpar, model == ModelKind::nonpar_general);
      meta.L = priors.nonpar.L;
      meta.M = priors.nonpar.M;
      meta.J = model == ModelKind::nonpar_general ? priors.nonpar.J : 0;
      return detail::drive(sampler, meta, settings, hooks, rng);
    }
    case ModelKind::etas: {
      EtasSampler sampler(pattern, priors.etas);
      return detail::drive(sampler, meta, settings, hooks, rng);
    }
    case ModelKind::semipar: {
      SemiparSampler sampler(pattern, priors.etas, priors.semipar);
      meta.N = priors.semipar.N;
      return detail::drive(sampler, meta, settings, hooks, rng);
    }
  }
  throw ValidationError("unknown model");
}

/// Independent chains on streams 0..chains-1, at most `threads` at a time.
inline std::vector<ChainOutput> run_chains(ModelKind model, const MarkedPointPattern& pattern,
                                           const PriorSet& priors, const ChainSettings& settings, int chains,
                                           int threads) {
  ensure(chains >= 1, "need at least one chain");
  std::vector<ChainOutput> out(chains);
  std::vector<std::exception_ptr> errors(chains);
  const int workers = std::max(1, std::min(threads, chains));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int c = next++; c < chains; c = next++) {
      try {
        out[c] = run_chain(model, pattern, priors, settings, {}, static_cast<std::uint64_t>(c));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace mhp
