// mhp: simulate, fit, forecast, summarize and prior-check for marked Hawkes
// processes. Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mhp/mhp.hpp"

namespace fs = std::filesystem;
using namespace mhp;

namespace {

using Overrides = std::map<std::string, std::string>;

const std::set<std::string> kCommands = {"simulate", "fit", "forecast", "summarize", "prior-check"};

std::set<std::string> allowed_keys(const std::string& command) {
  std::set<std::string> common = {"seed", "threads", "out_dir"};
  std::set<std::string> extra;
  if (command == "simulate") {
    extra = {"preset", "unstable", "emit_branching", "mu", "a", "b", "psi", "window_end", "kappa0", "kappa_max", "cap"};
  } else if (command == "fit") {
    extra = {"catalog", "model", "preset", "jitter", "clamp", "kappa0", "kappa_max", "window_end", "iterations",
             "burn_in", "thin", "adapt", "check_invariants", "chains", "checkpoint_every", "resume",
             "L", "M", "J", "N", "prior.*"};
  } else if (command == "forecast") {
    extra = {"chain", "catalog", "horizon_start", "horizon_end", "observed", "observed_catalog", "level", "cap"};
  } else if (command == "summarize") {
    extra = {"chain", "catalog", "forecast", "level", "kappas", "kappa_points", "lag_max", "lag_points",
             "time_points"};
  } else if (command == "prior-check") {
    extra = {"L", "M", "theta", "d", "c0", "b1", "b2", "kappa0", "kappa_max", "draws", "kappa_points",
             "lag_points", "kappas"};
  }
  common.insert(extra.begin(), extra.end());
  return common;
}

int thread_count(const RunConfig& cfg) {
  const long hw = std::max(1u, std::thread::hardware_concurrency());
  const long t = cfg.integer("threads", hw);
  ensure(t >= 1, "threads must be at least 1");
  return static_cast<int>(t);
}

fs::path out_dir(const RunConfig& cfg) { return fs::path(cfg.str("out_dir", "mhp-out")); }

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = detail::parse_real(detail::trim(item));
    ensure(v.has_value(), "malformed number list '" + text + "'");
    out.push_back(*v);
  }
  return out;
}

void write_manifest(const fs::path& path, const json& manifest) {
  auto out = detail::open_out(path);
  out << manifest.dump(2) << '\n';
}

void write_table(const fs::path& path, const FunctionalTable& t) {
  auto out = detail::open_out(path);
  out << std::setprecision(17) << "kappa,x,mean,lower,upper\n";
  for (const auto& r : t.rows) out << r.kappa << ',' << r.x << ',' << r.mean << ',' << r.lower << ',' << r.upper << '\n';
}

json priors_json(const PriorSet& p) {
  const auto& n = p.nonpar;
  const auto& e = p.etas;
  const auto& s = p.semipar;
  return json{{"preset", p.name},
              {"nonpar",
               {{"L", n.L}, {"M", n.M}, {"J", n.J}, {"theta", n.theta.describe()}, {"d", n.d.describe()},
                {"c0", n.c0.describe()}, {"b1", n.b1.describe()}, {"b2", n.b2.describe()},
                {"a_beta", n.a_beta.describe()}, {"b_beta", n.b_beta.describe()}, {"mu", n.mu.describe()},
                {"phi", n.phi.describe()}, {"e0", n.e0.describe()}, {"b_g0", n.b_g0.describe()}}},
              {"etas",
               {{"mu", e.mu.describe()}, {"a", e.a.describe()}, {"b", e.b.describe()}, {"psi", e.psi.describe()},
                {"p", e.p.describe()}, {"c", e.c.describe()}}},
              {"semipar",
               {{"N", s.N}, {"alpha0", s.alpha0.describe()}, {"a0", s.a0.describe()}, {"b0", s.b0.describe()}}}};
}

double rho_exceedance(const ChainOutput& chain) {
  std::size_t above = 0;
  for (const auto& s : chain.snapshots) above += s.scalar("rho") > 1.0;
  return chain.snapshots.empty() ? 0.0 : static_cast<double>(above) / chain.snapshots.size();
}

void warn_unstable(const ChainOutput& chain) {
  const double p = rho_exceedance(chain);
  if (p > 0.01)
    std::cerr << "warning: posterior mass of rho > 1 is " << p << " (above 1%); the fit may be explosive\n";
}

// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& cfg) {
  Scenario sc = scenario_preset(cfg.str("preset", "mark-lomax"));
  sc.mu = cfg.real("mu", sc.mu);
  sc.a = cfg.real("a", sc.a);
  sc.b = cfg.real("b", sc.b);
  sc.psi = cfg.real("psi", sc.psi);
  sc.window_end = cfg.real("window_end", sc.window_end);
  sc.bounds = {cfg.real("kappa0", sc.bounds.kappa0), cfg.real("kappa_max", sc.bounds.kappa_max)};
  const auto seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));
  GeneratorSpec spec = sc.spec(seed);
  spec.unstable = cfg.flag("unstable", false);
  spec.cap = static_cast<std::size_t>(cfg.integer("cap", static_cast<long>(spec.cap)));

  const double rho = spec_rho(spec);
  std::cout << "rho = " << std::fixed << std::setprecision(4) << rho << std::defaultfloat << '\n';
  const SimulationResult sim = simulate_mhp(spec);

  const fs::path dir = out_dir(cfg);
  fs::create_directories(dir);
  save_catalog((dir / "catalog.csv").string(), sim.data);
  if (cfg.flag("emit_branching", false)) {
    auto out = detail::open_out(dir / "branching.csv");
    out << "index,parent_index\n";
    for (std::size_t i = 0; i < sim.parent.size(); ++i) out << i + 1 << ',' << sim.parent[i] << '\n';
  }
  const std::size_t immigrants = immigrant_count(sim.parent);
  json manifest = base_manifest("simulate", cfg.values());
  manifest["seed"] = seed;
  manifest["scenario"] = sc.name;
  manifest["rho"] = rho;
  manifest["window_end"] = sc.window_end;
  manifest["bounds"] = {sc.bounds.kappa0, sc.bounds.kappa_max};
  manifest["events"] = sim.data.pattern.size();
  manifest["immigrants"] = immigrants;
  manifest["offspring"] = sim.data.pattern.size() - immigrants;
  write_manifest(dir / "manifest.json", manifest);
  std::cout << "events = " << sim.data.pattern.size() << " (" << immigrants << " immigrants)\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_fit(const RunConfig& cfg) {
  const ModelKind model = parse_model(cfg.str("model", "nonpar"));
  PriorSet priors = prior_preset(cfg.str("preset", "s42"));
  apply_prior_overrides(priors, cfg);
  ChainSettings settings = chain_settings(cfg);

  const bool nonpar = model == ModelKind::nonpar || model == ModelKind::nonpar_general;
  const MarkBounds preset_bounds = nonpar ? priors.nonpar_bounds : priors.baseline_bounds;
  CatalogOptions opt;
  opt.kappa0 = cfg.real("kappa0", preset_bounds.kappa0);
  opt.kappa_max = cfg.has("kappa_max") ? cfg.real("kappa_max", 0.0) : preset_bounds.kappa_max;
  if (cfg.has("window_end")) opt.window_end = cfg.real("window_end", 0.0);
  if (cfg.has("jitter")) opt.jitter = cfg.real("jitter", 0.0);
  opt.jitter_seed = settings.seed;
  opt.clamp = cfg.flag("clamp", false);
  const LabeledPattern data = load_catalog(cfg.require("catalog"), opt);

  const fs::path dir = out_dir(cfg);
  fs::create_directories(dir);
  json manifest = base_manifest("fit", cfg.values());
  manifest["seed"] = settings.seed;
  manifest["model"] = std::string(to_string(model));
  manifest["priors"] = priors_json(priors);
  manifest["catalog"] = {{"events", data.pattern.size()},
                         {"window_end", data.pattern.window_end},
                         {"bounds", {detail::real_to_json(data.pattern.bounds.kappa0),
                                     detail::real_to_json(data.pattern.bounds.kappa_max)}}};

  const long chains = cfg.integer("chains", 1);
  ensure(chains >= 1, "chains must be at least 1");
  if (chains > 1) {
    const auto outs = run_chains(model, data.pattern, priors, settings, static_cast<int>(chains), thread_count(cfg));
    for (std::size_t c = 0; c < outs.size(); ++c) {
      const fs::path cdir = dir / ("chain_" + std::to_string(c + 1));
      json m = manifest;
      m["stream"] = c;
      save_chain(cdir, outs[c], m);
      save_catalog((cdir / "data.csv").string(), data);
      warn_unstable(outs[c]);
    }
    std::cout << "wrote " << chains << " chains to " << dir.string() << '\n';
    return 0;
  }

  ChainHooks hooks;
  const fs::path ckpt_path = dir / "checkpoint.json";
  hooks.checkpoint_every = cfg.integer("checkpoint_every", 0);
  hooks.on_checkpoint = [&](const Checkpoint& c) { save_checkpoint(ckpt_path, c); };
  Checkpoint resume;
  if (cfg.flag("resume", false) && fs::exists(ckpt_path)) {
    resume = load_checkpoint(ckpt_path);
    hooks.resume = &resume;
    std::cerr << "resuming from iteration " << resume.iteration << '\n';
  }
  const ChainOutput chain = run_chain(model, data.pattern, priors, settings, hooks);
  save_chain(dir, chain, manifest);
  save_catalog((dir / "data.csv").string(), data);
  if (fs::exists(ckpt_path)) fs::remove(ckpt_path);
  warn_unstable(chain);
  std::cout << "saved " << chain.snapshots.size() << " snapshots to " << dir.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

LabeledPattern chain_history(const RunConfig& cfg, const fs::path& chain_dir, const ChainMeta& meta) {
  CatalogOptions opt;
  opt.kappa0 = meta.bounds.kappa0;
  opt.kappa_max = meta.bounds.kappa_max;
  opt.window_end = meta.window_end;
  return load_catalog(cfg.str("catalog", (chain_dir / "data.csv").string()), opt);
}

int cmd_forecast(const RunConfig& cfg) {
  const fs::path chain_dir = cfg.require("chain");
  const ChainOutput chain = load_chain(chain_dir);
  const LabeledPattern history = chain_history(cfg, chain_dir, chain.meta);
  const double T = history.pattern.window_end;
  const double start = cfg.real("horizon_start", T);
  const double end = cfg.real("horizon_end", 0.0);
  ensure(cfg.has("horizon_end"), "missing required setting 'horizon_end'");
  ensure(start >= T, "forecast horizon overlaps the fitted window (starts before T = " + detail::format_real(T) + ")");
  ensure(end > start, "forecast horizon end must exceed its start");
  const double level = cfg.real("level", 0.95);
  const auto seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));

  std::optional<long> observed;
  if (cfg.has("observed")) observed = cfg.integer("observed", 0);
  if (cfg.has("observed_catalog")) {
    CatalogOptions any;
    any.kappa0 = stats::kNegInf;
    any.kappa_max = stats::kInf;
    const auto obs = load_catalog(cfg.str("observed_catalog"), any);
    long n = 0;
    for (double t : obs.pattern.times) n += t > start && t <= end;
    observed = n;
  }

  const auto cap = static_cast<std::size_t>(cfg.integer("cap", 1'000'000));
  const auto draws = posterior_predictive_counts(chain, history.pattern, end, seed, thread_count(cfg), cap, start);
  const ForecastResult r = forecast_result(draws, level, observed);

  const fs::path dir = out_dir(cfg);
  fs::create_directories(dir);
  {
    auto out = detail::open_out(dir / "draws.csv");
    out << "snapshot,count\n";
    for (std::size_t s = 0; s < r.draws.size(); ++s) out << s + 1 << ',' << r.draws[s] << '\n';
  }
  json result{{"level", r.level},         {"lower", r.lower}, {"upper", r.upper},
              {"mean", r.mean},           {"horizon_start", start}, {"horizon_end", end},
              {"draws", r.draws.size()}};
  if (r.observed) result["observed"] = *r.observed;
  if (r.score) result["interval_score"] = *r.score;
  write_manifest(dir / "forecast.json", result);
  json manifest = base_manifest("forecast", cfg.values());
  manifest["seed"] = seed;
  manifest["result"] = result;
  write_manifest(dir / "manifest.json", manifest);

  std::cout << "interval = (" << r.lower << ", " << r.upper << ") at level " << r.level << '\n';
  std::cout << "mean = " << r.mean << '\n';
  if (r.score) std::cout << "observed = " << *r.observed << ", interval score = " << *r.score << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_summarize(const RunConfig& cfg) {
  const fs::path chain_dir = cfg.require("chain");
  const ChainOutput chain = load_chain(chain_dir);
  const ChainMeta& meta = chain.meta;
  const double level = cfg.real("level", 0.95);
  const fs::path dir = out_dir(cfg);
  fs::create_directories(dir);

  // Mark axis: the mark interval, or six units above kappa0 when unbounded.
  const MarkBounds axis{meta.bounds.kappa0,
                        std::isfinite(meta.bounds.kappa_max) ? meta.bounds.kappa_max : meta.bounds.kappa0 + 6.0};
  const auto kappas = kappa_grid(axis, static_cast<int>(cfg.integer("kappa_points", 20)));
  std::vector<double> parents = cfg.has("kappas") ? parse_list(cfg.str("kappas"))
                                                  : std::vector<double>{axis.kappa0 + 0.25 * axis.width(),
                                                                        axis.kappa0 + 0.5 * axis.width(),
                                                                        axis.kappa0 + 0.75 * axis.width()};
  const double lag_max = cfg.real("lag_max", 1.0);
  const long lag_points = cfg.integer("lag_points", 50);
  ensure(lag_max > 0.0 && lag_points >= 1, "need lag_max > 0 and lag_points >= 1");
  std::vector<double> lags(lag_points);
  for (long k = 0; k < lag_points; ++k) lags[k] = lag_max * (k + 1) / lag_points;
  const long time_points = cfg.integer("time_points", 100);
  ensure(time_points >= 1, "time_points must be at least 1");
  std::vector<double> times(time_points);
  for (long k = 0; k < time_points; ++k) times[k] = meta.window_end * (k + 0.5) / time_points;

  const auto rho = functional_summary(chain, {FunctionalKind::rho, {}, {}}, level);
  write_table(dir / "rho.csv", rho);
  write_table(dir / "alpha.csv", functional_summary(chain, {FunctionalKind::alpha, kappas, {}}, level));
  write_table(dir / "offspring_density.csv",
              functional_summary(chain, {FunctionalKind::offspring_density, lags, parents}, level));
  write_table(dir / "tail_prob.csv", functional_summary(chain, {FunctionalKind::tail_prob, lags, parents}, level));
  write_table(dir / "background.csv", functional_summary(chain, {FunctionalKind::background, times, {}}, level));
  write_table(dir / "mark_density.csv", functional_summary(chain, {FunctionalKind::mark_density, kappas, {}}, level));

  std::ostringstream report;
  report << "model: " << to_string(meta.model) << "\nsnapshots: " << chain.snapshots.size() << '\n';
  report << "rho: mean " << rho.rows[0].mean << ", " << level * 100 << "% interval (" << rho.rows[0].lower << ", "
         << rho.rows[0].upper << ")\n";
  report << "P(rho > 1): " << rho_exceedance(chain) << '\n';
  report << "acceptance rates:\n";
  for (const auto& [k, a] : chain.acceptance) report << "  " << k << ": " << a.rate() << '\n';

  const fs::path data_path = cfg.str("catalog", (chain_dir / "data.csv").string());
  if (fs::exists(data_path)) {
    const LabeledPattern data = chain_history(cfg, chain_dir, meta);
    if (data.labels && !chain.snapshots.front().parent.empty()) {
      const auto score = misclassification(chain, data.labels);
      report << "misclassification R: mean " << score.mean << ", sd " << score.sd << '\n';
    }
  }
  if (cfg.has("forecast")) {
    const json f = detail::read_json_file(cfg.str("forecast"));
    report << "forecast interval: (" << f.at("lower") << ", " << f.at("upper") << ")";
    if (f.contains("interval_score")) report << ", interval score " << f.at("interval_score");
    report << '\n';
  }
  {
    auto out = detail::open_out(dir / "report.txt");
    out << report.str();
  }
  json manifest = base_manifest("summarize", cfg.values());
  write_manifest(dir / "manifest.json", manifest);
  warn_unstable(chain);
  std::cout << report.str();
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_prior_check(const RunConfig& cfg) {
  BasisGrid grid{static_cast<int>(cfg.integer("L", 10)), static_cast<int>(cfg.integer("M", 5)),
                 cfg.real("theta", 0.1), cfg.real("d", 1.0)};
  grid.validate();
  const GammaProcessHyper hyper{cfg.real("c0", 1.0), cfg.real("b1", 0.7), cfg.real("b2", 0.2)};
  ensure(hyper.c0 > 0.0 && hyper.b1 > 0.0 && hyper.b2 > 0.0, "c0, b1 and b2 must be positive");
  const MarkBounds bounds{cfg.real("kappa0", 4.0), cfg.real("kappa_max", 10.0)};
  ensure(bounds.kappa0 < bounds.kappa_max && std::isfinite(bounds.width()), "prior-check needs finite mark bounds");
  const long draws = cfg.integer("draws", 1000);
  ensure(draws >= 2, "draws must be at least 2");
  const auto seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));

  ChainOutput prior;
  prior.meta.model = ModelKind::nonpar;
  prior.meta.L = grid.L;
  prior.meta.M = grid.M;
  prior.meta.bounds = bounds;
  prior.meta.window_end = 1.0;
  const WeightMatrix H0 = h0_matrix(grid, hyper);
  stats::SeededRng rng(seed, 0);
  for (long r = 0; r < draws; ++r) {
    Snapshot s;
    s.iteration = r + 1;
    s.scalars = {{"theta", grid.theta}, {"d", grid.d}, {"a_beta", 1.0}, {"b_beta", 1.0}, {"mu", 1.0}};
    std::vector<double> nu(H0.raw().size());
    for (std::size_t i = 0; i < nu.size(); ++i)
      nu[i] = std::max(stats::sample_gamma(hyper.c0 * H0.raw()[i], hyper.c0, rng), 1e-300);
    s.vectors["nu"] = std::move(nu);
    prior.snapshots.push_back(std::move(s));
  }

  const auto kappas = kappa_grid(bounds, static_cast<int>(cfg.integer("kappa_points", 20)));
  const auto alpha = functional_summary(prior, {FunctionalKind::alpha, kappas, {}});
  std::vector<double> parents = cfg.has("kappas") ? parse_list(cfg.str("kappas"))
                                                  : std::vector<double>{bounds.kappa0 + 0.25 * bounds.width(),
                                                                        bounds.kappa0 + 0.75 * bounds.width()};
  const auto lags = lag_grid(grid, static_cast<int>(cfg.integer("lag_points", 50)));
  const auto offspring = functional_summary(prior, {FunctionalKind::offspring_density, lags, parents});

  const fs::path dir = out_dir(cfg);
  fs::create_directories(dir);
  double worst_z = 0.0;
  {
    auto out = detail::open_out(dir / "alpha_band.csv");
    out << std::setprecision(17) << "kappa,mean,lower,upper,analytic_mean,analytic_sd,mc_se,z\n";
    for (std::size_t k = 0; k < kappas.size(); ++k) {
      std::vector<double> values;
      for (const auto& s : prior.snapshots) {
        WeightMatrix nu(grid.L, grid.M);
        std::copy(s.vector("nu").begin(), s.vector("nu").end(), nu.raw().begin());
        values.push_back(alpha_of_kappa(kappas[k], nu, grid, bounds));
      }
      const auto mom = prior_alpha_moments(kappas[k], grid, hyper, bounds);
      double mean = 0.0, ss = 0.0;
      for (double v : values) mean += v / values.size();
      for (double v : values) ss += (v - mean) * (v - mean);
      const double se = std::sqrt(ss / (values.size() - 1.0) / values.size());
      const double z = se > 0.0 ? (mean - mom.mean) / se : 0.0;
      worst_z = std::max(worst_z, std::abs(z));
      const auto& row = alpha.rows[k];
      out << kappas[k] << ',' << row.mean << ',' << row.lower << ',' << row.upper << ',' << mom.mean << ','
          << std::sqrt(mom.variance) << ',' << se << ',' << z << '\n';
    }
  }
  write_table(dir / "offspring_band.csv", offspring);
  json manifest = base_manifest("prior-check", cfg.values());
  manifest["seed"] = seed;
  manifest["max_abs_z"] = worst_z;
  write_manifest(dir / "manifest.json", manifest);
  std::cout << "prior draws = " << draws << ", max |z| of alpha mean vs analytic = " << worst_z << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct Invocation {
  std::string config_path;
  Overrides flags;
  std::vector<std::string> sets;
};

void add_flag_option(CLI::App* sub, const std::string& flag, const std::string& key, Invocation& inv,
                     const std::string& help) {
  sub->add_option_function<std::string>(flag, [&inv, key](const std::string& v) { inv.flags[key] = v; }, help);
}

void add_switch(CLI::App* sub, const std::string& flag, const std::string& key, Invocation& inv,
                const std::string& help) {
  sub->add_flag_callback(flag, [&inv, key] { inv.flags[key] = "true"; }, help);
}

int dispatch(const std::string& command, const Invocation& inv) {
  RunConfig cfg(command, allowed_keys(command));
  if (!inv.config_path.empty()) cfg.merge_file(load_config(inv.config_path), kCommands);
  for (const auto& s : inv.sets) {
    const auto eq = s.find('=');
    ensure(eq != std::string::npos && eq > 0, "--set expects key=value, got '" + s + "'");
    cfg.set(std::string(detail::trim(s.substr(0, eq))), std::string(detail::trim(s.substr(eq + 1))));
  }
  for (const auto& [k, v] : inv.flags) cfg.set(k, v);
  if (command == "simulate") return cmd_simulate(cfg);
  if (command == "fit") return cmd_fit(cfg);
  if (command == "forecast") return cmd_forecast(cfg);
  if (command == "summarize") return cmd_summarize(cfg);
  return cmd_prior_check(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian marked Hawkes process toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Invocation inv;

  const std::map<std::string, std::string> descriptions = {
      {"simulate", "simulate a pattern from a scenario preset"},
      {"fit", "run an MCMC chain on a catalog"},
      {"forecast", "posterior predictive counts over a horizon"},
      {"summarize", "posterior functionals and a run report"},
      {"prior-check", "prior bands for alpha and offspring densities"}};
  for (const auto& name : kCommands) {
    CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
    sub->add_option("--config", inv.config_path, "INI config file");
    sub->add_option("--set", inv.sets, "config override key=value (repeatable)");
    add_flag_option(sub, "--seed", "seed", inv, "generator seed");
    add_flag_option(sub, "--threads", "threads", inv, "worker threads (default: available cores)");
    add_flag_option(sub, "--out-dir", "out_dir", inv, "output directory");
    const auto keys = allowed_keys(name);
    if (keys.count("model")) add_flag_option(sub, "--model", "model", inv, "etas, semipar, nonpar or nonpar-general");
    if (keys.count("preset")) add_flag_option(sub, "--preset", "preset", inv, "scenario or prior preset");
    if (keys.count("catalog")) add_flag_option(sub, "--catalog", "catalog", inv, "catalog CSV");
    if (keys.count("chain")) add_flag_option(sub, "--chain", "chain", inv, "fitted chain directory");
    if (keys.count("jitter")) add_flag_option(sub, "--jitter", "jitter", inv, "break tied times by uniform(0, eps)");
    if (keys.count("clamp")) add_switch(sub, "--clamp", "clamp", inv, "nudge boundary marks inward");
    if (keys.count("unstable")) add_switch(sub, "--unstable", "unstable", inv, "allow rho >= 1");
    if (keys.count("emit_branching"))
      add_switch(sub, "--emit-branching", "emit_branching", inv, "write the index,parent_index sidecar");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (const auto* sub : app.get_subcommands()) return dispatch(sub->get_name(), inv);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
