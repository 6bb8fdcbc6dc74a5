#include "cvarsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <thread>

#include "cvarsim/augmented_dp.hpp"
#include "cvarsim/serialization.hpp"

namespace cvarsim {

namespace {

constexpr const char* kBuildId = "cvarsim-1.0";

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

double require_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ConfigError(std::string("missing numeric field \"") + key + "\"");
  }
  return j.at(key).get<double>();
}

constexpr long default_checkpoint_count = 12;

std::vector<long> default_checkpoints(long K) {
  // Log-spaced from max(K/100, 1) to K.
  std::vector<long> cps;
  if (K <= 0) return cps;
  const double lo = std::max<double>(static_cast<double>(K) / 100.0, 1.0);
  const double hi = static_cast<double>(K);
  for (long i = 0; i < default_checkpoint_count; ++i) {
    const double f = default_checkpoint_count == 1
                         ? 1.0
                         : static_cast<double>(i) / (default_checkpoint_count - 1);
    const long cp = static_cast<long>(std::llround(lo * std::pow(hi / lo, f)));
    if (cps.empty() || cp > cps.back()) cps.push_back(std::min(cp, K));
  }
  if (cps.back() != K) cps.push_back(K);
  return cps;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (!j.contains("mode")) throw ConfigError("config missing \"mode\"");
  c.mode = j.at("mode").get<std::string>();
  if (c.mode != "mab" && c.mode != "rl") {
    throw ConfigError("mode must be \"mab\" or \"rl\"");
  }
  if (!j.contains("env")) throw ConfigError("config missing \"env\"");
  c.env = j.at("env");
  c.tau = require_number(j, "tau");
  if (!(c.tau > 0.0) || !(c.tau <= 1.0)) throw ConfigError("tau outside (0, 1]");
  c.K = static_cast<long>(require_number(j, "K"));
  if (c.K < 0) throw ConfigError("K must be nonnegative");
  c.delta = j.value("delta", 0.05);
  if (!(c.delta > 0.0) || !(c.delta < 1.0)) throw ConfigError("delta outside (0, 1)");
  if (c.mode == "mab") {
    c.learner = j.value("learner", std::string("bernstein-ucb"));
    parse_mab_learner(c.learner);  // validates
    c.eps = j.value("eps", 0.0);
  } else {
    c.learner = "cvar-ucbvi";
    c.bonus = j.value("bonus", std::string("hoeffding"));
    parse_bonus_kind(c.bonus);  // validates
    c.eta = j.value("eta", 0.0);
    if (c.eta == 0.0) {
      // eta ~ K^(-1/2), snapped to an exact divisor of 1.
      c.eta = 1.0 / std::ceil(std::sqrt(static_cast<double>(std::max<long>(c.K, 1))));
    }
    BudgetGrid check(c.eta);  // validates
  }
  if (!j.contains("seeds") || !j.at("seeds").is_array() || j.at("seeds").empty()) {
    throw ConfigError("config needs a non-empty \"seeds\" array");
  }
  for (const auto& s : j.at("seeds")) c.seeds.push_back(s.get<std::uint64_t>());
  if (j.contains("checkpoints")) {
    for (const auto& cp : j.at("checkpoints")) c.checkpoints.push_back(cp.get<long>());
    for (std::size_t i = 0; i < c.checkpoints.size(); ++i) {
      if (c.checkpoints[i] < 1 || c.checkpoints[i] > c.K ||
          (i > 0 && c.checkpoints[i] <= c.checkpoints[i - 1])) {
        throw ConfigError("checkpoints must be ascending within [1, K]");
      }
    }
  }
  c.out_csv = j.value("out_csv", std::string());
  c.out_json = j.value("out_json", std::string());
  c.diagnostics = j.value("diagnostics", true);
  c.store_series = j.value("store_series", true);
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j{{"mode", mode},       {"env", env},     {"learner", learner},
                   {"tau", tau},         {"K", K},         {"delta", delta},
                   {"seeds", seeds},     {"out_csv", out_csv},
                   {"out_json", out_json}, {"diagnostics", diagnostics},
                   {"store_series", store_series}};
  if (mode == "rl") {
    j["bonus"] = bonus;
    j["eta"] = eta;
  } else {
    j["eps"] = eps;
  }
  if (!checkpoints.empty()) j["checkpoints"] = checkpoints;
  return j;
}

BuiltEnv build_env(const ExperimentConfig& config) {
  const nlohmann::json& e = config.env;
  if (!e.contains("type")) throw ConfigError("env spec missing \"type\"");
  const std::string type = e.at("type").get<std::string>();
  BuiltEnv built;
  try {
    if (type == "hard_mab") {
      const int A = static_cast<int>(require_number(e, "A"));
      const long k_inst = static_cast<long>(require_number(e, "K_instance"));
      const int flagged = static_cast<int>(e.value("flagged_arm", A - 1));
      built.mab = make_hard_mab(RiskLevel(config.tau), A, k_inst, flagged);
    } else if (type == "tree") {
      const int A = static_cast<int>(require_number(e, "A"));
      const int H = static_cast<int>(require_number(e, "H"));
      const long k_inst = static_cast<long>(require_number(e, "K_instance"));
      built.mdp = make_tree_mdp(RiskLevel(config.tau), A, H, k_inst);
    } else if (type == "random_grid") {
      built.mdp = random_grid_mdp(static_cast<int>(require_number(e, "S")),
                                  static_cast<int>(require_number(e, "A")),
                                  static_cast<int>(require_number(e, "H")),
                                  e.value("eta", config.eta),
                                  static_cast<std::uint64_t>(require_number(e, "gen_seed")));
    } else if (type == "random_offgrid") {
      built.mdp = random_offgrid_mdp(static_cast<int>(require_number(e, "S")),
                                     static_cast<int>(require_number(e, "A")),
                                     static_cast<int>(require_number(e, "H")),
                                     static_cast<std::uint64_t>(require_number(e, "gen_seed")));
    } else if (type == "file") {
      const nlohmann::json doc = load_json_file(e.at("path").get<std::string>());
      if (doc.contains("arms")) {
        built.mab = mab_from_json(doc);
      } else {
        built.mdp = mdp_from_json(doc);
      }
    } else if (type == "inline") {
      if (e.contains("arms")) {
        built.mab = mab_from_json(e);
      } else if (e.contains("mdp")) {
        built.mdp = mdp_from_json(e.at("mdp"));
      } else {
        throw ConfigError("inline env needs \"arms\" or \"mdp\"");
      }
    } else {
      throw ConfigError("unknown env type: " + type);
    }
  } catch (const ArgumentError& err) {
    throw ConfigError(std::string("env spec rejected: ") + err.what());
  }
  if (config.mode == "mab" && !built.mab) {
    throw ConfigError("mab experiment needs a bandit environment");
  }
  if (config.mode == "rl" && !built.mdp) {
    throw ConfigError("rl experiment needs an MDP environment");
  }
  return built;
}

RegretSeries compute_regret_series(const std::vector<double>& pick_cvars,
                                   double cvar_star) {
  RegretSeries series;
  series.instant.reserve(pick_cvars.size());
  series.cumulative.reserve(pick_cvars.size());
  double cum = 0.0;
  for (double v : pick_cvars) {
    double inst = cvar_star - v;
    if (inst < -1e-9) {
      throw InvariantError("pick CVaR exceeds the oracle optimum");
    }
    inst = std::max(inst, 0.0);
    cum += inst;
    series.instant.push_back(inst);
    series.cumulative.push_back(cum);
  }
  return series;
}

double loglog_slope(const std::vector<long>& checkpoints,
                    const std::vector<double>& mean_cum) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (mean_cum[i] > 0.0 && checkpoints[i] > 0) {
      x.push_back(std::log10(static_cast<double>(checkpoints[i])));
      y.push_back(std::log10(mean_cum[i]));
    }
  }
  if (x.size() < 2) return std::nan("");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

int resolve_parallelism(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CVARSIM_PARALLELISM")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

SeedOutcome run_one_seed(const ExperimentConfig& config, const BuiltEnv& env,
                         const OptimalSolution* oracle, double cvar_star,
                         std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  RngTape tape(seed);
  std::vector<double> pick_cvars;
  if (config.mode == "mab") {
    MabRunOptions options;
    options.diagnostics = config.diagnostics;
    options.eps = config.eps;
    const MabRunResult run =
        run_bandit(*env.mab, parse_mab_learner(config.learner), config.K,
                   config.delta, RiskLevel(config.tau), tape, options);
    pick_cvars.reserve(run.episodes.size());
    for (const MabEpisode& ep : run.episodes) pick_cvars.push_back(ep.arm_cvar);
    out.diagnostics = {{"pessimism_ok", run.diag.pessimism_ok},
                       {"optimism_ok", run.diag.optimism_ok}};
  } else {
    const BudgetGrid grid(config.eta);
    RlRunOptions options;
    options.diagnostics = config.diagnostics;
    const RlRunResult run =
        run_cvar_ucbvi(*env.mdp, parse_bonus_kind(config.bonus), config.K,
                       config.delta, RiskLevel(config.tau), grid, tape, *oracle,
                       options);
    pick_cvars.reserve(run.episodes.size());
    for (const RlEpisode& ep : run.episodes) pick_cvars.push_back(ep.episode_cvar);
    out.diagnostics = {{"pessimism_ok", run.diag.pessimism_ok},
                       {"optimism_ok", run.diag.optimism_ok},
                       {"optimistic_cvar_ok", run.diag.optimistic_cvar_ok},
                       {"simgap_ok", run.diag.simgap_ok},
                       {"upper_lower_inversions", run.diag.upper_lower_inversions}};
    // Learner snapshots kept at checkpoints only.
    nlohmann::json b_hats = nlohmann::json::array();
    nlohmann::json bonus_sums = nlohmann::json::array();
    nlohmann::json digests = nlohmann::json::array();
    for (long cp : config.checkpoints) {
      const RlEpisode& ep = run.episodes[static_cast<std::size_t>(cp - 1)];
      b_hats.push_back(ep.b_hat);
      bonus_sums.push_back(ep.bonus_sum);
      digests.push_back(ep.counts_digest);
    }
    out.diagnostics["checkpoint_b_hat"] = std::move(b_hats);
    out.diagnostics["checkpoint_bonus_sum"] = std::move(bonus_sums);
    out.diagnostics["checkpoint_counts_digest"] = std::move(digests);
  }
  RegretSeries series = compute_regret_series(pick_cvars, cvar_star);
  out.instant_at_checkpoint.reserve(config.checkpoints.size());
  out.cum_at_checkpoint.reserve(config.checkpoints.size());
  for (long cp : config.checkpoints) {
    out.instant_at_checkpoint.push_back(series.instant[static_cast<std::size_t>(cp - 1)]);
    out.cum_at_checkpoint.push_back(series.cumulative[static_cast<std::size_t>(cp - 1)]);
  }
  if (config.store_series) out.cum_series = std::move(series.cumulative);
  out.ok = true;
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, int parallelism) {
  ExperimentResult result;
  result.config = config;
  if (result.config.checkpoints.empty()) {
    result.config.checkpoints = default_checkpoints(config.K);
  }
  result.checkpoints = result.config.checkpoints;
  result.build_id = kBuildId;
  result.config_hash = fnv1a(result.config.to_json().dump());

  const BuiltEnv env = build_env(config);
  OptimalSolution oracle;
  if (config.mode == "mab") {
    result.learner_label = config.learner;
    double best = -1.0 / 0.0;
    for (const FiniteDist& arm : env.mab->arms) {
      best = std::max(best, cvar_exact(arm, RiskLevel(config.tau)));
    }
    result.cvar_star = best;
  } else {
    result.learner_label = "cvar-ucbvi-" + config.bonus;
    env.mdp->validate();
    validate_normalized(*env.mdp);
    const BudgetGrid grid(config.eta);
    oracle = solve_optimal(*env.mdp, RiskLevel(config.tau), grid);
    result.cvar_star = oracle.cvar_star;
  }

  const int workers = std::max(1, std::min<int>(resolve_parallelism(parallelism),
                                                static_cast<int>(config.seeds.size())));
  result.seeds.resize(config.seeds.size());
  auto work = [&](int worker) {
    for (std::size_t i = static_cast<std::size_t>(worker); i < config.seeds.size();
         i += static_cast<std::size_t>(workers)) {
      try {
        result.seeds[i] = run_one_seed(result.config, env,
                                       config.mode == "rl" ? &oracle : nullptr,
                                       result.cvar_star, config.seeds[i]);
      } catch (const std::exception& e) {
        result.seeds[i].seed = config.seeds[i];
        result.seeds[i].ok = false;
        result.seeds[i].error = e.what();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (std::thread& t : pool) t.join();
  }

  // Aggregate in seed order over the seeds that completed.
  const std::size_t ncp = result.checkpoints.size();
  result.mean_cum.assign(ncp, 0.0);
  result.std_cum.assign(ncp, 0.0);
  long ok_count = 0;
  for (const SeedOutcome& s : result.seeds) {
    if (!s.ok) continue;
    ++ok_count;
    for (std::size_t c = 0; c < ncp; ++c) result.mean_cum[c] += s.cum_at_checkpoint[c];
  }
  if (ok_count > 0) {
    for (std::size_t c = 0; c < ncp; ++c) result.mean_cum[c] /= static_cast<double>(ok_count);
  }
  if (ok_count > 1) {
    for (std::size_t c = 0; c < ncp; ++c) {
      double ss = 0.0;
      for (const SeedOutcome& s : result.seeds) {
        if (!s.ok) continue;
        const double d = s.cum_at_checkpoint[c] - result.mean_cum[c];
        ss += d * d;
      }
      result.std_cum[c] = std::sqrt(ss / static_cast<double>(ok_count - 1));
    }
  }
  result.loglog_slope = loglog_slope(result.checkpoints, result.mean_cum);

  if (!config.out_csv.empty()) write_text_file(config.out_csv, result_csv(result));
  if (!config.out_json.empty()) {
    write_text_file(config.out_json, result_json(result).dump(2) + "\n");
  }
  return result;
}

std::string result_csv(const ExperimentResult& result) {
  std::string csv = "mode,learner,seed,episode,instant_regret,cum_regret\n";
  for (const SeedOutcome& s : result.seeds) {
    if (!s.ok) continue;
    for (std::size_t c = 0; c < result.checkpoints.size(); ++c) {
      csv += result.config.mode;
      csv += ',';
      csv += result.learner_label;
      csv += ',';
      csv += std::to_string(s.seed);
      csv += ',';
      csv += std::to_string(result.checkpoints[c]);
      csv += ',';
      csv += fmt17(s.instant_at_checkpoint[c]);
      csv += ',';
      csv += fmt17(s.cum_at_checkpoint[c]);
      csv += '\n';
    }
  }
  return csv;
}

nlohmann::json result_json(const ExperimentResult& result) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const SeedOutcome& s : result.seeds) {
    nlohmann::json js{{"seed", s.seed}, {"ok", s.ok}};
    if (!s.ok) {
      js["error"] = s.error;
    } else {
      js["instant_at_checkpoint"] = s.instant_at_checkpoint;
      js["cum_at_checkpoint"] = s.cum_at_checkpoint;
      js["diagnostics"] = s.diagnostics;
      if (!s.cum_series.empty()) js["cum_series"] = s.cum_series;
    }
    seeds.push_back(std::move(js));
  }
  nlohmann::json aggregate{{"mean_cum", result.mean_cum},
                           {"std_cum", result.std_cum}};
  if (std::isnan(result.loglog_slope)) {
    aggregate["loglog_slope"] = nullptr;
  } else {
    aggregate["loglog_slope"] = result.loglog_slope;
  }
  return {{"mode", result.config.mode},
          {"learner", result.learner_label},
          {"tau", result.config.tau},
          {"K", result.config.K},
          {"delta", result.config.delta},
          {"cvar_star", result.cvar_star},
          {"config_hash", result.config_hash},
          {"build_id", result.build_id},
          {"checkpoints", result.checkpoints},
          {"aggregate", std::move(aggregate)},
          {"seeds", std::move(seeds)}};
}

nlohmann::json diag_concentration(const nlohmann::json& cfg) {
  FiniteDist dist = [&]() {
    const nlohmann::json& d = cfg.at("dist");
    if (d.is_array()) {
      std::vector<Atom> atoms;
      for (const auto& a : d) atoms.push_back({a.at("v").get<double>(), a.at("p").get<double>()});
      return FiniteDist(std::move(atoms));
    }
    return FiniteDist::bernoulli(d.at("p").get<double>());
  }();
  const long N = static_cast<long>(require_number(cfg, "N"));
  const RiskLevel tau(require_number(cfg, "tau"));
  const double delta = require_number(cfg, "delta");
  const long trials = static_cast<long>(cfg.value("trials", 1000.0));
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.value("seed", 1.0));

  const double exact = cvar_exact(dist, tau);
  const ConcentrationRadius radius = cvar_concentration_radius(N, tau, delta);
  RngTape tape(seed);
  long covered = 0;
  std::vector<double> samples(static_cast<std::size_t>(N));
  for (long t = 0; t < trials; ++t) {
    for (long i = 0; i < N; ++i) {
      samples[static_cast<std::size_t>(i)] = dist.sample(tape.next_learner_uniform());
    }
    const double emp = empirical_cvar(samples, tau);
    if (std::abs(emp - exact) <= radius.radius) ++covered;
  }
  return {{"trials", trials},
          {"N", N},
          {"tau", tau.tau},
          {"delta", delta},
          {"cvar_exact", exact},
          {"radius", radius.radius},
          {"radius_valid", radius.valid},
          {"coverage", static_cast<double>(covered) / static_cast<double>(trials)}};
}

nlohmann::json diag_coupling(const nlohmann::json& cfg) {
  const int S = static_cast<int>(cfg.value("S", 3.0));
  const int A = static_cast<int>(cfg.value("A", 2.0));
  const int H = static_cast<int>(cfg.value("H", 3.0));
  const double eta = require_number(cfg, "eta");
  const long rollouts = static_cast<long>(cfg.value("rollouts", 1000.0));
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.value("seed", 1.0));

  const TabularMdp mdp = random_offgrid_mdp(S, A, H, seed);
  const BudgetGrid grid(eta);
  RngTape tape(seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 policy_rng(seed + 17);

  long violations = 0;
  double max_gap = 0.0;
  for (long t = 0; t < rollouts; ++t) {
    AugPolicy rho(H, S, grid.points());
    for (int& a : rho.raw()) a = static_cast<int>(policy_rng() % static_cast<std::uint64_t>(A));
    const int b0 = static_cast<int>(policy_rng() % static_cast<std::uint64_t>(grid.points()));
    try {
      const auto [z_disc, z_adapted] = coupled_rollout(mdp, rho, grid.budget(b0), grid, tape);
      max_gap = std::max(max_gap, z_disc - z_adapted);
    } catch (const InvariantError&) {
      ++violations;
    }
  }
  return {{"rollouts", rollouts},
          {"violations", violations},
          {"max_gap", max_gap},
          {"H_eta", H * grid.eta()}};
}

namespace {

nlohmann::json rl_structure_report(const nlohmann::json& cfg, bool simgap_only) {
  ExperimentConfig config = ExperimentConfig::from_json(cfg);
  if (config.mode != "rl") throw ConfigError("rl diagnostic needs mode \"rl\"");
  config.diagnostics = true;
  config.store_series = false;
  ExperimentResult result = run_experiment(config, 0);
  long runs = 0, pess = 0, opt = 0, ocvar = 0, simgap = 0, failed = 0;
  for (const SeedOutcome& s : result.seeds) {
    if (!s.ok) {
      ++failed;
      continue;
    }
    ++runs;
    if (s.diagnostics.value("pessimism_ok", false)) ++pess;
    if (s.diagnostics.value("optimism_ok", false)) ++opt;
    if (s.diagnostics.value("optimistic_cvar_ok", false)) ++ocvar;
    if (s.diagnostics.value("simgap_ok", false)) ++simgap;
  }
  nlohmann::json report{{"runs", runs},
                        {"failed_seeds", failed},
                        {"simgap_frac", runs ? static_cast<double>(simgap) / runs : 0.0}};
  if (!simgap_only) {
    report["pessimism_frac"] = runs ? static_cast<double>(pess) / runs : 0.0;
    report["optimism_frac"] = runs ? static_cast<double>(opt) / runs : 0.0;
    report["optimistic_cvar_frac"] = runs ? static_cast<double>(ocvar) / runs : 0.0;
  }
  return report;
}

}  // namespace

nlohmann::json diag_pessimism(const nlohmann::json& cfg) {
  return rl_structure_report(cfg, false);
}

nlohmann::json diag_simulation_gap(const nlohmann::json& cfg) {
  return rl_structure_report(cfg, true);
}

}  // namespace cvarsim
