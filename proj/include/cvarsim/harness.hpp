#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvarsim/bandit.hpp"
#include "cvarsim/cvar_ucbvi.hpp"
#include "cvarsim/envs.hpp"

namespace cvarsim {

// A fully specified sweep: environment, learner, risk/exploration
// parameters, and the seed list. Loaded from JSON; every field is checked
// against the validity range of the operation that consumes it.
struct ExperimentConfig {
  std::string mode;     // "mab" or "rl"
  nlohmann::json env;   // environment spec (generator, file, or inline)
  std::string learner;  // mab learner; for rl this is "cvar-ucbvi"
  std::string bonus;    // rl bonus kind
  double tau = 0.25;
  long K = 0;
  double delta = 0.05;
  double eta = 0.0;  // rl grid step; 0 picks 1/ceil(sqrt(K))
  double eps = 0.0;  // mab search tolerance; 0 picks sqrt(A/(2 tau K))
  std::vector<std::uint64_t> seeds;
  std::vector<long> checkpoints;  // ascending, <= K; empty picks a default
  std::string out_csv;
  std::string out_json;
  bool diagnostics = true;
  bool store_series = true;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct BuiltEnv {
  std::optional<MabInstance> mab;
  std::optional<TabularMdp> mdp;
};

// Instantiates the env spec: {"type": "hard_mab" | "tree" | "random_grid" |
// "random_offgrid" | "file" | "inline", ...}. Generators are seeded from the
// spec itself, so the same config always builds the same environment.
BuiltEnv build_env(const ExperimentConfig& config);

struct RegretSeries {
  std::vector<double> instant;
  std::vector<double> cumulative;
};

// instant[k] = cvar_star - pick_cvars[k] (never negative up to 1e-9; tiny
// negatives are clamped, anything larger is an oracle inconsistency).
RegretSeries compute_regret_series(const std::vector<double>& pick_cvars,
                                   double cvar_star);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<double> instant_at_checkpoint;
  std::vector<double> cum_at_checkpoint;
  std::vector<double> cum_series;  // per-episode cumulative regret
  nlohmann::json diagnostics;      // learner-specific flags
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string learner_label;
  double cvar_star = 0.0;
  std::vector<long> checkpoints;
  std::vector<SeedOutcome> seeds;
  std::vector<double> mean_cum;  // per checkpoint, over ok seeds
  std::vector<double> std_cum;   // sample stddev
  // Least-squares slope of log10(mean cumulative regret) against
  // log10(checkpoint); NaN when fewer than two positive points exist.
  double loglog_slope = 0.0;
  std::uint64_t config_hash = 0;
  std::string build_id;
};

// Slope statistic used in the aggregate (exposed for recomputation tests).
double loglog_slope(const std::vector<long>& checkpoints,
                    const std::vector<double>& mean_cum);

// Runs every seed (fanning out over up to `parallelism` threads), aggregates
// checkpoint statistics in seed order, and writes the CSV/JSON outputs when
// paths are configured. Output bytes do not depend on the parallelism.
ExperimentResult run_experiment(const ExperimentConfig& config, int parallelism);

// parallelism <= 0 resolves through CVARSIM_PARALLELISM, then the hardware
// concurrency.
int resolve_parallelism(int requested);

std::string result_csv(const ExperimentResult& result);
nlohmann::json result_json(const ExperimentResult& result);

// Diagnostics drivers behind the `diag` CLI verbs; each consumes a small
// JSON config and returns a JSON report.
nlohmann::json diag_concentration(const nlohmann::json& cfg);
nlohmann::json diag_coupling(const nlohmann::json& cfg);
nlohmann::json diag_pessimism(const nlohmann::json& cfg);
nlohmann::json diag_simulation_gap(const nlohmann::json& cfg);

}  // namespace cvarsim
