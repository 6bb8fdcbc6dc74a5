#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cvarsim/augmented_dp.hpp"
#include "cvarsim/harness.hpp"
#include "cvarsim/serialization.hpp"
#include "cvarsim/svg.hpp"

namespace {

using namespace cvarsim;

struct RunArgs {
  std::string config_path;
  int parallelism = 0;
  long seed_offset = 0;
};

int run_mode(const RunArgs& args, const std::string& expected_mode) {
  ExperimentConfig config = ExperimentConfig::from_json(load_json_file(args.config_path));
  if (config.mode != expected_mode) {
    throw ConfigError("config mode \"" + config.mode + "\" does not match the subcommand");
  }
  if (args.seed_offset != 0) {
    for (std::uint64_t& s : config.seeds) s += static_cast<std::uint64_t>(args.seed_offset);
  }
  const ExperimentResult result = run_experiment(config, args.parallelism);
  long failed = 0;
  for (const SeedOutcome& s : result.seeds) {
    if (!s.ok) {
      ++failed;
      std::cerr << "seed " << s.seed << " failed: " << s.error << "\n";
    }
  }
  if (config.out_csv.empty() && config.out_json.empty()) {
    std::cout << result_json(result).dump(2) << "\n";
  } else {
    std::cerr << result.learner_label << ": " << result.seeds.size() - failed << "/"
              << result.seeds.size() << " seeds ok";
    if (!result.mean_cum.empty()) {
      std::cerr << ", final mean cumulative regret " << result.mean_cum.back();
    }
    std::cerr << "\n";
  }
  return failed == 0 ? 0 : 3;
}

int oracle_solve(const std::string& mdp_path, double tau, double eta,
                 const std::string& out_path) {
  const TabularMdp mdp = mdp_from_json(load_json_file(mdp_path));
  validate_normalized(mdp);
  const BudgetGrid grid(eta);
  const OptimalSolution sol = solve_optimal(mdp, RiskLevel(tau), grid);
  nlohmann::json v1_row = nlohmann::json::array();
  nlohmann::json budgets = nlohmann::json::array();
  for (int i = 0; i < grid.points(); ++i) {
    budgets.push_back(grid.budget(i));
    v1_row.push_back(sol.v.at(1, mdp.s1, i));
  }
  const nlohmann::json out{{"cvar_star", sol.cvar_star},
                           {"b_star", sol.b_star},
                           {"tau", tau},
                           {"eta", grid.eta()},
                           {"budgets", budgets},
                           {"v1_row", v1_row}};
  if (out_path.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    write_text_file(out_path, out.dump(2) + "\n");
  }
  return 0;
}

int plot(const std::vector<std::string>& inputs, const std::string& out_path,
         bool log_x, bool log_y) {
  std::vector<RegretCurve> curves;
  for (const std::string& path : inputs) {
    curves.push_back(curve_from_result_json(load_json_file(path)));
  }
  PlotOptions options;
  options.log_x = log_x;
  options.log_y = log_y;
  write_text_file(out_path, render_regret_svg(curves, options));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"risk-sensitive bandit / tabular RL simulator"};
  app.require_subcommand(1);

  RunArgs mab_args, rl_args;
  auto* mab = app.add_subcommand("mab", "multi-armed bandit experiments");
  auto* mab_run = mab->add_subcommand("run", "run a bandit sweep from a config");
  mab_run->add_option("config", mab_args.config_path, "config JSON path")->required();
  mab_run->add_option("-j,--parallelism", mab_args.parallelism, "worker threads");
  mab_run->add_option("--seed-offset", mab_args.seed_offset, "shift every seed");

  auto* rl = app.add_subcommand("rl", "tabular CVaR RL experiments");
  auto* rl_run = rl->add_subcommand("run", "run an RL sweep from a config");
  rl_run->add_option("config", rl_args.config_path, "config JSON path")->required();
  rl_run->add_option("-j,--parallelism", rl_args.parallelism, "worker threads");
  rl_run->add_option("--seed-offset", rl_args.seed_offset, "shift every seed");

  std::string oracle_mdp, oracle_out;
  double oracle_tau = 0.25, oracle_eta = 0.25;
  auto* oracle = app.add_subcommand("oracle", "exact CVaR planning");
  auto* oracle_cmd = oracle->add_subcommand("solve", "solve an MDP exactly");
  oracle_cmd->add_option("mdp", oracle_mdp, "MDP JSON path")->required();
  oracle_cmd->add_option("--tau", oracle_tau, "risk tolerance")->required();
  oracle_cmd->add_option("--eta", oracle_eta, "budget grid step")->required();
  oracle_cmd->add_option("-o,--out", oracle_out, "output path (default stdout)");

  std::string diag_config;
  auto* diag = app.add_subcommand("diag", "diagnostic suites");
  std::vector<std::pair<std::string, CLI::App*>> diag_cmds;
  for (const char* name : {"concentration", "coupling", "pessimism", "simulation-gap"}) {
    auto* sub = diag->add_subcommand(name);
    sub->add_option("config", diag_config, "diagnostic config JSON")->required();
    diag_cmds.emplace_back(name, sub);
  }

  std::vector<std::string> plot_inputs;
  std::string plot_out;
  bool plot_log_x = false, plot_log_y = false;
  auto* plot_cmd = app.add_subcommand("plot", "render regret curves to SVG");
  plot_cmd->add_option("results", plot_inputs, "results JSON path(s)")->required();
  plot_cmd->add_option("-o,--out", plot_out, "output SVG path")->required();
  plot_cmd->add_flag("--log-x", plot_log_x, "log10 x axis");
  plot_cmd->add_flag("--log-y", plot_log_y, "log10 y axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (mab_run->parsed()) return run_mode(mab_args, "mab");
    if (rl_run->parsed()) return run_mode(rl_args, "rl");
    if (oracle_cmd->parsed()) {
      return oracle_solve(oracle_mdp, oracle_tau, oracle_eta, oracle_out);
    }
    for (const auto& [name, sub] : diag_cmds) {
      if (!sub->parsed()) continue;
      const nlohmann::json cfg = load_json_file(diag_config);
      nlohmann::json report;
      if (name == "concentration") report = diag_concentration(cfg);
      if (name == "coupling") report = diag_coupling(cfg);
      if (name == "pessimism") report = diag_pessimism(cfg);
      if (name == "simulation-gap") report = diag_simulation_gap(cfg);
      std::cout << report.dump(2) << "\n";
      return 0;
    }
    if (plot_cmd->parsed()) return plot(plot_inputs, plot_out, plot_log_x, plot_log_y);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "invariant failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
