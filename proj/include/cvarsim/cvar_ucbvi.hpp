#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvarsim/augmented_dp.hpp"
#include "cvarsim/budget_grid.hpp"
#include "cvarsim/envs.hpp"
#include "cvarsim/rng_tape.hpp"

namespace cvarsim {

enum class BonusKind { hoeffding, bernstein };

BonusKind parse_bonus_kind(const std::string& name);
std::string to_string(BonusKind kind);

// Count-based bonus min(sqrt(L / n), 1); independent of the budget.
double hoeffding_bonus(long n, double L);

// Empirical transition model: visit counts floored at 1 and empirical rows,
// uniform over states for never-visited cells.
class LearnerModel {
 public:
  LearnerModel(int S, int A, int H, long K, double delta, BonusKind kind);

  int S() const { return S_; }
  int A() const { return A_; }
  int H() const { return H_; }
  long episode() const { return k_; }
  double L() const { return L_; }
  BonusKind kind() const { return kind_; }

  long raw_visits(int h, int s, int a) const { return visits_[cell(h, s, a)]; }
  long count(int h, int s, int a) const {
    const long n = visits_[cell(h, s, a)];
    return n < 1 ? 1 : n;
  }
  // Empirical transition row; uniform when the cell was never visited.
  void fill_phat(int h, int s, int a, double* out) const;

  void update(const Trajectory& traj);

  // FNV-1a hash of the visit counts; cheap episode fingerprint.
  std::uint64_t counts_digest() const;

  std::size_t cell(int h, int s, int a) const {
    return (static_cast<std::size_t>(h - 1) * S_ + s) * A_ + a;
  }

 private:
  int S_, A_, H_;
  long k_ = 1;
  double L_;
  BonusKind kind_;
  std::vector<long> visits_;  // (h,s,a)
  std::vector<long> trans_;   // (h,s,a,s')
};

struct ConfidenceTables {
  ValueTable lower;  // pessimistic values, clipped below at 0
  ValueTable upper;  // optimistic values, clipped above at 1 (Bernstein only)
  bool has_upper = false;
};

struct PlanResult {
  ConfidenceTables tables;
  AugPolicy policy;
  int b_hat_index = 0;
  double b_hat = 0.0;
  double objective = 0.0;            // b_hat - V_lower(1, s1, b_hat) / tau
  std::vector<double> policy_bonus;  // bonus at the chosen action, (h,s,i)
};

// Variance-adaptive bonus evaluated from the layer-(h+1) tables: the
// transition-variance of the reward-averaged lower value, the expected
// squared confidence width, and L/n; the total is truncated at 1.
double bernstein_bonus(const LearnerModel& model, const ConfidenceTables& tables,
                       const TabularMdp& env, const BudgetGrid& grid, int h,
                       int s, int b_index, int a);

// One planning pass of bonus-driven value iteration over the budget grid:
// pessimistic backups choose the argmin action, the Bernstein kind also
// propagates the optimistic table at the chosen action, and the starting
// budget maximizes the pessimistic CVaR objective (smallest-b tie-break).
PlanResult plan_episode(const LearnerModel& model, const TabularMdp& env,
                        RiskLevel tau, const BudgetGrid& grid);

// Diagnostic for the planning gap: lhs = V1^rho(s1, b_hat) - V_lower, and
// rhs = e * sum_h E[2 Bon + xi] along the true-kernel occupancy of the
// planned policy, with xi = min(1, 2 H S L / N).
std::pair<double, double> simulation_gap_check(const TabularMdp& env,
                                               const BudgetGrid& grid,
                                               const LearnerModel& model,
                                               const PlanResult& plan,
                                               double v1_rho_at_bhat);

struct RlEpisode {
  int b_hat_index = 0;
  double b_hat = 0.0;
  double episode_cvar = 0.0;
  double instant_regret = 0.0;
  double cum_regret = 0.0;
  double bonus_sum = 0.0;  // planned bonuses along the visited trajectory
  std::uint64_t counts_digest = 0;
};

struct RlDiagnostics {
  bool pessimism_ok = true;        // V_lower <= V* everywhere, all episodes
  bool optimism_ok = true;         // V* <= V_upper everywhere (Bernstein)
  bool optimistic_cvar_ok = true;  // planning objective >= cvar*
  bool simgap_ok = true;           // lhs <= rhs every episode
  long upper_lower_inversions = 0;
};

struct RlRunOptions {
  bool diagnostics = true;
};

struct RlRunResult {
  std::vector<RlEpisode> episodes;
  RlDiagnostics diag;
};

RlRunResult run_cvar_ucbvi(const TabularMdp& env, BonusKind kind, long K,
                           double delta, RiskLevel tau, const BudgetGrid& grid,
                           RngTape& tape, const OptimalSolution& oracle,
                           const RlRunOptions& options = {});

}  // namespace cvarsim
