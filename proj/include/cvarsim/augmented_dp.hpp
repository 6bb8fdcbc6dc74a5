#pragma once

#include <cstdint>

#include "cvarsim/budget_grid.hpp"
#include "cvarsim/envs.hpp"
#include "cvarsim/risk.hpp"

namespace cvarsim {

struct OptimalSolution {
  ValueTable v;       // V*[h][s][b], h = 1..H+1, terminal layer b^+
  AugPolicy policy;   // argmin actions, ties to the lowest index
  int b_star_index = 0;
  double b_star = 0.0;
  double cvar_star = 0.0;
};

// Exact backward induction in the budget-augmented MDP. Rewards must be
// grid-valued. V_{H+1}(s, b) = b^+; budgets below the grid floor contribute
// value 0. b* maximizes b - tau^-1 V_1(s1, b) over the grid (smallest-b
// tie-break) and cvar_star is that maximum.
OptimalSolution solve_optimal(const TabularMdp& mdp, RiskLevel tau,
                              const BudgetGrid& grid);

// Exact law of the return Z = sum of rewards when rolling `rho` from
// (s1, b0), by forward DP over (state, budget) with the budget range
// extended down to -1. Grid-valued rewards only.
FiniteDist returns_distribution(const TabularMdp& mdp, const AugPolicy& rho,
                                double b0, const BudgetGrid& grid);

// CVaR_tau of returns_distribution(mdp, rho, b0): the exact per-episode
// value the harness charges to a learner.
double evaluate_policy_cvar(const TabularMdp& mdp, const AugPolicy& rho,
                            double b0, RiskLevel tau, const BudgetGrid& grid);

// Brute-force oracle: evaluates every deterministic Markov augmented policy
// at every grid starting budget and returns the best CVaR. Throws when the
// policy count exceeds `guard`.
double enumerate_optimal_tiny(const TabularMdp& mdp, RiskLevel tau,
                              const BudgetGrid& grid,
                              std::uint64_t guard = 1'000'000);

}  // namespace cvarsim
