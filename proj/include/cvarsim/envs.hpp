#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cvarsim/budget_grid.hpp"
#include "cvarsim/finite_dist.hpp"
#include "cvarsim/rng_tape.hpp"

namespace cvarsim {

// A multi-armed bandit: one reward law per arm, atoms in [0, 1].
struct MabInstance {
  std::vector<FiniteDist> arms;

  int num_arms() const { return static_cast<int>(arms.size()); }
  void validate() const;
};

// Finite-horizon tabular MDP with known reward laws. Transition rows and
// reward laws are indexed by (h, s, a) with h 1-based in the accessors.
struct TabularMdp {
  int S = 0;
  int A = 0;
  int H = 0;
  int s1 = 0;
  std::vector<double> P;      // [(h-1)*S*A + s*A + a]*S + s'
  std::vector<FiniteDist> R;  // (h-1)*S*A + s*A + a

  static TabularMdp zeros(int S, int A, int H, int s1 = 0);

  double p(int h, int s, int a, int s2) const {
    return P[(cell(h, s, a)) * S + s2];
  }
  double& p_ref(int h, int s, int a, int s2) { return P[(cell(h, s, a)) * S + s2]; }
  const FiniteDist& reward(int h, int s, int a) const { return R[cell(h, s, a)]; }
  FiniteDist& reward_ref(int h, int s, int a) { return R[cell(h, s, a)]; }

  std::size_t cell(int h, int s, int a) const {
    return (static_cast<std::size_t>(h - 1) * S + s) * A + a;
  }

  // Checks shape, row sums, and nonnegative reward atoms.
  void validate() const;
};

struct TrajectoryStep {
  int state = 0;
  int action = 0;
  double reward = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  int final_state = 0;  // s_{H+1}
  double total_return = 0.0;
};

// Reward-discretized copy of an MDP: every reward atom v is replaced by
// phi(v) = min(eta * ceil(v / eta), 1) and coinciding atoms are merged.
struct DiscretizedMdp {
  TabularMdp base;
  double eta = 0.0;
  TabularMdp discretized;
};

double discretize_reward(double r, double eta);

// --- instance generators -------------------------------------------------

// Bernoulli hard instance: the flagged arm is Ber(1 - tau + eps) and every
// other arm Ber(1 - tau), with eps = sqrt((A-1) tau / (8 K)). The CVaR gap
// of every suboptimal arm is eps / tau.
MabInstance make_hard_mab(RiskLevel tau, int A, long K, int flagged_arm);

double hard_mab_eps(RiskLevel tau, int A, long K);
double tree_mdp_eps(RiskLevel tau, int A, int H, long K);

// Depth-H balanced A-ary tree with zero rewards before the leaves and
// Bernoulli rewards on the (leaf, action) pairs, realizing the hard bandit
// construction over the A^H root-to-reward action sequences. The flagged
// pair is (first leaf, action 0).
TabularMdp make_tree_mdp(RiskLevel tau, int A, int H, long K);

// Maximum achievable cumulative reward, by backward DP over max atom
// values. Throws InvariantError naming a violating (h,s,a) path when the
// maximum exceeds 1 + 1e-12.
double validate_normalized(const TabularMdp& mdp);
double max_return(const TabularMdp& mdp);

DiscretizedMdp discretize_mdp(const TabularMdp& mdp, double eta);

// One episode: roll the policy from (s1, b0), tracking the budget by grid
// index arithmetic. Consumes two tape draws per visited (h, s, a) cell, in
// the order reward then transition.
Trajectory sample_episode(const TabularMdp& mdp, const AugPolicy& policy,
                          double b0, const BudgetGrid& grid, RngTape& tape);

// Shared-randomness rollout producing the discretized return alongside the
// raw return of the budget-adapted policy. The policy's budget is updated
// with discretized rewards on `grid`; raw rewards accumulate into
// Z_adapted. Checks the pathwise sandwich
// Z_disc - H*eta <= Z_adapted <= Z_disc.
std::pair<double, double> coupled_rollout(const TabularMdp& mdp,
                                          const AugPolicy& rho, double b0,
                                          const BudgetGrid& grid, RngTape& tape);

// --- seeded random instances ---------------------------------------------

// Random grid-reward MDP with uniformly drawn transition rows and per-step
// reward caps that sum to 1, so returns are normalized. All reward atoms
// are multiples of eta.
TabularMdp random_grid_mdp(int S, int A, int H, double eta, std::uint64_t seed);

// Same shape but reward atoms drawn off-grid (continuous in the per-step
// caps); used by the discretization coupling tests.
TabularMdp random_offgrid_mdp(int S, int A, int H, std::uint64_t seed);

}  // namespace cvarsim
