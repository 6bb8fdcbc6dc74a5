#include "cvarsim/augmented_dp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cvarsim {

namespace {

// Reward law as (grid steps, probability) pairs; throws on off-grid atoms.
std::vector<std::pair<int, double>> reward_steps_of(const FiniteDist& law,
                                                    const BudgetGrid& grid) {
  std::vector<std::pair<int, double>> out;
  out.reserve(law.size());
  for (const Atom& a : law.atoms()) {
    out.push_back({grid.reward_steps(a.value), a.prob});
  }
  return out;
}

std::vector<std::vector<std::pair<int, double>>> all_reward_steps(
    const TabularMdp& mdp, const BudgetGrid& grid) {
  std::vector<std::vector<std::pair<int, double>>> steps(mdp.R.size());
  for (std::size_t i = 0; i < mdp.R.size(); ++i) {
    try {
      steps[i] = reward_steps_of(mdp.R[i], grid);
    } catch (const ArgumentError&) {
      throw ArgumentError("reward atom is off the budget grid");
    }
  }
  return steps;
}

}  // namespace

OptimalSolution solve_optimal(const TabularMdp& mdp, RiskLevel tau,
                              const BudgetGrid& grid) {
  const int B = grid.points();
  const auto steps = all_reward_steps(mdp, grid);

  OptimalSolution sol;
  sol.v = ValueTable(mdp.H, mdp.S, B);
  sol.policy = AugPolicy(mdp.H, mdp.S, B);
  for (int s = 0; s < mdp.S; ++s)
    for (int i = 0; i < B; ++i) sol.v.at(mdp.H + 1, s, i) = grid.budget(i);

  for (int h = mdp.H; h >= 1; --h) {
    for (int s = 0; s < mdp.S; ++s) {
      for (int i = 0; i < B; ++i) {
        double best = 0.0;
        int best_a = 0;
        for (int a = 0; a < mdp.A; ++a) {
          const double* row = &mdp.P[mdp.cell(h, s, a) * mdp.S];
          double u = 0.0;
          for (int s2 = 0; s2 < mdp.S; ++s2) {
            const double p = row[s2];
            if (p == 0.0) continue;
            double er = 0.0;
            for (const auto& [j, pr] : steps[mdp.cell(h, s, a)]) {
              er += pr * sol.v.at_clamped(h + 1, s2, i - j);
            }
            u += p * er;
          }
          if (a == 0 || u < best) {
            best = u;
            best_a = a;
          }
        }
        sol.v.at(h, s, i) = best;
        sol.policy.set(h, s, i, best_a);
      }
    }
  }

  sol.b_star_index = 0;
  sol.cvar_star = -1.0 / 0.0;
  for (int i = 0; i < B; ++i) {
    const double objective = grid.budget(i) - sol.v.at(1, mdp.s1, i) / tau.tau;
    if (objective > sol.cvar_star) {
      sol.cvar_star = objective;
      sol.b_star_index = i;
    }
  }
  sol.b_star = grid.budget(sol.b_star_index);
  return sol;
}

FiniteDist returns_distribution(const TabularMdp& mdp, const AugPolicy& rho,
                                double b0, const BudgetGrid& grid) {
  const int n = grid.steps();
  const int B = grid.points();
  const int ext = 2 * n + 1;  // budget indices -n..n, stored shifted by n
  const int i0 = grid.index_of(b0);
  const auto steps = all_reward_steps(mdp, grid);

  std::vector<double> mass(static_cast<std::size_t>(mdp.S) * ext, 0.0);
  std::vector<double> next(mass.size(), 0.0);
  auto slot = [&](int s, int iext) {
    return static_cast<std::size_t>(s) * ext + (iext + n);
  };
  mass[slot(mdp.s1, i0)] = 1.0;

  for (int h = 1; h <= mdp.H; ++h) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < mdp.S; ++s) {
      for (int iext = -n; iext <= n; ++iext) {
        const double m = mass[slot(s, iext)];
        if (m == 0.0) continue;
        const int a = rho.at(h, s, std::min(std::max(iext, 0), B - 1));
        const double* row = &mdp.P[mdp.cell(h, s, a) * mdp.S];
        for (const auto& [j, pr] : steps[mdp.cell(h, s, a)]) {
          const int i2 = iext - j;
          if (i2 < -n) {
            throw InvariantError("budget underflow in returns DP");
          }
          const double mj = m * pr;
          for (int s2 = 0; s2 < mdp.S; ++s2) {
            if (row[s2] > 0.0) next[slot(s2, i2)] += mj * row[s2];
          }
        }
      }
    }
    std::swap(mass, next);
  }

  // Z = b0 - b_{H+1}, read off in grid units.
  std::vector<double> z_prob(static_cast<std::size_t>(2 * n + 1), 0.0);
  for (int s = 0; s < mdp.S; ++s) {
    for (int iext = -n; iext <= n; ++iext) {
      const double m = mass[slot(s, iext)];
      if (m == 0.0) continue;
      const int z_steps = i0 - iext;
      z_prob[static_cast<std::size_t>(z_steps)] += m;
    }
  }
  std::vector<Atom> atoms;
  for (int z = 0; z <= 2 * n; ++z) {
    if (z_prob[static_cast<std::size_t>(z)] > 0.0) {
      atoms.push_back({grid.budget(z), z_prob[static_cast<std::size_t>(z)]});
    }
  }
  return FiniteDist(std::move(atoms));
}

double evaluate_policy_cvar(const TabularMdp& mdp, const AugPolicy& rho,
                            double b0, RiskLevel tau, const BudgetGrid& grid) {
  return cvar_exact(returns_distribution(mdp, rho, b0, grid), tau);
}

double enumerate_optimal_tiny(const TabularMdp& mdp, RiskLevel tau,
                              const BudgetGrid& grid, std::uint64_t guard) {
  const int B = grid.points();
  const std::size_t slots = static_cast<std::size_t>(mdp.H) * mdp.S * B;
  double count = std::pow(static_cast<double>(mdp.A), static_cast<double>(slots));
  if (!(count <= static_cast<double>(guard))) {
    throw ArgumentError("policy class too large to enumerate");
  }

  AugPolicy rho(mdp.H, mdp.S, B);
  double best = -1.0 / 0.0;
  const std::uint64_t total = static_cast<std::uint64_t>(count);
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t c = code;
    for (std::size_t i = 0; i < slots; ++i) {
      rho.raw()[i] = static_cast<int>(c % mdp.A);
      c /= mdp.A;
    }
    for (int i = 0; i < B; ++i) {
      best = std::max(best, evaluate_policy_cvar(mdp, rho, grid.budget(i), tau, grid));
    }
  }
  return best;
}

}  // namespace cvarsim
