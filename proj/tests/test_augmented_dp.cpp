#include <doctest.h>

#include <cmath>
#include <random>

#include "cvarsim/augmented_dp.hpp"
#include "cvarsim/rng_tape.hpp"
#include "test_util.hpp"

using namespace cvarsim;

namespace {

TabularMdp terminal_chain(int H) {
  TabularMdp m = TabularMdp::zeros(1, 1, H);
  m.reward_ref(H, 0, 0) = FiniteDist::point_mass(1.0);
  return m;
}

}  // namespace

TEST_CASE("degenerate chain: all value in the terminal reward") {
  const TabularMdp chain = terminal_chain(3);
  const BudgetGrid grid(0.25);
  const OptimalSolution sol = solve_optimal(chain, RiskLevel(0.3), grid);
  for (int i = 0; i < grid.points(); ++i) {
    CHECK(sol.v.at(1, 0, i) == doctest::Approx(0.0));
  }
  CHECK(sol.cvar_star == doctest::Approx(1.0));
  CHECK(sol.b_star == doctest::Approx(1.0));
}

TEST_CASE("H = 1 planning reduces to the best arm") {
  std::mt19937_64 eng(41);
  const BudgetGrid grid(0.25);
  for (int trial = 0; trial < 25; ++trial) {
    TabularMdp m = TabularMdp::zeros(1, 3, 1);
    double best = -1.0;
    const double tau = 0.1 + 0.9 * testutil::uniform01(eng);
    for (int a = 0; a < 3; ++a) {
      std::vector<Atom> atoms;
      double total = 0.0;
      for (int i = 0; i < grid.points(); ++i) {
        atoms.push_back({grid.budget(i), 0.1 + testutil::uniform01(eng)});
        total += atoms.back().prob;
      }
      for (Atom& at : atoms) at.prob /= total;
      double partial = 0.0;
      for (std::size_t i = 0; i + 1 < atoms.size(); ++i) partial += atoms[i].prob;
      atoms.back().prob = 1.0 - partial;
      m.reward_ref(1, 0, a) = FiniteDist(atoms);
      best = std::max(best, cvar_exact(m.reward(1, 0, a), RiskLevel(tau)));
    }
    const OptimalSolution sol = solve_optimal(m, RiskLevel(tau), grid);
    CHECK(sol.cvar_star == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("tau = 1 planning equals risk-neutral value iteration") {
  std::mt19937_64 eng(43);
  const BudgetGrid grid(0.25);
  for (int trial = 0; trial < 20; ++trial) {
    const TabularMdp m = random_grid_mdp(3, 2, 3, 0.25, eng());
    const OptimalSolution sol = solve_optimal(m, RiskLevel(1.0), grid);
    CHECK(sol.cvar_star == doctest::Approx(testutil::expected_return_vi(m)).epsilon(1e-10));
  }
}

TEST_CASE("value table structure") {
  std::mt19937_64 eng(47);
  const BudgetGrid grid(0.25);
  for (int trial = 0; trial < 10; ++trial) {
    const TabularMdp m = random_grid_mdp(2, 2, 3, 0.25, eng());
    const OptimalSolution sol = solve_optimal(m, RiskLevel(0.3), grid);
    for (int s = 0; s < m.S; ++s) {
      for (int i = 0; i < grid.points(); ++i) {
        CHECK(sol.v.at(m.H + 1, s, i) == grid.budget(i));  // terminal b^+
        for (int h = 1; h <= m.H + 1; ++h) {
          const double v = sol.v.at(h, s, i);
          CHECK(v >= -1e-12);
          CHECK(v <= 1.0 + 1e-12);
          if (i > 0) {
            const double below = sol.v.at(h, s, i - 1);
            CHECK(v + 1e-12 >= below);                    // nondecreasing in b
            CHECK(v - below <= grid.eta() + 1e-12);       // 1-Lipschitz step
          }
        }
      }
    }
  }
}

TEST_CASE("returns distribution on fixed cases") {
  // Deterministic MDP and policy: a point mass at the realized return.
  TabularMdp det = TabularMdp::zeros(2, 1, 2);
  det.p_ref(1, 0, 0, 0) = 0.0;
  det.p_ref(1, 0, 0, 1) = 1.0;
  det.reward_ref(1, 0, 0) = FiniteDist::point_mass(0.25);
  det.reward_ref(2, 1, 0) = FiniteDist::point_mass(0.5);
  const BudgetGrid grid(0.25);
  const FiniteDist law = returns_distribution(det, AugPolicy(2, 2, grid.points()), 1.0, grid);
  REQUIRE(law.size() == 1);
  CHECK(law.atoms()[0].value == doctest::Approx(0.75));

  // H = 1: the chosen arm's law comes back unchanged.
  TabularMdp arm = TabularMdp::zeros(1, 2, 1);
  arm.reward_ref(1, 0, 1) = FiniteDist({{0.0, 0.5}, {0.75, 0.25}, {1.0, 0.25}});
  AugPolicy pick_second(1, 1, grid.points(), 1);
  const FiniteDist out = returns_distribution(arm, pick_second, 1.0, grid);
  REQUIRE(out.size() == 3);
  CHECK(out.atoms()[1].value == doctest::Approx(0.75));
  CHECK(out.atoms()[1].prob == doctest::Approx(0.25));
}

TEST_CASE("returns distribution equals path enumeration on tiny instances") {
  std::mt19937_64 eng(53);
  const BudgetGrid grid(0.5);
  for (int trial = 0; trial < 40; ++trial) {
    const TabularMdp m = random_grid_mdp(2, 2, 2, 0.5, eng());
    AugPolicy rho(2, 2, grid.points());
    for (int& a : rho.raw()) a = static_cast<int>(eng() % 2);
    const double b0 = grid.budget(static_cast<int>(eng() % 3));
    const FiniteDist dp = returns_distribution(m, rho, b0, grid);
    const FiniteDist oracle = testutil::path_enumeration_returns(m, rho, b0, grid);
    REQUIRE(dp.size() == oracle.size());
    double mass = 0.0;
    for (std::size_t i = 0; i < dp.size(); ++i) {
      CHECK(dp.atoms()[i].value == doctest::Approx(oracle.atoms()[i].value).epsilon(1e-12));
      CHECK(dp.atoms()[i].prob == doctest::Approx(oracle.atoms()[i].prob).epsilon(1e-12));
      mass += dp.atoms()[i].prob;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("policy evaluation consistency with the optimal solution") {
  std::mt19937_64 eng(59);
  const BudgetGrid grid(0.25);
  for (int trial = 0; trial < 15; ++trial) {
    const TabularMdp m = random_grid_mdp(2, 2, 2, 0.25, eng());
    const double tau = 0.2 + 0.6 * testutil::uniform01(eng);
    const OptimalSolution sol = solve_optimal(m, RiskLevel(tau), grid);
    const double replay = evaluate_policy_cvar(m, sol.policy, sol.b_star, RiskLevel(tau), grid);
    // Replaying the optimal policy from b* recovers cvar* exactly.
    CHECK(replay == doctest::Approx(sol.cvar_star).epsilon(1e-10));
  }

  // All-zero rewards evaluate to zero CVaR.
  const TabularMdp zero = TabularMdp::zeros(2, 2, 3);
  const AugPolicy rho(3, 2, BudgetGrid(0.5).points());
  CHECK(evaluate_policy_cvar(zero, rho, 1.0, RiskLevel(0.4), BudgetGrid(0.5)) ==
        doctest::Approx(0.0));
}

TEST_CASE("monte-carlo returns agree with the exact policy value") {
  const TabularMdp m = random_grid_mdp(3, 2, 3, 0.25, 61);
  const BudgetGrid grid(0.25);
  const RiskLevel tau(0.25);
  const OptimalSolution sol = solve_optimal(m, tau, grid);
  const double exact = evaluate_policy_cvar(m, sol.policy, sol.b_star, tau, grid);

  const long N = 100000;
  std::vector<double> returns(static_cast<std::size_t>(N));
  RngTape tape(7);
  for (long i = 0; i < N; ++i) {
    returns[static_cast<std::size_t>(i)] =
        sample_episode(m, sol.policy, sol.b_star, grid, tape).total_return;
  }
  const double emp = empirical_cvar(returns, tau);
  const auto radius = cvar_concentration_radius(N, tau, 0.01);
  REQUIRE(radius.valid);
  CHECK(std::abs(emp - exact) <= radius.radius);
}

TEST_CASE("exhaustive policy enumeration matches the DP solution") {
  std::mt19937_64 eng(67);
  const BudgetGrid grid(0.5);

  // Bandit case first.
  TabularMdp bandit = TabularMdp::zeros(1, 2, 1);
  bandit.reward_ref(1, 0, 0) = FiniteDist({{0.0, 0.5}, {1.0, 0.5}});
  bandit.reward_ref(1, 0, 1) = FiniteDist({{0.5, 1.0}});
  const double tau_b = 0.4;
  CHECK(enumerate_optimal_tiny(bandit, RiskLevel(tau_b), grid) ==
        doctest::Approx(solve_optimal(bandit, RiskLevel(tau_b), grid).cvar_star)
            .epsilon(1e-13));

  for (int trial = 0; trial < 8; ++trial) {
    const TabularMdp m = random_grid_mdp(2, 2, 2, 0.5, eng());
    const double tau = 0.2 + 0.7 * testutil::uniform01(eng);
    const double dp = solve_optimal(m, RiskLevel(tau), grid).cvar_star;
    const double brute = enumerate_optimal_tiny(m, RiskLevel(tau), grid);
    CHECK(std::abs(dp - brute) <= 1e-12);
  }

  // Guard trips on anything big.
  const TabularMdp big = random_grid_mdp(3, 2, 3, 0.25, 1);
  CHECK_THROWS_AS(enumerate_optimal_tiny(big, RiskLevel(0.5), BudgetGrid(0.25)),
                  ArgumentError);
}

TEST_CASE("off-grid rewards are rejected by the planner") {
  TabularMdp m = TabularMdp::zeros(1, 1, 1);
  m.reward_ref(1, 0, 0) = FiniteDist::point_mass(0.3);
  CHECK_THROWS_AS(solve_optimal(m, RiskLevel(0.5), BudgetGrid(0.25)), ArgumentError);
}
