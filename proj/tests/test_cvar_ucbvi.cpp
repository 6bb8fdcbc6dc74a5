#include <doctest.h>

#include <cmath>
#include <random>

#include "cvarsim/cvar_ucbvi.hpp"
#include "test_util.hpp"

using namespace cvarsim;

namespace {

Trajectory one_step_traj(int s, int a, double r, int s2) {
  Trajectory t;
  t.steps.push_back({s, a, r});
  t.final_state = s2;
  t.total_return = r;
  return t;
}

}  // namespace

TEST_CASE("hoeffding bonus") {
  CHECK(hoeffding_bonus(8, std::log(2.0)) == doctest::Approx(0.29435250562886867).epsilon(1e-12));
  CHECK(hoeffding_bonus(1, 4.0) == 1.0);  // truncated
  CHECK(hoeffding_bonus(16, 4.0) == doctest::Approx(0.5));
  CHECK(hoeffding_bonus(100, 0.5) == doctest::Approx(std::sqrt(0.005)));
}

TEST_CASE("learner model counts and empirical rows") {
  LearnerModel model(2, 1, 1, 100, 0.1, BonusKind::hoeffding);
  CHECK(model.count(1, 0, 0) == 1);  // floored
  std::vector<double> row(2);
  model.fill_phat(1, 0, 0, row.data());
  CHECK(row[0] == doctest::Approx(0.5));  // uniform before any visit
  CHECK(row[1] == doctest::Approx(0.5));

  model.update(one_step_traj(0, 0, 0.0, 0));
  model.update(one_step_traj(0, 0, 0.0, 1));
  CHECK(model.count(1, 0, 0) == 2);
  model.fill_phat(1, 0, 0, row.data());
  CHECK(row[0] == doctest::Approx(0.5));
  CHECK(row[1] == doctest::Approx(0.5));
  model.update(one_step_traj(0, 0, 0.0, 1));
  model.fill_phat(1, 0, 0, row.data());
  CHECK(row[0] == doctest::Approx(1.0 / 3));
  CHECK(row[1] == doctest::Approx(2.0 / 3));
}

TEST_CASE("bernstein bonus fixed cases") {
  // Constant confidence tables: both leading terms vanish, leaving L/n.
  {
    LearnerModel model(1, 1, 1, 1, 0.5, BonusKind::bernstein);  // L = log(2)
    TabularMdp env = TabularMdp::zeros(1, 1, 1);
    const BudgetGrid grid(0.5);
    ConfidenceTables tables;
    tables.lower = ValueTable(1, 1, grid.points());
    tables.upper = ValueTable(1, 1, grid.points());
    tables.has_upper = true;
    for (int i = 0; i < grid.points(); ++i) {
      tables.lower.at(2, 0, i) = 0.7;
      tables.upper.at(2, 0, i) = 0.7;
    }
    const double bonus = bernstein_bonus(model, tables, env, grid, 1, 0, 2, 0);
    CHECK(bonus == doctest::Approx(model.L()).epsilon(1e-12));
    CHECK(model.L() < 1.0);
  }

  // Two equally likely successors valued 0 and 1 with zero width: the
  // variance term is sqrt(2 * 0.25 * L / n), the width term vanishes.
  {
    LearnerModel model(2, 1, 1, 1, 0.9, BonusKind::bernstein);  // L = log(2/0.9)
    model.update(one_step_traj(0, 0, 0.0, 0));
    model.update(one_step_traj(0, 0, 0.0, 1));
    TabularMdp env = TabularMdp::zeros(2, 1, 1);
    const BudgetGrid grid(0.5);
    ConfidenceTables tables;
    tables.lower = ValueTable(1, 2, grid.points());
    tables.upper = ValueTable(1, 2, grid.points());
    tables.has_upper = true;
    for (int i = 0; i < grid.points(); ++i) {
      tables.lower.at(2, 0, i) = 0.0;
      tables.upper.at(2, 0, i) = 0.0;
      tables.lower.at(2, 1, i) = 1.0;
      tables.upper.at(2, 1, i) = 1.0;
    }
    const double L = model.L();
    const double n = 2.0;
    const double expected = std::sqrt(2.0 * 0.25 * L / n) + L / n;
    CHECK(bernstein_bonus(model, tables, env, grid, 1, 0, 2, 0) ==
          doctest::Approx(expected).epsilon(1e-12));
  }

  // n = 1 with L >= 1 truncates to 1.
  {
    LearnerModel model(2, 2, 2, 1000, 0.05, BonusKind::bernstein);
    REQUIRE(model.L() >= 1.0);
    TabularMdp env = TabularMdp::zeros(2, 2, 2);
    const BudgetGrid grid(0.5);
    ConfidenceTables tables;
    tables.lower = ValueTable(2, 2, grid.points());
    tables.upper = ValueTable(2, 2, grid.points());
    tables.has_upper = true;
    for (int s = 0; s < 2; ++s) {
      for (int i = 0; i < grid.points(); ++i) {
        tables.lower.at(3, s, i) = 0.0;
        tables.upper.at(3, s, i) = 1.0;
      }
    }
    CHECK(bernstein_bonus(model, tables, env, grid, 2, 0, 2, 0) == 1.0);
  }
}

TEST_CASE("cold-start planning drives the budget to the top of the grid") {
  const TabularMdp env = random_grid_mdp(3, 2, 3, 0.25, 17);
  const BudgetGrid grid(0.25);
  for (BonusKind kind : {BonusKind::hoeffding, BonusKind::bernstein}) {
    LearnerModel model(3, 2, 3, 1000, 0.1, kind);
    REQUIRE(model.L() >= 1.0);
    const PlanResult plan = plan_episode(model, env, RiskLevel(0.25), grid);
    for (int h = 1; h <= 3; ++h) {
      for (int s = 0; s < 3; ++s) {
        for (int i = 0; i < grid.points(); ++i) {
          CHECK(plan.tables.lower.at(h, s, i) == 0.0);
        }
      }
    }
    CHECK(plan.b_hat == doctest::Approx(1.0));
  }
}

TEST_CASE("exact empirical model keeps V* inside the confidence band") {
  // Dyadic transition rows so the empirical estimate can hit P* exactly.
  TabularMdp env = TabularMdp::zeros(2, 2, 2);
  env.p_ref(1, 0, 0, 0) = 0.75;
  env.p_ref(1, 0, 0, 1) = 0.25;
  env.p_ref(1, 0, 1, 0) = 0.25;
  env.p_ref(1, 0, 1, 1) = 0.75;
  env.p_ref(2, 0, 0, 0) = 1.0;
  env.p_ref(2, 1, 0, 1) = 1.0;
  env.reward_ref(1, 0, 1) = FiniteDist({{0.0, 0.5}, {0.5, 0.5}});
  env.reward_ref(2, 0, 0) = FiniteDist({{0.0, 0.25}, {0.5, 0.75}});
  env.reward_ref(2, 1, 0) = FiniteDist::point_mass(0.5);
  env.validate();
  const BudgetGrid grid(0.5);
  const RiskLevel tau(0.5);
  const OptimalSolution oracle = solve_optimal(env, tau, grid);

  LearnerModel model(2, 2, 2, 64, 0.1, BonusKind::bernstein);
  // Sixteen trajectories whose per-cell transition fractions land exactly
  // on P* (all rows dyadic). Layout: {s1, a1, s2, a2, s3}.
  const int script[][5] = {
      {0, 0, 0, 0, 0}, {0, 0, 0, 1, 0}, {0, 0, 0, 0, 0}, {0, 0, 1, 0, 1},
      {0, 1, 0, 1, 0}, {0, 1, 1, 1, 1}, {0, 1, 1, 0, 1}, {0, 1, 1, 1, 1},
      {1, 0, 1, 0, 1}, {1, 0, 1, 1, 1}, {1, 0, 1, 0, 1}, {1, 0, 1, 1, 1},
      {1, 1, 1, 0, 1}, {1, 1, 1, 1, 1}, {1, 1, 1, 0, 1}, {1, 1, 1, 1, 1}};
  for (const auto& row : script) {
    Trajectory t;
    t.steps.push_back({row[0], row[1], 0.0});
    t.steps.push_back({row[2], row[3], 0.0});
    t.final_state = row[4];
    model.update(t);
  }
  // Sanity: every row of the empirical kernel equals the true kernel.
  for (int h = 1; h <= 2; ++h) {
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 2; ++a) {
        double phat[2];
        model.fill_phat(h, s, a, phat);
        for (int s2 = 0; s2 < 2; ++s2) CHECK(phat[s2] == env.p(h, s, a, s2));
      }
    }
  }
  const PlanResult plan = plan_episode(model, env, tau, grid);
  for (int h = 1; h <= 2; ++h) {
    for (int s = 0; s < 2; ++s) {
      for (int i = 0; i < grid.points(); ++i) {
        CHECK(plan.tables.lower.at(h, s, i) <= oracle.v.at(h, s, i) + 1e-12);
        CHECK(plan.tables.upper.at(h, s, i) >= oracle.v.at(h, s, i) - 1e-12);
        CHECK(plan.tables.lower.at(h, s, i) <= plan.tables.upper.at(h, s, i) + 1e-12);
      }
    }
  }
}

TEST_CASE("run loop bookkeeping and determinism") {
  const TabularMdp env = random_grid_mdp(2, 2, 2, 0.5, 23);
  const BudgetGrid grid(0.5);
  const RiskLevel tau(0.5);
  const OptimalSolution oracle = solve_optimal(env, tau, grid);

  // K = 0 gives an empty history.
  RngTape tape0(1);
  CHECK(run_cvar_ucbvi(env, BonusKind::hoeffding, 0, 0.1, tau, grid, tape0, oracle)
            .episodes.empty());

  RngTape t1(3), t2(3);
  const RlRunResult a =
      run_cvar_ucbvi(env, BonusKind::bernstein, 60, 0.1, tau, grid, t1, oracle);
  const RlRunResult b =
      run_cvar_ucbvi(env, BonusKind::bernstein, 60, 0.1, tau, grid, t2, oracle);
  REQUIRE(a.episodes.size() == 60);
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(a.episodes[i].b_hat == b.episodes[i].b_hat);
    CHECK(a.episodes[i].cum_regret == b.episodes[i].cum_regret);
    CHECK(a.episodes[i].counts_digest == b.episodes[i].counts_digest);
    CHECK(a.episodes[i].bonus_sum == b.episodes[i].bonus_sum);
  }
  // Cumulative regret never decreases.
  for (std::size_t i = 1; i < a.episodes.size(); ++i) {
    CHECK(a.episodes[i].cum_regret >= a.episodes[i - 1].cum_regret);
  }
}

TEST_CASE("visit counts total k per layer after k episodes") {
  const TabularMdp env = random_grid_mdp(3, 2, 3, 0.25, 29);
  const BudgetGrid grid(0.25);
  LearnerModel model(3, 2, 3, 50, 0.1, BonusKind::hoeffding);
  RngTape tape(11);
  const long k = 37;
  for (long episode = 0; episode < k; ++episode) {
    const PlanResult plan = plan_episode(model, env, RiskLevel(0.25), grid);
    const Trajectory traj = sample_episode(env, plan.policy, plan.b_hat, grid, tape);
    model.update(traj);
  }
  for (int h = 1; h <= 3; ++h) {
    long total = 0;
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 2; ++a) total += model.raw_visits(h, s, a);
    }
    CHECK(total == k);
  }
}

TEST_CASE("deterministic environment is mastered after brief exploration") {
  // tau = 1 risk-neutral deterministic MDP: once every cell has been seen,
  // per-episode regret should be zero except for bonus-driven detours.
  TabularMdp env = TabularMdp::zeros(2, 2, 2);
  env.p_ref(1, 0, 0, 0) = 0.0;
  env.p_ref(1, 0, 0, 1) = 1.0;  // action 0 moves to the rewarding state
  env.reward_ref(2, 1, 0) = FiniteDist::point_mass(1.0);
  env.reward_ref(2, 1, 1) = FiniteDist::point_mass(0.5);
  env.reward_ref(2, 0, 0) = FiniteDist::point_mass(0.25);
  env.validate();
  const BudgetGrid grid(0.25);
  const RiskLevel tau(1.0);
  const OptimalSolution oracle = solve_optimal(env, tau, grid);
  CHECK(oracle.cvar_star == doctest::Approx(1.0));

  RngTape tape(13);
  const RlRunResult run =
      run_cvar_ucbvi(env, BonusKind::bernstein, 300, 0.1, tau, grid, tape, oracle);
  int clean_tail = 0;
  for (std::size_t i = run.episodes.size() - 50; i < run.episodes.size(); ++i) {
    if (run.episodes[i].instant_regret <= 1e-12) ++clean_tail;
  }
  CHECK(clean_tail >= 45);
}

TEST_CASE("simulation gap check") {
  const TabularMdp env = random_grid_mdp(2, 2, 2, 0.5, 31);
  const BudgetGrid grid(0.5);
  const RiskLevel tau(0.5);
  const OptimalSolution oracle = solve_optimal(env, tau, grid);

  // Exact tables, zero bonus, huge counts: both sides collapse to ~0.
  LearnerModel model(2, 2, 2, 1000, 0.1, BonusKind::hoeffding);
  for (int rep = 0; rep < 10000; ++rep) {
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 2; ++a) {
        Trajectory t;
        t.steps.push_back({s, a, 0.0});
        t.steps.push_back({s, a, 0.0});  // same (s, a) slot at both layers
        t.final_state = 0;
        model.update(t);
      }
    }
  }
  PlanResult plan;
  plan.tables.lower = oracle.v;
  plan.policy = oracle.policy;
  plan.b_hat_index = oracle.b_star_index;
  plan.b_hat = oracle.b_star;
  plan.policy_bonus.assign(static_cast<std::size_t>(2) * 2 * grid.points(), 0.0);
  const FiniteDist law = returns_distribution(env, plan.policy, plan.b_hat, grid);
  double v1 = 0.0;
  for (const Atom& at : law.atoms()) v1 += at.prob * std::max(plan.b_hat - at.value, 0.0);
  const auto [lhs, rhs] = simulation_gap_check(env, grid, model, plan, v1);
  CHECK(std::abs(lhs) <= 1e-10);
  CHECK(rhs >= lhs);
  CHECK(rhs <= 0.1);  // xi term with 10000 visits per cell stays small

  // Cold start: the truncated bonus makes the bound huge and trivially true.
  LearnerModel cold(2, 2, 2, 1000, 0.1, BonusKind::hoeffding);
  const PlanResult cold_plan = plan_episode(cold, env, tau, grid);
  const FiniteDist cold_law =
      returns_distribution(env, cold_plan.policy, cold_plan.b_hat, grid);
  double v1c = 0.0;
  for (const Atom& at : cold_law.atoms()) {
    v1c += at.prob * std::max(cold_plan.b_hat - at.value, 0.0);
  }
  const auto [lhs_c, rhs_c] = simulation_gap_check(env, grid, cold, cold_plan, v1c);
  CHECK(lhs_c <= 1.0 + 1e-12);
  CHECK(rhs_c >= std::exp(1.0) * 2.0 * 3.0 - 1e-9);  // e * H * (2*1 + 1)
  CHECK(lhs_c <= rhs_c);
}

TEST_CASE("confidence structure holds on most seeded runs") {
  const TabularMdp env = random_grid_mdp(2, 2, 2, 0.5, 37);
  const BudgetGrid grid(0.5);
  const RiskLevel tau(0.25);
  const OptimalSolution oracle = solve_optimal(env, tau, grid);
  int pess = 0, opt = 0, ocvar = 0, simgap = 0;
  const int runs = 60;
  for (int s = 0; s < runs; ++s) {
    RngTape tape(static_cast<std::uint64_t>(s) + 101);
    const RlRunResult run =
        run_cvar_ucbvi(env, BonusKind::bernstein, 150, 0.1, tau, grid, tape, oracle);
    if (run.diag.pessimism_ok) ++pess;
    if (run.diag.optimism_ok) ++opt;
    if (run.diag.optimistic_cvar_ok) ++ocvar;
    if (run.diag.simgap_ok) ++simgap;
    CHECK(run.diag.upper_lower_inversions == 0);
  }
  CHECK(pess >= static_cast<int>(0.85 * runs));
  CHECK(opt >= static_cast<int>(0.85 * runs));
  CHECK(ocvar >= static_cast<int>(0.85 * runs));
  CHECK(simgap >= static_cast<int>(0.85 * runs));
}
