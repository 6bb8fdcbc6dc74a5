#include "cvarsim/cvar_ucbvi.hpp"

#include <algorithm>
#include <cmath>

#include "cvarsim/risk.hpp"

namespace cvarsim {

BonusKind parse_bonus_kind(const std::string& name) {
  if (name == "hoeffding") return BonusKind::hoeffding;
  if (name == "bernstein") return BonusKind::bernstein;
  throw ConfigError("unknown bonus kind: " + name);
}

std::string to_string(BonusKind kind) {
  return kind == BonusKind::hoeffding ? "hoeffding" : "bernstein";
}

double hoeffding_bonus(long n, double L) {
  if (n < 1) throw ArgumentError("count must be at least 1");
  return std::min(std::sqrt(L / static_cast<double>(n)), 1.0);
}

LearnerModel::LearnerModel(int S, int A, int H, long K, double delta,
                           BonusKind kind)
    : S_(S), A_(A), H_(H),
      L_(std::log(static_cast<double>(H) * S * A * static_cast<double>(std::max<long>(K, 1)) / delta)),
      kind_(kind),
      visits_(static_cast<std::size_t>(H) * S * A, 0),
      trans_(static_cast<std::size_t>(H) * S * A * S, 0) {
  if (S < 1 || A < 1 || H < 1) throw ArgumentError("invalid model shape");
  if (!(delta > 0.0) || !(delta < 1.0)) throw ArgumentError("delta outside (0, 1)");
}

void LearnerModel::fill_phat(int h, int s, int a, double* out) const {
  const long n = visits_[cell(h, s, a)];
  if (n < 1) {
    const double u = 1.0 / static_cast<double>(S_);
    for (int s2 = 0; s2 < S_; ++s2) out[s2] = u;
    return;
  }
  const long* row = &trans_[cell(h, s, a) * S_];
  const double inv = 1.0 / static_cast<double>(n);
  for (int s2 = 0; s2 < S_; ++s2) out[s2] = static_cast<double>(row[s2]) * inv;
}

void LearnerModel::update(const Trajectory& traj) {
  for (int h = 1; h <= H_; ++h) {
    const TrajectoryStep& st = traj.steps[static_cast<std::size_t>(h - 1)];
    const int s2 = h < H_ ? traj.steps[static_cast<std::size_t>(h)].state
                          : traj.final_state;
    ++visits_[cell(h, st.state, st.action)];
    ++trans_[cell(h, st.state, st.action) * S_ + s2];
  }
  ++k_;
}

std::uint64_t LearnerModel::counts_digest() const {
  std::uint64_t hash = 14695981039346656037ULL;
  for (long v : visits_) {
    hash ^= static_cast<std::uint64_t>(v);
    hash *= 1099511628211ULL;
  }
  return hash;
}

namespace {

// E_r[table(h+1, s2, i - steps(r))] with the floor bucket at value 0.
double reward_averaged(const ValueTable& table,
                       const std::vector<std::pair<int, double>>& steps, int h,
                       int s2, int i) {
  double v = 0.0;
  for (const auto& [j, pr] : steps) v += pr * table.at_clamped(h + 1, s2, i - j);
  return v;
}

std::vector<std::vector<std::pair<int, double>>> reward_step_table(
    const TabularMdp& env, const BudgetGrid& grid) {
  std::vector<std::vector<std::pair<int, double>>> steps(env.R.size());
  for (std::size_t c = 0; c < env.R.size(); ++c) {
    const FiniteDist& law = env.R[c];
    steps[c].reserve(law.size());
    for (const Atom& at : law.atoms()) {
      int j;
      try {
        j = grid.reward_steps(at.value);
      } catch (const ArgumentError&) {
        throw ArgumentError("reward atom is off the budget grid");
      }
      steps[c].push_back({j, at.prob});
    }
  }
  return steps;
}

}  // namespace

double bernstein_bonus(const LearnerModel& model, const ConfidenceTables& tables,
                       const TabularMdp& env, const BudgetGrid& grid, int h,
                       int s, int b_index, int a) {
  const int S = model.S();
  std::vector<double> phat(static_cast<std::size_t>(S));
  model.fill_phat(h, s, a, phat.data());
  std::vector<std::pair<int, double>> steps;
  for (const Atom& at : env.reward(h, s, a).atoms()) {
    steps.push_back({grid.reward_steps(at.value), at.prob});
  }
  const double n = static_cast<double>(model.count(h, s, a));
  const double L = model.L();

  double mean = 0.0, second = 0.0, width2 = 0.0;
  for (int s2 = 0; s2 < S; ++s2) {
    if (phat[static_cast<std::size_t>(s2)] == 0.0) continue;
    const double m1 = reward_averaged(tables.lower, steps, h, s2, b_index);
    mean += phat[static_cast<std::size_t>(s2)] * m1;
    second += phat[static_cast<std::size_t>(s2)] * m1 * m1;
    double w = 0.0;
    for (const auto& [j, pr] : steps) {
      const double lo = tables.lower.at_clamped(h + 1, s2, b_index - j);
      const double hi = tables.upper.at_clamped(h + 1, s2, b_index - j);
      w += pr * (hi - lo) * (hi - lo);
    }
    width2 += phat[static_cast<std::size_t>(s2)] * w;
  }
  const double var = std::max(second - mean * mean, 0.0);
  const double bonus = std::sqrt(2.0 * var * L / n) +
                       std::sqrt(2.0 * width2 * L / n) + L / n;
  return std::min(bonus, 1.0);
}

PlanResult plan_episode(const LearnerModel& model, const TabularMdp& env,
                        RiskLevel tau, const BudgetGrid& grid) {
  const int S = model.S(), A = model.A(), H = model.H();
  const int B = grid.points();
  const bool bernstein = model.kind() == BonusKind::bernstein;
  const auto steps = reward_step_table(env, grid);

  PlanResult plan;
  plan.tables.lower = ValueTable(H, S, B);
  plan.tables.has_upper = bernstein;
  if (bernstein) plan.tables.upper = ValueTable(H, S, B);
  plan.policy = AugPolicy(H, S, B);
  plan.policy_bonus.assign(static_cast<std::size_t>(H) * S * B, 0.0);

  ValueTable& lower = plan.tables.lower;
  ValueTable& upper = plan.tables.upper;
  for (int s = 0; s < S; ++s) {
    for (int i = 0; i < B; ++i) {
      lower.at(H + 1, s, i) = grid.budget(i);
      if (bernstein) upper.at(H + 1, s, i) = grid.budget(i);
    }
  }

  std::vector<double> phat(static_cast<std::size_t>(S) * A);
  std::vector<double> hoeff(static_cast<std::size_t>(A));
  std::vector<double> u_up_raw(static_cast<std::size_t>(A));
  std::vector<double> bon(static_cast<std::size_t>(A));

  for (int h = H; h >= 1; --h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        model.fill_phat(h, s, a, &phat[static_cast<std::size_t>(a) * S]);
        if (!bernstein) hoeff[static_cast<std::size_t>(a)] =
            hoeffding_bonus(model.count(h, s, a), model.L());
      }
      for (int i = 0; i < B; ++i) {
        double best_u = 0.0;
        int best_a = 0;
        for (int a = 0; a < A; ++a) {
          const double* row = &phat[static_cast<std::size_t>(a) * S];
          const auto& st = steps[model.cell(h, s, a)];
          double lo_mix = 0.0, up_mix = 0.0;
          double b_a;
          if (bernstein) {
            // One pass computes the backup and the variance inputs.
            double second = 0.0, width2 = 0.0;
            for (int s2 = 0; s2 < S; ++s2) {
              if (row[s2] == 0.0) continue;
              double m_lo = 0.0, m_up = 0.0, w = 0.0;
              for (const auto& [j, pr] : st) {
                const double vlo = lower.at_clamped(h + 1, s2, i - j);
                const double vup = upper.at_clamped(h + 1, s2, i - j);
                m_lo += pr * vlo;
                m_up += pr * vup;
                w += pr * (vup - vlo) * (vup - vlo);
              }
              lo_mix += row[s2] * m_lo;
              up_mix += row[s2] * m_up;
              second += row[s2] * m_lo * m_lo;
              width2 += row[s2] * w;
            }
            const double n = static_cast<double>(model.count(h, s, a));
            const double var = std::max(second - lo_mix * lo_mix, 0.0);
            b_a = std::min(std::sqrt(2.0 * var * model.L() / n) +
                               std::sqrt(2.0 * width2 * model.L() / n) +
                               model.L() / n,
                           1.0);
          } else {
            for (int s2 = 0; s2 < S; ++s2) {
              if (row[s2] == 0.0) continue;
              lo_mix += row[s2] * reward_averaged(lower, st, h, s2, i);
            }
            b_a = hoeff[static_cast<std::size_t>(a)];
          }
          const double u = lo_mix - b_a;
          u_up_raw[static_cast<std::size_t>(a)] = up_mix + b_a;
          bon[static_cast<std::size_t>(a)] = b_a;
          if (a == 0 || u < best_u) {
            best_u = u;
            best_a = a;
          }
        }
        lower.at(h, s, i) = std::max(best_u, 0.0);
        if (bernstein) {
          upper.at(h, s, i) = std::min(u_up_raw[static_cast<std::size_t>(best_a)], 1.0);
        }
        plan.policy.set(h, s, i, best_a);
        plan.policy_bonus[(static_cast<std::size_t>(h - 1) * S + s) * B + i] =
            bon[static_cast<std::size_t>(best_a)];
      }
    }
  }

  plan.b_hat_index = 0;
  plan.objective = -1.0 / 0.0;
  for (int i = 0; i < B; ++i) {
    const double obj = grid.budget(i) - lower.at(1, env.s1, i) / tau.tau;
    if (obj > plan.objective) {
      plan.objective = obj;
      plan.b_hat_index = i;
    }
  }
  plan.b_hat = grid.budget(plan.b_hat_index);
  return plan;
}

std::pair<double, double> simulation_gap_check(const TabularMdp& env,
                                               const BudgetGrid& grid,
                                               const LearnerModel& model,
                                               const PlanResult& plan,
                                               double v1_rho_at_bhat) {
  const int S = env.S;
  const int n = grid.steps();
  const int B = grid.points();
  const int ext = 2 * n + 1;
  const auto steps = reward_step_table(env, grid);

  const double lhs = v1_rho_at_bhat - plan.tables.lower.at(1, env.s1, plan.b_hat_index);

  std::vector<double> mass(static_cast<std::size_t>(S) * ext, 0.0);
  std::vector<double> next(mass.size(), 0.0);
  auto slot = [&](int s, int iext) {
    return static_cast<std::size_t>(s) * ext + (iext + n);
  };
  mass[slot(env.s1, plan.b_hat_index)] = 1.0;

  double expected_sum = 0.0;
  for (int h = 1; h <= env.H; ++h) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < S; ++s) {
      for (int iext = -n; iext <= n; ++iext) {
        const double m = mass[slot(s, iext)];
        if (m == 0.0) continue;
        const int a = plan.policy.at(h, s, std::max(iext, 0));
        if (iext >= 0) {
          const double bon =
              plan.policy_bonus[(static_cast<std::size_t>(h - 1) * S + s) * B + iext];
          const double xi = std::min(
              1.0, 2.0 * env.H * S * model.L() /
                       static_cast<double>(model.count(h, s, a)));
          expected_sum += m * (2.0 * bon + xi);
        }
        const double* row = &env.P[env.cell(h, s, a) * S];
        for (const auto& [j, pr] : steps[env.cell(h, s, a)]) {
          const int i2 = iext - j;
          if (i2 < -n) throw InvariantError("budget underflow in occupancy DP");
          const double mj = m * pr;
          for (int s2 = 0; s2 < S; ++s2) {
            if (row[s2] > 0.0) next[slot(s2, i2)] += mj * row[s2];
          }
        }
      }
    }
    std::swap(mass, next);
  }
  const double rhs = std::exp(1.0) * expected_sum;
  return {lhs, rhs};
}

RlRunResult run_cvar_ucbvi(const TabularMdp& env, BonusKind kind, long K,
                           double delta, RiskLevel tau, const BudgetGrid& grid,
                           RngTape& tape, const OptimalSolution& oracle,
                           const RlRunOptions& options) {
  RlRunResult result;
  result.episodes.reserve(static_cast<std::size_t>(K));
  LearnerModel model(env.S, env.A, env.H, K, delta, kind);
  const int B = grid.points();

  double cum = 0.0;
  for (long k = 0; k < K; ++k) {
    PlanResult plan = plan_episode(model, env, tau, grid);
    const FiniteDist returns = returns_distribution(env, plan.policy, plan.b_hat, grid);
    const double episode_cvar = cvar_exact(returns, tau);
    double instant = oracle.cvar_star - episode_cvar;
    if (instant < -1e-9) {
      throw InvariantError("episode CVaR exceeds the oracle optimum");
    }
    instant = std::max(instant, 0.0);
    cum += instant;

    if (options.diagnostics) {
      const double slack = 1e-9;
      for (int h = 1; h <= env.H; ++h) {
        for (int s = 0; s < env.S; ++s) {
          for (int i = 0; i < B; ++i) {
            const double vstar = oracle.v.at(h, s, i);
            if (plan.tables.lower.at(h, s, i) > vstar + slack) {
              result.diag.pessimism_ok = false;
            }
            if (plan.tables.has_upper) {
              if (plan.tables.upper.at(h, s, i) < vstar - slack) {
                result.diag.optimism_ok = false;
              }
              if (plan.tables.upper.at(h, s, i) <
                  plan.tables.lower.at(h, s, i) - slack) {
                ++result.diag.upper_lower_inversions;
              }
            }
          }
        }
      }
      if (plan.objective < oracle.cvar_star - slack) {
        result.diag.optimistic_cvar_ok = false;
      }
      // V1^rho(s1, b_hat) = E[(b_hat - Z)^+] under the exact returns law.
      double v1_rho = 0.0;
      for (const Atom& at : returns.atoms()) {
        v1_rho += at.prob * std::max(plan.b_hat - at.value, 0.0);
      }
      const auto [lhs, rhs] = simulation_gap_check(env, grid, model, plan, v1_rho);
      if (lhs > rhs + slack) result.diag.simgap_ok = false;
    }

    const Trajectory traj = sample_episode(env, plan.policy, plan.b_hat, grid, tape);
    model.update(traj);

    double bonus_sum = 0.0;
    {
      int b_idx = plan.b_hat_index;
      for (int h = 1; h <= env.H; ++h) {
        const TrajectoryStep& st = traj.steps[static_cast<std::size_t>(h - 1)];
        if (b_idx >= 0) {
          bonus_sum +=
              plan.policy_bonus[(static_cast<std::size_t>(h - 1) * env.S + st.state) * B +
                                b_idx];
        }
        b_idx -= grid.reward_steps(st.reward);
      }
    }

    result.episodes.push_back({plan.b_hat_index, plan.b_hat, episode_cvar,
                               instant, cum, bonus_sum, model.counts_digest()});
  }
  return result;
}

}  // namespace cvarsim
