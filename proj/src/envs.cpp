#include "cvarsim/envs.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace cvarsim {

namespace {

double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Normalize to a probability row; the rounding residual is folded into the
// largest entry so the row sums to 1 exactly.
void normalize_row(std::vector<double>& row) {
  double total = 0.0;
  for (double x : row) total += x;
  for (double& x : row) x /= total;
  double sum = 0.0;
  std::size_t arg_max = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    sum += row[i];
    if (row[i] > row[arg_max]) arg_max = i;
  }
  row[arg_max] += 1.0 - sum;
}

int sample_index(const double* probs, int count, double u) {
  double c = 0.0;
  for (int i = 0; i < count; ++i) {
    c += probs[i];
    if (c >= u) return i;
  }
  return count - 1;
}

}  // namespace

void MabInstance::validate() const {
  if (arms.empty()) throw ArgumentError("bandit needs at least one arm");
  for (const FiniteDist& arm : arms) {
    if (arm.empty()) throw ArgumentError("arm with empty reward law");
    if (arm.min_value() < 0.0 || arm.max_value() > 1.0 + FiniteDist::kProbTol) {
      throw ArgumentError("arm rewards must lie in [0, 1]");
    }
  }
}

TabularMdp TabularMdp::zeros(int S, int A, int H, int s1) {
  if (S < 1 || A < 1 || H < 1 || s1 < 0 || s1 >= S) {
    throw ArgumentError("invalid MDP shape");
  }
  TabularMdp m;
  m.S = S;
  m.A = A;
  m.H = H;
  m.s1 = s1;
  const std::size_t cells = static_cast<std::size_t>(H) * S * A;
  m.P.assign(cells * S, 0.0);
  m.R.assign(cells, FiniteDist::point_mass(0.0));
  // default: self loops
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) m.p_ref(h, s, a, s) = 1.0;
  return m;
}

void TabularMdp::validate() const {
  if (S < 1 || A < 1 || H < 1 || s1 < 0 || s1 >= S) {
    throw ArgumentError("invalid MDP shape");
  }
  if (P.size() != static_cast<std::size_t>(H) * S * A * S ||
      R.size() != static_cast<std::size_t>(H) * S * A) {
    throw ArgumentError("MDP arrays do not match the declared shape");
  }
  for (int h = 1; h <= H; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double sum = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          const double pv = p(h, s, a, s2);
          if (pv < -FiniteDist::kProbTol) {
            throw ArgumentError("negative transition probability");
          }
          sum += pv;
        }
        if (std::abs(sum - 1.0) > 1e4 * FiniteDist::kProbTol) {
          throw ArgumentError("transition row does not sum to 1");
        }
        if (reward(h, s, a).min_value() < 0.0) {
          throw ArgumentError("reward atoms must be nonnegative");
        }
      }
    }
  }
}

double hard_mab_eps(RiskLevel tau, int A, long K) {
  return std::sqrt(static_cast<double>(A - 1) * tau.tau / (8.0 * static_cast<double>(K)));
}

MabInstance make_hard_mab(RiskLevel tau, int A, long K, int flagged_arm) {
  if (!(tau.tau < 0.5)) throw ArgumentError("hard instance requires tau < 1/2");
  if (A < 2) throw ArgumentError("hard instance requires at least two arms");
  if (flagged_arm < 0 || flagged_arm >= A) throw ArgumentError("flagged arm out of range");
  if (static_cast<double>(K) < std::sqrt(static_cast<double>(A - 1) / (8.0 * tau.tau))) {
    throw ArgumentError("episode count below the hard-instance threshold");
  }
  const double eps = hard_mab_eps(tau, A, K);
  if (eps > tau.tau) {
    throw ArgumentError("hard-instance eps exceeds tau; increase K");
  }
  MabInstance mab;
  mab.arms.reserve(A);
  for (int a = 0; a < A; ++a) {
    const double p1 = (a == flagged_arm) ? 1.0 - tau.tau + eps : 1.0 - tau.tau;
    mab.arms.push_back(FiniteDist::bernoulli(p1));
  }
  return mab;
}

double tree_mdp_eps(RiskLevel tau, int A, int H, long K) {
  const double leaves_minus_one = std::pow(static_cast<double>(A), H) - 1.0;
  return std::sqrt(leaves_minus_one * tau.tau / (8.0 * static_cast<double>(K)));
}

TabularMdp make_tree_mdp(RiskLevel tau, int A, int H, long K) {
  if (!(tau.tau < 0.5)) throw ArgumentError("hard instance requires tau < 1/2");
  if (A < 2 || H < 1) throw ArgumentError("tree needs A >= 2 and H >= 1");
  // S = 1 + A + ... + A^(H-1); guard against state-count blowups.
  long S = 0;
  long layer = 1;
  for (int h = 1; h <= H; ++h) {
    S += layer;
    if (S > 1'000'000) throw ArgumentError("tree state count exceeds the guard");
    layer *= A;
  }
  const double eps = tree_mdp_eps(tau, A, H, K);
  if (eps > tau.tau) {
    throw ArgumentError("hard-instance eps exceeds tau; increase K");
  }

  TabularMdp m = TabularMdp::zeros(static_cast<int>(S), A, H, 0);
  // offsets[h] = first state index of layer h (1-based layers)
  std::vector<long> offset(H + 1, 0);
  for (int h = 2; h <= H; ++h) {
    long width = 1;
    for (int i = 1; i < h - 1; ++i) width *= A;
    offset[h] = offset[h - 1] + width;
  }
  for (int h = 1; h < H; ++h) {
    long width = 1;
    for (int i = 1; i < h; ++i) width *= A;
    for (long j = 0; j < width; ++j) {
      const int s = static_cast<int>(offset[h] + j);
      for (int a = 0; a < A; ++a) {
        const int next = static_cast<int>(offset[h + 1] + j * A + a);
        m.p_ref(h, s, a, s) = 0.0;
        m.p_ref(h, s, a, next) = 1.0;
      }
    }
  }
  // Bernoulli rewards on the (leaf, action) pairs; path 0 is flagged.
  long leaf_width = 1;
  for (int i = 1; i < H; ++i) leaf_width *= A;
  for (long j = 0; j < leaf_width; ++j) {
    const int s = static_cast<int>(offset[H] + j);
    for (int a = 0; a < A; ++a) {
      const bool flagged = (j == 0 && a == 0);
      const double p1 = flagged ? 1.0 - tau.tau + eps : 1.0 - tau.tau;
      m.reward_ref(H, s, a) = FiniteDist::bernoulli(p1);
    }
  }
  return m;
}

double max_return(const TabularMdp& mdp) {
  std::vector<double> next(mdp.S, 0.0), cur(mdp.S, 0.0);
  for (int h = mdp.H; h >= 1; --h) {
    for (int s = 0; s < mdp.S; ++s) {
      double best = -1.0;
      for (int a = 0; a < mdp.A; ++a) {
        double reach = 0.0;
        for (int s2 = 0; s2 < mdp.S; ++s2) {
          if (mdp.p(h, s, a, s2) > 0.0) reach = std::max(reach, next[s2]);
        }
        best = std::max(best, mdp.reward(h, s, a).max_value() + reach);
      }
      cur[s] = best;
    }
    std::swap(cur, next);
  }
  return next[mdp.s1];
}

double validate_normalized(const TabularMdp& mdp) {
  // Layer-by-layer max-return DP, kept around to reconstruct a violating
  // path for the error message.
  std::vector<std::vector<double>> v(mdp.H + 2, std::vector<double>(mdp.S, 0.0));
  for (int h = mdp.H; h >= 1; --h) {
    for (int s = 0; s < mdp.S; ++s) {
      double best = -1.0;
      for (int a = 0; a < mdp.A; ++a) {
        double reach = 0.0;
        for (int s2 = 0; s2 < mdp.S; ++s2) {
          if (mdp.p(h, s, a, s2) > 0.0) reach = std::max(reach, v[h + 1][s2]);
        }
        best = std::max(best, mdp.reward(h, s, a).max_value() + reach);
      }
      v[h][s] = best;
    }
  }
  const double m = v[1][mdp.s1];
  if (m > 1.0 + 1e-12) {
    std::ostringstream msg;
    msg << "max return " << m << " exceeds 1; path:";
    int s = mdp.s1;
    for (int h = 1; h <= mdp.H; ++h) {
      int best_a = 0;
      double best = -1.0;
      for (int a = 0; a < mdp.A; ++a) {
        double reach = 0.0;
        for (int s2 = 0; s2 < mdp.S; ++s2) {
          if (mdp.p(h, s, a, s2) > 0.0) reach = std::max(reach, v[h + 1][s2]);
        }
        const double val = mdp.reward(h, s, a).max_value() + reach;
        if (val > best) {
          best = val;
          best_a = a;
        }
      }
      msg << " (h=" << h << ",s=" << s << ",a=" << best_a << ")";
      int next_s = s;
      double best_reach = -1.0;
      for (int s2 = 0; s2 < mdp.S; ++s2) {
        if (mdp.p(h, s, best_a, s2) > 0.0 && v[h + 1][s2] > best_reach) {
          best_reach = v[h + 1][s2];
          next_s = s2;
        }
      }
      s = next_s;
    }
    throw InvariantError(msg.str());
  }
  return m;
}

double discretize_reward(double r, double eta) {
  if (!(eta > 0.0) || !(eta < 1.0)) throw ArgumentError("eta must lie in (0, 1)");
  if (r <= 0.0) return 0.0;
  // Values within 1e-9 grid units of a multiple of eta count as on-grid.
  const double k = std::ceil(r / eta - 1e-9);
  return std::min(k * eta, 1.0);
}

DiscretizedMdp discretize_mdp(const TabularMdp& mdp, double eta) {
  DiscretizedMdp out;
  out.base = mdp;
  out.eta = eta;
  out.discretized = mdp;
  for (FiniteDist& law : out.discretized.R) {
    std::vector<Atom> atoms;
    atoms.reserve(law.size());
    for (const Atom& a : law.atoms()) {
      atoms.push_back({discretize_reward(a.value, eta), a.prob});
    }
    law = FiniteDist(std::move(atoms));
  }
  return out;
}

Trajectory sample_episode(const TabularMdp& mdp, const AugPolicy& policy,
                          double b0, const BudgetGrid& grid, RngTape& tape) {
  int b_idx = grid.index_of(b0);
  int s = mdp.s1;
  Trajectory traj;
  traj.steps.reserve(mdp.H);
  for (int h = 1; h <= mdp.H; ++h) {
    const int a = policy.at(h, s, b_idx);
    const double u_r = tape.next_cell_uniform(h, s, a);
    const double r = mdp.reward(h, s, a).sample(u_r);
    int steps;
    try {
      steps = grid.reward_steps(r);
    } catch (const ArgumentError&) {
      throw InvariantError("sampled reward is off the budget grid");
    }
    const double u_t = tape.next_cell_uniform(h, s, a);
    const int s2 = sample_index(&mdp.P[mdp.cell(h, s, a) * mdp.S], mdp.S, u_t);
    traj.steps.push_back({s, a, r});
    traj.total_return += r;
    b_idx -= steps;
    s = s2;
  }
  traj.final_state = s;
  return traj;
}

std::pair<double, double> coupled_rollout(const TabularMdp& mdp,
                                          const AugPolicy& rho, double b0,
                                          const BudgetGrid& grid, RngTape& tape) {
  int b_idx = grid.index_of(b0);
  int s = mdp.s1;
  double z_disc = 0.0;
  double z_adapted = 0.0;
  for (int h = 1; h <= mdp.H; ++h) {
    const int a = rho.at(h, s, b_idx);
    const double u_r = tape.next_cell_uniform(h, s, a);
    const double r = mdp.reward(h, s, a).sample(u_r);
    const double r_disc = discretize_reward(r, grid.eta());
    const double u_t = tape.next_cell_uniform(h, s, a);
    const int s2 = sample_index(&mdp.P[mdp.cell(h, s, a) * mdp.S], mdp.S, u_t);
    z_adapted += r;
    z_disc += r_disc;
    b_idx -= grid.reward_steps(r_disc);
    s = s2;
  }
  const double slack = 1e-9;
  if (!(z_disc - mdp.H * grid.eta() <= z_adapted + slack && z_adapted <= z_disc + slack)) {
    throw InvariantError("coupled rollout violated the discretization sandwich");
  }
  return {z_disc, z_adapted};
}

TabularMdp random_grid_mdp(int S, int A, int H, double eta, std::uint64_t seed) {
  const BudgetGrid grid(eta);
  std::mt19937_64 eng(seed);
  TabularMdp m = TabularMdp::zeros(S, A, H);
  // Split the unit of return across steps in grid units so the max return
  // is exactly 1.
  std::vector<int> cap(H + 1, grid.steps() / H);
  cap[H] += grid.steps() % H;
  for (int h = 1; h <= H; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        std::vector<double> row(S);
        for (double& x : row) x = 0.05 + uniform01(eng);
        normalize_row(row);
        for (int s2 = 0; s2 < S; ++s2) m.p_ref(h, s, a, s2) = row[s2];

        std::vector<Atom> atoms;
        for (int j = 0; j <= cap[h]; ++j) {
          atoms.push_back({grid.budget(j), 0.05 + uniform01(eng)});
        }
        double total = 0.0;
        for (const Atom& at : atoms) total += at.prob;
        for (Atom& at : atoms) at.prob /= total;
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < atoms.size(); ++i) sum += atoms[i].prob;
        atoms.back().prob = 1.0 - sum;
        m.reward_ref(h, s, a) = FiniteDist(std::move(atoms));
      }
    }
  }
  return m;
}

TabularMdp random_offgrid_mdp(int S, int A, int H, std::uint64_t seed) {
  std::mt19937_64 eng(seed ^ 0x517cc1b727220a95ULL);
  TabularMdp m = TabularMdp::zeros(S, A, H);
  const double cap = 1.0 / H;
  for (int h = 1; h <= H; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        std::vector<double> row(S);
        for (double& x : row) x = 0.05 + uniform01(eng);
        normalize_row(row);
        for (int s2 = 0; s2 < S; ++s2) m.p_ref(h, s, a, s2) = row[s2];

        std::vector<Atom> atoms = {{cap * uniform01(eng), 0.0},
                                   {cap * uniform01(eng), 0.0},
                                   {cap * uniform01(eng), 0.0}};
        double total = 0.0;
        for (Atom& at : atoms) {
          at.prob = 0.1 + uniform01(eng);
          total += at.prob;
        }
        for (Atom& at : atoms) at.prob /= total;
        double sum = atoms[0].prob + atoms[1].prob;
        atoms[2].prob = 1.0 - sum;
        m.reward_ref(h, s, a) = FiniteDist(std::move(atoms));
      }
    }
  }
  return m;
}

}  // namespace cvarsim
