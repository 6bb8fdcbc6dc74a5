#include "cvarsim/bandit.hpp"

#include <algorithm>
#include <cmath>

namespace cvarsim {

double mab_bonus(long n, int A, long K, double delta, RiskLevel tau) {
  if (n < 1) throw ArgumentError("count must be at least 1");
  const double l = std::log(static_cast<double>(A) * static_cast<double>(K) / delta);
  const double nd = static_cast<double>(n);
  return std::sqrt(2.0 * tau.tau * l / nd) + l / nd;
}

double brown_bonus(long n, double delta, RiskLevel tau) {
  if (n < 1) throw ArgumentError("count must be at least 1");
  return std::sqrt(5.0 * tau.tau * std::log(3.0 / delta) / static_cast<double>(n));
}

double golden_section_max(const std::function<double(double)>& f, double eps,
                          double lipschitz) {
  if (!(eps > 0.0) || !(lipschitz > 0.0)) {
    throw ArgumentError("tolerances must be positive");
  }
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double bracket_tol = eps / lipschitz;
  int iters = static_cast<int>(std::ceil(std::log(1.0 / bracket_tol) / std::log(phi)));
  iters = std::clamp(iters, 1, 200);

  double lo = 0.0, hi = 1.0;
  double c = hi - (hi - lo) / phi;
  double d = lo + (hi - lo) / phi;
  double fc = f(c), fd = f(d);
  double best_x = fc >= fd ? c : d;
  double best_f = std::max(fc, fd);
  if (!std::isfinite(fc) || !std::isfinite(fd)) {
    throw InvariantError("objective returned a non-finite value");
  }
  for (int i = 0; i < iters && hi - lo > bracket_tol; ++i) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - (hi - lo) / phi;
      fc = f(c);
      if (!std::isfinite(fc)) throw InvariantError("objective returned a non-finite value");
      if (fc > best_f) { best_f = fc; best_x = c; }
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + (hi - lo) / phi;
      fd = f(d);
      if (!std::isfinite(fd)) throw InvariantError("objective returned a non-finite value");
      if (fd > best_f) { best_f = fd; best_x = d; }
    }
  }
  // Endpoints can dominate when the maximizer sits on the boundary.
  for (double x : {lo, hi}) {
    const double fx = f(x);
    if (fx > best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  return best_x;
}

MabLearner parse_mab_learner(const std::string& name) {
  if (name == "bernstein-ucb") return MabLearner::bernstein_ucb;
  if (name == "brown-ucb") return MabLearner::brown_ucb;
  if (name == "uniform-random") return MabLearner::uniform_random;
  throw ConfigError("unknown bandit learner: " + name);
}

std::string to_string(MabLearner learner) {
  switch (learner) {
    case MabLearner::bernstein_ucb: return "bernstein-ucb";
    case MabLearner::brown_ucb: return "brown-ucb";
    case MabLearner::uniform_random: return "uniform-random";
  }
  return "?";
}

BanditState::BanditState(int A, long K, double delta, RiskLevel tau, double eps)
    : A_(A), K_(K), delta_(delta), tau_(tau), eps_(eps), pulls_(A, 0), logs_(A) {
  if (A < 1) throw ArgumentError("need at least one arm");
  if (K < 0) throw ArgumentError("negative episode count");
  if (!(delta > 0.0) || !(delta < 1.0)) throw ArgumentError("delta outside (0, 1)");
}

double BanditState::shortfall(int a, double b) const {
  double sum = 0.0;
  for (const auto& [value, cnt] : logs_[a]) {
    if (value >= b) break;
    sum += static_cast<double>(cnt) * (b - value);
  }
  return sum / static_cast<double>(count(a));
}

void BanditState::record(int a, double reward) {
  ++pulls_[a];
  ++logs_[a][reward];
  ++k_;
}

namespace {

MabSelection select_with_bonus(const BanditState& state,
                               const std::vector<double>& bonus) {
  MabSelection sel;
  sel.index_values.resize(state.arms());
  sel.b_hats.resize(state.arms());
  const double tau = state.tau().tau;
  const double lipschitz = 1.0 + 1.0 / tau;
  int best = 0;
  for (int a = 0; a < state.arms(); ++a) {
    auto objective = [&](double b) {
      return b - (state.shortfall(a, b) - bonus[a]) / tau;
    };
    const double b_hat = golden_section_max(objective, state.eps(), lipschitz);
    sel.b_hats[a] = b_hat;
    sel.index_values[a] = objective(b_hat);
    if (a > 0) {
      const double cur = sel.index_values[a];
      const double top = sel.index_values[best];
      if (cur > top ||
          (cur == top && (state.pulls(a) < state.pulls(best)))) {
        best = a;
      }
    }
  }
  sel.arm = best;
  return sel;
}

}  // namespace

MabSelection bernstein_ucb_select(const BanditState& state) {
  std::vector<double> bonus(state.arms());
  for (int a = 0; a < state.arms(); ++a) {
    bonus[a] = mab_bonus(state.count(a), state.arms(), state.K(), state.delta(),
                         state.tau());
  }
  return select_with_bonus(state, bonus);
}

MabSelection brown_ucb_select(const BanditState& state) {
  std::vector<double> bonus(state.arms());
  for (int a = 0; a < state.arms(); ++a) {
    bonus[a] = brown_bonus(state.count(a), state.delta(), state.tau());
  }
  return select_with_bonus(state, bonus);
}

MabRunResult run_bandit(const MabInstance& env, MabLearner learner, long K,
                        double delta, RiskLevel tau, RngTape& tape,
                        const MabRunOptions& options) {
  env.validate();
  const int A = env.num_arms();
  const double eps =
      options.eps > 0.0
          ? options.eps
          : std::sqrt(static_cast<double>(A) /
                      (2.0 * tau.tau * static_cast<double>(std::max<long>(K, 1))));

  std::vector<double> arm_cvar(A), arm_quantile(A), arm_true_shortfall(A);
  double cvar_star = -1.0 / 0.0;
  for (int a = 0; a < A; ++a) {
    arm_cvar[a] = cvar_exact(env.arms[a], tau);
    cvar_star = std::max(cvar_star, arm_cvar[a]);
  }
  for (int a = 0; a < A; ++a) {
    // True quantile and shortfall at it, for the pessimism diagnostic.
    double c = 0.0;
    double q = env.arms[a].max_value();
    for (const Atom& at : env.arms[a].atoms()) {
      c += at.prob;
      if (c >= tau.tau) {
        q = at.value;
        break;
      }
    }
    arm_quantile[a] = q;
    double sf = 0.0;
    for (const Atom& at : env.arms[a].atoms()) {
      if (at.value >= q) break;
      sf += at.prob * (q - at.value);
    }
    arm_true_shortfall[a] = sf;
  }

  MabRunResult result;
  result.cvar_star = cvar_star;
  result.episodes.reserve(static_cast<std::size_t>(K));
  BanditState state(A, K, delta, tau, eps);

  double cum = 0.0;
  for (long k = 0; k < K; ++k) {
    int arm = 0;
    double bonus_used = 0.0;
    double index_value = 0.0;
    if (learner == MabLearner::uniform_random) {
      arm = std::min(A - 1, static_cast<int>(tape.next_learner_uniform() * A));
    } else {
      const MabSelection sel = learner == MabLearner::bernstein_ucb
                                   ? bernstein_ucb_select(state)
                                   : brown_ucb_select(state);
      arm = sel.arm;
      index_value = sel.index_values[arm];
      bonus_used = learner == MabLearner::bernstein_ucb
                       ? mab_bonus(state.count(arm), A, K, delta, tau)
                       : brown_bonus(state.count(arm), delta, tau);
      if (options.diagnostics) {
        const double pess = state.shortfall(arm, arm_quantile[arm]) - bonus_used;
        if (pess > arm_true_shortfall[arm] + 1e-12) result.diag.pessimism_ok = false;
        if (index_value < cvar_star - eps - 1e-12) result.diag.optimism_ok = false;
      }
    }
    const double reward = env.arms[arm].sample(tape.next_arm_uniform(arm));
    state.record(arm, reward);

    const double instant = cvar_star - arm_cvar[arm];
    cum += instant;
    result.episodes.push_back({arm, arm_cvar[arm], instant, cum, bonus_used});
  }
  return result;
}

}  // namespace cvarsim
