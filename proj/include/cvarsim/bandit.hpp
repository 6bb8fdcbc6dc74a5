#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "cvarsim/envs.hpp"
#include "cvarsim/risk.hpp"
#include "cvarsim/rng_tape.hpp"

namespace cvarsim {

// Bernstein confidence bonus for the shortfall estimate:
// sqrt(2 tau log(AK/delta) / n) + log(AK/delta) / n.
double mab_bonus(long n, int A, long K, double delta, RiskLevel tau);

// Baseline bonus: sqrt(5 tau log(3/delta) / n).
double brown_bonus(long n, double delta, RiskLevel tau);

// Maximize a concave unimodal f on [0, 1] to within value tolerance `eps`,
// assuming |f'| <= lipschitz. Returns the best evaluated point; the bracket
// is narrowed until its width is at most eps / lipschitz.
double golden_section_max(const std::function<double(double)>& f, double eps,
                          double lipschitz = 1.0);

enum class MabLearner { bernstein_ucb, brown_ucb, uniform_random };

MabLearner parse_mab_learner(const std::string& name);
std::string to_string(MabLearner learner);

// Per-arm sufficient statistics of a UCB run. Reward logs are stored as
// value -> count maps so the shortfall sum evaluates in O(#distinct values).
class BanditState {
 public:
  BanditState(int A, long K, double delta, RiskLevel tau, double eps);

  int arms() const { return A_; }
  long episode() const { return k_; }
  double eps() const { return eps_; }

  long pulls(int a) const { return pulls_[a]; }
  // Count floored at 1, as used by the bonus and the shortfall average.
  long count(int a) const { return pulls_[a] < 1 ? 1 : pulls_[a]; }

  // Empirical shortfall (1/N) sum (b - r_i)^+ over the arm's log.
  double shortfall(int a, double b) const;

  void record(int a, double reward);

  long K() const { return K_; }
  double delta() const { return delta_; }
  RiskLevel tau() const { return tau_; }

 private:
  int A_;
  long K_;
  double delta_;
  RiskLevel tau_;
  double eps_;
  long k_ = 1;
  std::vector<long> pulls_;
  std::vector<std::map<double, long>> logs_;
};

struct MabSelection {
  int arm = 0;
  std::vector<double> index_values;  // per-arm optimistic CVaR index
  std::vector<double> b_hats;        // per-arm maximizer estimates
};

// One round of index computation: per arm, maximize
// b - tau^-1 (shortfall(b) - bonus) over [0, 1] and pick the argmax arm.
// Exact index ties go to the least-pulled arm, then the lowest index.
MabSelection bernstein_ucb_select(const BanditState& state);
MabSelection brown_ucb_select(const BanditState& state);

struct MabEpisode {
  int arm = 0;
  double arm_cvar = 0.0;  // exact CVaR of the pulled arm's law
  double instant_regret = 0.0;
  double cum_regret = 0.0;
  double bonus = 0.0;
};

struct MabDiagnostics {
  // Shortfall pessimism at the pulled arm's true quantile held at every
  // episode of the run.
  bool pessimism_ok = true;
  // Selected index >= cvar* - eps at every episode.
  bool optimism_ok = true;
};

struct MabRunResult {
  std::vector<MabEpisode> episodes;
  MabDiagnostics diag;
  double cvar_star = 0.0;
};

struct MabRunOptions {
  bool diagnostics = true;
  double eps = 0.0;  // search tolerance; 0 picks sqrt(A / (2 tau K))
};

MabRunResult run_bandit(const MabInstance& env, MabLearner learner, long K,
                        double delta, RiskLevel tau, RngTape& tape,
                        const MabRunOptions& options = {});

}  // namespace cvarsim
