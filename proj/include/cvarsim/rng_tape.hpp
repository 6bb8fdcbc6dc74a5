#pragma once

#include <cstdint>
#include <random>
#include <unordered_map>

namespace cvarsim {

// Seeded randomness organized as independent per-cell streams. A cell is
// (h, s, a) for MDP rollouts or an arm index for bandits; the j-th visit to
// a cell always consumes the j-th draw of that cell's stream, regardless of
// how visits interleave across cells. Two tapes built from the same master
// seed produce identical per-cell streams, so different learners observe
// the same reward/transition tape.
class RngTape {
 public:
  explicit RngTape(std::uint64_t master_seed) : master_(master_seed) {}

  std::uint64_t master_seed() const { return master_; }

  // Uniform in [0, 1) from the bandit cell of arm `a`.
  double next_arm_uniform(int a);

  // Uniform in [0, 1) from the MDP cell (h, s, a); h is 1-based.
  double next_cell_uniform(int h, int s, int a);

  // Uniform in [0, 1) from the learner's private stream (used by learners
  // that randomize their own decisions, e.g. the uniform baseline).
  double next_learner_uniform();

  // Draws consumed so far from a cell (testing hook).
  std::uint64_t draws(int h, int s, int a) const;

 private:
  struct Cell {
    std::mt19937_64 engine;
    std::uint64_t draws = 0;
  };

  double next_from(std::uint64_t key);

  std::uint64_t master_;
  std::unordered_map<std::uint64_t, Cell> cells_;
};

}  // namespace cvarsim
