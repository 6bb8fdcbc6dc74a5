#include "cvarsim/rng_tape.hpp"

namespace cvarsim {

namespace {

constexpr std::uint64_t kLearnerKey = ~std::uint64_t{0};

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t pack_mdp(int h, int s, int a) {
  return (std::uint64_t{1} << 62) | (std::uint64_t(h) << 40) |
         (std::uint64_t(s) << 20) | std::uint64_t(a);
}

std::uint64_t pack_arm(int a) { return (std::uint64_t{2} << 62) | std::uint64_t(a); }

}  // namespace

double RngTape::next_from(std::uint64_t key) {
  auto [it, inserted] = cells_.try_emplace(key);
  if (inserted) {
    it->second.engine.seed(mix(master_ ^ mix(key)));
  }
  ++it->second.draws;
  // 53 high bits -> uniform double in [0, 1); avoids the locale- and
  // implementation-defined behavior of std::uniform_real_distribution.
  return static_cast<double>(it->second.engine() >> 11) * 0x1.0p-53;
}

double RngTape::next_arm_uniform(int a) { return next_from(pack_arm(a)); }

double RngTape::next_cell_uniform(int h, int s, int a) {
  return next_from(pack_mdp(h, s, a));
}

double RngTape::next_learner_uniform() { return next_from(kLearnerKey); }

std::uint64_t RngTape::draws(int h, int s, int a) const {
  auto it = cells_.find(pack_mdp(h, s, a));
  return it == cells_.end() ? 0 : it->second.draws;
}

}  // namespace cvarsim
