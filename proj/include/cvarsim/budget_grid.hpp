#pragma once

#include <cstddef>
#include <vector>

#include "cvarsim/errors.hpp"

namespace cvarsim {

// Uniform grid {0, eta, ..., 1} for the budget coordinate of the augmented
// state. 1/eta must be (within 1e-9) an integer n; budgets are represented
// as integer indices so the update b' = b - r never drifts off the grid.
// Negative budgets are a single floor bucket: value 0, index clamped to 0.
class BudgetGrid {
 public:
  explicit BudgetGrid(double eta);

  double eta() const { return step_; }
  int points() const { return n_ + 1; }  // indices 0..n
  int steps() const { return n_; }
  double budget(int index) const { return static_cast<double>(index) * step_; }

  // Index of a grid budget; throws if b is off the grid.
  int index_of(double b) const;
  // Number of grid steps in a grid-valued reward; throws if off the grid.
  int reward_steps(double r) const { return index_of(r); }
  bool on_grid(double x) const;

 private:
  int n_;
  double step_;
};

// Deterministic Markov policy on the augmented state (s, b): one action per
// (step h, state s, budget index). Lookups clamp negative budget indices to
// the floor bucket at index 0.
class AugPolicy {
 public:
  AugPolicy() = default;
  AugPolicy(int H, int S, int budget_points, int fill_action = 0);

  int horizon() const { return H_; }
  int states() const { return S_; }
  int budget_points() const { return B_; }

  int at(int h, int s, int budget_index) const;
  void set(int h, int s, int budget_index, int action);

  std::vector<int>& raw() { return action_; }
  const std::vector<int>& raw() const { return action_; }

 private:
  int H_ = 0, S_ = 0, B_ = 0;
  std::vector<int> action_;
};

// v[h][s][budget index] for h = 1..H+1; the terminal layer is b^+.
class ValueTable {
 public:
  ValueTable() = default;
  ValueTable(int H, int S, int budget_points);

  int horizon() const { return H_; }
  int states() const { return S_; }
  int budget_points() const { return B_; }

  double at(int h, int s, int budget_index) const {
    return v_[offset(h, s, budget_index)];
  }
  double& at(int h, int s, int budget_index) { return v_[offset(h, s, budget_index)]; }

  // Value with the floor-bucket convention: 0 for negative budget indices.
  double at_clamped(int h, int s, int budget_index) const {
    return budget_index < 0 ? 0.0 : v_[offset(h, s, budget_index)];
  }

 private:
  std::size_t offset(int h, int s, int b) const {
    return (static_cast<std::size_t>(h - 1) * S_ + s) * B_ + b;
  }

  int H_ = 0, S_ = 0, B_ = 0;
  std::vector<double> v_;
};

}  // namespace cvarsim
