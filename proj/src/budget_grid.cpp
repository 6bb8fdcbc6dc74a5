#include "cvarsim/budget_grid.hpp"

#include <cmath>

namespace cvarsim {

BudgetGrid::BudgetGrid(double eta) {
  if (!(eta > 0.0) || !(eta < 1.0 + 1e-12)) {
    throw ArgumentError("grid step eta must lie in (0, 1]");
  }
  const double n = std::round(1.0 / eta);
  if (std::abs(n * eta - 1.0) > 1e-9) {
    throw ArgumentError("grid step eta must divide 1 (eta = 1/n)");
  }
  n_ = static_cast<int>(n);
  step_ = 1.0 / n;
}

int BudgetGrid::index_of(double b) const {
  const double raw = b * static_cast<double>(n_);
  const double idx = std::round(raw);
  if (std::abs(raw - idx) > 1e-9 * static_cast<double>(n_)) {
    throw ArgumentError("value is not on the budget grid");
  }
  return static_cast<int>(idx);
}

bool BudgetGrid::on_grid(double x) const {
  const double raw = x * static_cast<double>(n_);
  return std::abs(raw - std::round(raw)) <= 1e-9 * static_cast<double>(n_);
}

AugPolicy::AugPolicy(int H, int S, int budget_points, int fill_action)
    : H_(H), S_(S), B_(budget_points),
      action_(static_cast<std::size_t>(H) * S * budget_points, fill_action) {}

int AugPolicy::at(int h, int s, int budget_index) const {
  if (budget_index < 0) budget_index = 0;  // floor bucket
  return action_[(static_cast<std::size_t>(h - 1) * S_ + s) * B_ + budget_index];
}

void AugPolicy::set(int h, int s, int budget_index, int action) {
  action_[(static_cast<std::size_t>(h - 1) * S_ + s) * B_ + budget_index] = action;
}

ValueTable::ValueTable(int H, int S, int budget_points)
    : H_(H), S_(S), B_(budget_points),
      v_(static_cast<std::size_t>(H + 1) * S * budget_points, 0.0) {}

}  // namespace cvarsim
