#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cvarsim/errors.hpp"

namespace cvarsim {

struct Atom {
  double value = 0.0;
  double prob = 0.0;
};

// Risk tolerance tau in (0, 1]. tau = 1 is the risk-neutral expectation.
struct RiskLevel {
  double tau;
  explicit RiskLevel(double t);
};

// Probability mass function on points in [-1, 1]. This is the universal
// representation for reward laws and return distributions: atoms are kept
// sorted by value with equal values merged, probabilities are nonnegative
// and sum to one within kProbTol.
class FiniteDist {
 public:
  static constexpr double kProbTol = 1e-12;

  FiniteDist() = default;
  explicit FiniteDist(std::vector<Atom> atoms);

  static FiniteDist point_mass(double v);
  static FiniteDist bernoulli(double p);  // mass p at 1 and 1-p at 0
  static FiniteDist from_samples(std::span<const double> xs);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  double min_value() const;
  double max_value() const;
  double mean() const;

  // Right-continuous CDF: P(X <= x).
  double cdf(double x) const;

  // Inverse-CDF draw: smallest atom value v with F(v) >= u, for u in [0, 1).
  double sample(double u) const;

 private:
  std::vector<Atom> atoms_;
};

}  // namespace cvarsim
