#include "cvarsim/finite_dist.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace cvarsim {

RiskLevel::RiskLevel(double t) : tau(t) {
  if (!(t > 0.0) || !(t <= 1.0)) {
    throw ArgumentError("risk level tau must lie in (0, 1]");
  }
}

FiniteDist::FiniteDist(std::vector<Atom> atoms) {
  if (atoms.empty()) {
    throw ArgumentError("distribution needs at least one atom");
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.value < b.value; });
  double total = 0.0;
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.value) || !std::isfinite(a.prob)) {
      throw ArgumentError("atoms must be finite");
    }
    if (a.value < -1.0 - kProbTol || a.value > 1.0 + kProbTol) {
      throw ArgumentError("atom values must lie in [-1, 1]");
    }
    if (a.prob < -kProbTol) {
      throw ArgumentError("atom probabilities must be nonnegative");
    }
    total += a.prob;
  }
  if (std::abs(total - 1.0) > kProbTol) {
    throw ArgumentError("atom probabilities must sum to 1");
  }
  // Merge equal values, drop zero-probability atoms.
  atoms_.reserve(atoms.size());
  for (const Atom& a : atoms) {
    if (!atoms_.empty() && atoms_.back().value == a.value) {
      atoms_.back().prob += a.prob;
    } else {
      atoms_.push_back(a);
    }
  }
  std::erase_if(atoms_, [](const Atom& a) { return a.prob <= 0.0; });
  if (atoms_.empty()) {
    throw ArgumentError("distribution has no positive-probability atom");
  }
}

FiniteDist FiniteDist::point_mass(double v) {
  return FiniteDist({{v, 1.0}});
}

FiniteDist FiniteDist::bernoulli(double p) {
  if (p < 0.0 || p > 1.0) throw ArgumentError("bernoulli parameter outside [0, 1]");
  if (p == 0.0) return point_mass(0.0);
  if (p == 1.0) return point_mass(1.0);
  return FiniteDist({{0.0, 1.0 - p}, {1.0, p}});
}

FiniteDist FiniteDist::from_samples(std::span<const double> xs) {
  if (xs.empty()) throw ArgumentError("empty sample set");
  // Merge counts first so the probability sum stays exact for large N.
  std::map<double, long> counts;
  for (double x : xs) ++counts[x];
  std::vector<Atom> atoms;
  atoms.reserve(counts.size());
  const double n = static_cast<double>(xs.size());
  for (const auto& [value, count] : counts) {
    atoms.push_back({value, static_cast<double>(count) / n});
  }
  return FiniteDist(std::move(atoms));
}

double FiniteDist::min_value() const { return atoms_.front().value; }

double FiniteDist::max_value() const { return atoms_.back().value; }

double FiniteDist::mean() const {
  double m = 0.0;
  for (const Atom& a : atoms_) m += a.prob * a.value;
  return m;
}

double FiniteDist::cdf(double x) const {
  double c = 0.0;
  for (const Atom& a : atoms_) {
    if (a.value > x) break;
    c += a.prob;
  }
  return c;
}

double FiniteDist::sample(double u) const {
  double c = 0.0;
  for (const Atom& a : atoms_) {
    c += a.prob;
    if (c >= u) return a.value;
  }
  return atoms_.back().value;
}

}  // namespace cvarsim
