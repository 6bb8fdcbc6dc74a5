#include "cvarsim/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cvarsim {

namespace {

// Quantile for t in (0, 1]; t = 1 returns the largest atom.
double quantile_inclusive(const FiniteDist& dist, double t) {
  double c = 0.0;
  for (const Atom& a : dist.atoms()) {
    c += a.prob;
    if (c >= t) return a.value;
  }
  return dist.max_value();
}

}  // namespace

double quantile(const FiniteDist& dist, double t) {
  if (dist.empty()) throw ArgumentError("quantile of empty distribution");
  if (!(t > 0.0) || !(t < 1.0)) {
    throw ArgumentError("quantile level must lie in (0, 1)");
  }
  return quantile_inclusive(dist, t);
}

double cvar_exact(const FiniteDist& dist, RiskLevel tau) {
  if (dist.empty()) throw ArgumentError("cvar of empty distribution");
  const double b = quantile_inclusive(dist, tau.tau);
  double shortfall = 0.0;  // E[(b - X)^+]
  for (const Atom& a : dist.atoms()) {
    if (a.value >= b) break;
    shortfall += a.prob * (b - a.value);
  }
  return b - shortfall / tau.tau;
}

double acerbi_cvar(const FiniteDist& dist, RiskLevel tau) {
  if (dist.empty()) throw ArgumentError("cvar of empty distribution");
  if (dist.min_value() < 0.0) {
    throw ArgumentError("acerbi integral requires nonnegative values");
  }
  // The quantile function is the step function y -> v_i on (c_{i-1}, c_i],
  // so the integral over (0, tau] is a sum of interval lengths times values.
  double integral = 0.0;
  double c_prev = 0.0;
  double c = 0.0;
  for (const Atom& a : dist.atoms()) {
    c += a.prob;
    const double lo = std::min(c_prev, tau.tau);
    const double hi = std::min(c, tau.tau);
    integral += a.value * (hi - lo);
    c_prev = c;
    if (c >= tau.tau) break;
  }
  // Cover the case where fp rounding leaves total mass just below tau.
  if (c < tau.tau) integral += dist.max_value() * (tau.tau - c);
  return integral / tau.tau;
}

double empirical_cvar(std::span<const double> xs, RiskLevel tau) {
  if (xs.empty()) throw ArgumentError("empirical cvar of empty sample set");
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const double n_tau = static_cast<double>(sorted.size()) * tau.tau;
  // ceil(N tau), robust to N*tau landing a hair above an integer.
  long m = static_cast<long>(std::ceil(n_tau - 1e-9));
  m = std::clamp<long>(m, 1, static_cast<long>(sorted.size()));
  double tail_sum = 0.0;
  for (long i = 0; i < m; ++i) tail_sum += sorted[static_cast<std::size_t>(i)];
  const double x_m = sorted[static_cast<std::size_t>(m - 1)];
  return (1.0 - static_cast<double>(m) / n_tau) * x_m + tail_sum / n_tau;
}

ConcentrationRadius cvar_concentration_radius(long n, RiskLevel tau, double delta) {
  if (n < 1) throw ArgumentError("sample count must be positive");
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw ArgumentError("failure probability must lie in (0, 1)");
  }
  const double l = std::log(2.0 / delta);
  const double nt = static_cast<double>(n) * tau.tau;
  return {std::sqrt(3.0 * l / nt) + 15.0 * l / nt,
          static_cast<double>(n) >= 25.0 * l};
}

double kl_bernoulli(double p, double q) {
  if (p < 0.0 || p > 1.0 || q < 0.0 || q > 1.0) {
    throw ArgumentError("bernoulli parameters must lie in [0, 1]");
  }
  const double inf = std::numeric_limits<double>::infinity();
  double kl = 0.0;
  if (p > 0.0) {
    if (q == 0.0) return inf;
    kl += p * std::log(p / q);
  }
  if (p < 1.0) {
    if (q == 1.0) return inf;
    kl += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  }
  return kl;
}

}  // namespace cvarsim
