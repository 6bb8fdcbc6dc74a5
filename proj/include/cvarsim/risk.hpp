#pragma once

#include <span>

#include "cvarsim/finite_dist.hpp"

namespace cvarsim {

// t-th quantile: the smallest atom value v with F(v) >= t, t in (0, 1).
double quantile(const FiniteDist& dist, double t);

// CVaR_tau(X) = max_b { b - tau^-1 E[(b - X)^+] }; the maximum is attained
// at the tau-th quantile, so no search is needed. tau = 1 gives the mean.
double cvar_exact(const FiniteDist& dist, RiskLevel tau);

// tau^-1 * integral_0^tau quantile(y) dy, evaluated exactly over the CDF
// breakpoints. Requires nonnegative atom values; agrees with cvar_exact.
double acerbi_cvar(const FiniteDist& dist, RiskLevel tau);

// CVaR of the empirical distribution of the samples, via the order-statistic
// closed form. Equals cvar_exact(FiniteDist::from_samples(xs), tau).
double empirical_cvar(std::span<const double> xs, RiskLevel tau);

struct ConcentrationRadius {
  double radius;
  // The deviation bound requires n >= 25 log(2/delta); below that threshold
  // the radius is still reported but callers must treat it as vacuous.
  bool valid;
};

// High-probability radius for |empirical_cvar - cvar_exact| with n samples:
// sqrt(3 log(2/delta) / (n tau)) + 15 log(2/delta) / (n tau).
ConcentrationRadius cvar_concentration_radius(long n, RiskLevel tau, double delta);

// KL(Ber(p) || Ber(q)); +infinity when q in {0,1} while p puts mass on the
// missing outcome.
double kl_bernoulli(double p, double q);

}  // namespace cvarsim
