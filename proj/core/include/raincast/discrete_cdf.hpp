#pragma once

#include <vector>

namespace raincast {

// Right-continuous step CDF: P(X <= atoms[k]) = cum[k]. Atoms are strictly
// increasing, cum is non-decreasing with 0 < cum[k] <= 1 and cum.back() == 1
// (within 1e-12). Every probabilistic forecast in the toolkit (climatology
// ensembles, EasyUQ outputs) is one of these.
struct DiscreteCDF {
  std::vector<double> atoms;
  std::vector<double> cum;

  void validate() const;
  std::size_t size() const { return atoms.size(); }
};

DiscreteCDF point_mass(double value);

// Equally weighted empirical CDF; exact ties merge into one atom.
DiscreteCDF cdf_from_samples(const std::vector<double>& values);

// Builds a CDF from parallel (value, cumulative-probability) arrays, dropping
// zero-mass atoms. `levels` must be non-decreasing and end at 1.
DiscreteCDF cdf_from_steps(const std::vector<double>& values, const std::vector<double>& levels);

// CRPS(F, y) = integral of (F(u) - 1{y<=u})^2 du, evaluated in closed form by
// piecewise-constant integration over the partition induced by atoms and y.
// Nonnegative; zero exactly when F is a point mass at y.
double crps_discrete(const DiscreteCDF& cdf, double y);

}  // namespace raincast
