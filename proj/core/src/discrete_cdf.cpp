#include "raincast/discrete_cdf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "raincast/errors.hpp"

namespace raincast {

void DiscreteCDF::validate() const {
  if (atoms.empty()) throw ValidationError("cdf: no atoms");
  if (atoms.size() != cum.size()) throw ValidationError("cdf: atoms/cum length mismatch");
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    if (!std::isfinite(atoms[k])) throw ValidationError("cdf: non-finite atom");
    if (k > 0 && !(atoms[k] > atoms[k - 1]))
      throw ValidationError("cdf: atoms not strictly increasing");
    if (!(cum[k] > 0.0) || cum[k] > 1.0 + 1e-12)
      throw ValidationError("cdf: cumulative probability outside (0, 1]");
    if (k > 0 && cum[k] < cum[k - 1]) throw ValidationError("cdf: cum not non-decreasing");
  }
  if (std::fabs(cum.back() - 1.0) > 1e-12)
    throw ValidationError("cdf: final cumulative probability is " + std::to_string(cum.back()));
}

DiscreteCDF point_mass(double value) {
  DiscreteCDF cdf;
  cdf.atoms = {value};
  cdf.cum = {1.0};
  cdf.validate();
  return cdf;
}

DiscreteCDF cdf_from_samples(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("cdf: no samples");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  DiscreteCDF cdf;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;  // merge ties
    cdf.atoms.push_back(sorted[i]);
    cdf.cum.push_back(static_cast<double>(i + 1) / n);  // count-based: ends at exactly 1
  }
  cdf.validate();
  return cdf;
}

DiscreteCDF cdf_from_steps(const std::vector<double>& values, const std::vector<double>& levels) {
  if (values.size() != levels.size()) throw ValidationError("cdf: values/levels length mismatch");
  DiscreteCDF cdf;
  double prev = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (levels[i] > prev) {
      cdf.atoms.push_back(values[i]);
      cdf.cum.push_back(levels[i]);
      prev = levels[i];
    }
  }
  cdf.validate();
  return cdf;
}

double crps_discrete(const DiscreteCDF& cdf, double y) {
  cdf.validate();
  if (!std::isfinite(y)) throw ValidationError("crps: non-finite observation");

  // partition points: atoms plus y; F and the indicator are constant between
  // consecutive points, zero outside [first, last)
  std::vector<double> points = cdf.atoms;
  points.push_back(y);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  double total = 0.0;
  std::size_t next_atom = 0;  // first atom strictly greater than the current point
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double p = points[i];
    while (next_atom < cdf.atoms.size() && cdf.atoms[next_atom] <= p) ++next_atom;
    const double f = next_atom == 0 ? 0.0 : cdf.cum[next_atom - 1];
    const double h = y <= p ? 1.0 : 0.0;
    total += (points[i + 1] - p) * (f - h) * (f - h);
  }
  return total;
}

}  // namespace raincast
