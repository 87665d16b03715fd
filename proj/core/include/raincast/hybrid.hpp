#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "raincast/forecast_set.hpp"

namespace raincast {

// No-intercept residual regression: beta = sum(d*r) / sum(d*d) with
// d = nwp - unet and r = y - unet, pooled over every (date, pixel) pair.
struct BlendWeight {
  double beta = 0.0;
  double sum_squares = 0.0;  // denominator sum of d^2
  std::size_t n = 0;         // pairs pooled into the fit
  std::string fit_split;     // which split supplied the pairs

  void save_json(const std::filesystem::path& path) const;
  static BlendWeight load_json(const std::filesystem::path& path);
};

BlendWeight fit_beta(const std::vector<double>& y, const std::vector<double>& unet,
                     const std::vector<double>& nwp, const std::string& fit_split = "");

// pooled over aligned forecast sets; truths come from whichever set has them
BlendWeight fit_beta(const ForecastSet& unet, const ForecastSet& nwp,
                     const std::string& fit_split = "");

// (1-beta)*unet + beta*nwp elementwise, floored at zero after blending
std::vector<double> blend(const std::vector<double>& unet, const std::vector<double>& nwp,
                          double beta);

struct BlendStats {
  std::size_t floored_predictions = 0;
  std::size_t floored_members = 0;
};

// Blends the deterministic fields, and each NWP member against the single
// UNET field when the NWP set carries an ensemble. Truths are carried over.
ForecastSet blend_sets(const ForecastSet& unet, const ForecastSet& nwp, double beta,
                       BlendStats* stats = nullptr);

}  // namespace raincast
