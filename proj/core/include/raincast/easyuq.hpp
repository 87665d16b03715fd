#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "raincast/discrete_cdf.hpp"
#include "raincast/forecast_set.hpp"

namespace raincast {

// Isotonic distributional regression for one pixel: for every threshold u
// (a distinct training observation), the fitted CDF value is antitonic in
// the predictor, the weighted-PAVA least-squares fit of the indicators
// 1{y <= u}. Rows are valid CDFs over the thresholds; columns never increase
// with the predictor index (stochastic ordering).
struct IdrFit {
  std::vector<double> predictors;  // sorted unique training predictor values
  std::vector<double> thresholds;  // sorted distinct training observations
  std::vector<double> cdf;         // predictors.size() x thresholds.size(), row-major

  std::size_t rows() const { return predictors.size(); }
  std::size_t cols() const { return thresholds.size(); }
  double at(std::size_t i, std::size_t j) const { return cdf[i * cols() + j]; }
  void validate() const;
};

// Fits IDR on (predictor, observation) training pairs; observations must be
// nonnegative (rainfall). Exact predictor ties are merged with summed weight.
IdrFit idr_fit(const std::vector<std::pair<double, double>>& pairs);

// Weighted antitonic least-squares fit (pool-adjacent-violators). Exposed for
// oracle tests; idr_fit calls this once per threshold.
std::vector<double> pava_antitonic(const std::vector<double>& values,
                                   const std::vector<double>& weights);

// Predictive CDF at x: the fitted row when x is a training predictor, the
// thresholdwise linear interpolation of the bracketing rows inside the range,
// the nearest row outside it (clamping).
DiscreteCDF idr_predict(const IdrFit& fit, double x);

// Mean crps_discrete of the fitted predictive CDFs over the training pairs.
double idr_in_sample_crps(const IdrFit& fit, const std::vector<std::pair<double, double>>& pairs);

// One independent fit per pixel, trained from a ForecastSet carrying truths.
struct IdrGrid {
  int height = 0;
  int width = 0;
  std::vector<IdrFit> fits;  // row-major, height*width entries

  const IdrFit& at(int row, int col) const {
    return fits[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + col];
  }
  void validate() const;

  // IDR1 container: magic, u32 LE header length, JSON header {format, height,
  // width}, then per pixel (row-major) three GTF1 blobs: predictors,
  // thresholds, and the fitted CDF matrix.
  void save(const std::filesystem::path& path) const;
  static IdrGrid load(const std::filesystem::path& path);
};

IdrGrid idr_fit_grid(const ForecastSet& training, int threads = 1);

}  // namespace raincast
