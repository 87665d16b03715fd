#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <vector>

#include "raincast/climatology.hpp"
#include "raincast/discrete_cdf.hpp"
#include "raincast/easyuq.hpp"
#include "raincast/forecast_set.hpp"

namespace raincast {

// One real value per pixel plus recomputable summary stats. CSV form is
// "row,col,value" per pixel.
struct ScoreMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // height*width, row-major

  static ScoreMap zeros(int height, int width);
  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
  std::size_t pixels() const { return values.size(); }

  double mean() const;
  double stdev() const;  // population standard deviation
  void validate() const;

  void save_csv(const std::filesystem::path& path) const;
  static ScoreMap load_csv(const std::filesystem::path& path);
};

// mean over test dates of |prediction - truth| per pixel
ScoreMap mae_map(const ForecastSet& fc);

// Shared CRPS driver: one predictive CDF per (date, pixel), averaged over
// dates at each pixel. Parallel over pixels.
using CdfAt = std::function<DiscreteCDF(std::size_t t, int row, int col)>;
using TruthAt = std::function<double(std::size_t t, int row, int col)>;
ScoreMap crps_map(std::size_t n_dates, int height, int width, const CdfAt& cdf_at,
                  const TruthAt& truth_at, int threads = 1);

ScoreMap crps_map_point(const ForecastSet& fc, int threads = 1);    // point-mass forecasts
ScoreMap crps_map_members(const ForecastSet& fc, int threads = 1);  // ensemble empirical CDFs
ScoreMap crps_map_idr(const IdrGrid& fit, const ForecastSet& fc, int threads = 1);
ScoreMap crps_map_clim(const ClimatologyTable& table, const ForecastSet& truthset,
                       int threads = 1);

// Skill(i) = (CRPS_clim(i) - CRPS_model(i)) / CRPS_clim(i), with the
// ternarized sign map. Pixels where the CLIM CRPS is zero are flagged,
// carry skill 0, and are excluded from the ternary map.
struct SkillResult {
  ScoreMap skill;
  std::vector<signed char> ternary;    // -1, 0, +1 per pixel; 0 where flagged
  std::vector<unsigned char> flagged;  // 1 where the denominator vanished
  int flagged_count = 0;
};
SkillResult skill_map(const ScoreMap& model, const ScoreMap& clim);

// harmonic mean; zero when precision + recall == 0
double f1_from_pr(double precision, double recall);

// Thresholded event detection per pixel: events are |value| > tau. Pixels
// with a zero denominator are undefined for that metric and excluded from
// the renormalized averages.
struct Prf1Result {
  ScoreMap precision, recall, f1;  // zero where undefined
  std::vector<unsigned char> precision_defined, recall_defined, f1_defined;
  double avg_precision = 0.0, avg_recall = 0.0, avg_f1 = 0.0;
  int excluded_precision = 0, excluded_recall = 0, excluded_f1 = 0;
};
Prf1Result prf1(const ForecastSet& fc, double tau);

// Forecast-bias counts over the six ranges of Table 3:
// (-inf,-1], (-1,-0.1], (-0.1,0], (0,0.1], (0.1,1], (1,inf)
struct BiasHistogram {
  std::array<long long, 6> counts{};

  long long total() const;
  std::array<double, 6> proportions() const;
  static int bin_of(double bias);
  static const char* bin_label(int bin);

  void save_csv(const std::filesystem::path& path) const;
  static BiasHistogram load_csv(const std::filesystem::path& path);
};
BiasHistogram bias_histogram(const ForecastSet& fc);

// S = sum (N_A - N_B)^2 / (N_A + N_B) over bins, chi-square with bins-1
// degrees of freedom; p-value through the regularized incomplete gamma.
struct Chi2Result {
  double s = 0.0;
  double p = 1.0;
  double log10_p = 0.0;  // finite even when p underflows
};
Chi2Result chi2_homogeneity(const std::vector<double>& a, const std::vector<double>& b);
Chi2Result chi2_homogeneity(const BiasHistogram& a, const BiasHistogram& b);

// 8-bit binary portable graymap, min-max scaled, plus a <path>.json sidecar
// recording the scale.
void write_pgm_heatmap(const ScoreMap& map, const std::filesystem::path& path);

}  // namespace raincast
