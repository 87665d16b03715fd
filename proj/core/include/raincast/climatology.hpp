#pragma once

#include <vector>

#include "raincast/autodiff.hpp"
#include "raincast/dates.hpp"
#include "raincast/discrete_cdf.hpp"
#include "raincast/grid.hpp"

namespace raincast {

// Pointwise climatology over a rainfall history: for a forecast date, the
// reference sample at each pixel is every historical value from strictly
// earlier calendar years whose day-of-year lies within +-2 days (mod 365,
// Feb 29 mapped onto day 59). Immutable after construction; queries are
// thread-safe.
class ClimatologyTable {
 public:
  // images are (1, H, W) or (H, W) rainfall tensors aligned with dates
  ClimatologyTable(std::vector<Date> dates, std::vector<Tensor> images, GridMeta grid);

  const GridMeta& grid() const { return grid_; }
  std::size_t history_size() const { return dates_.size(); }

  // indices of history entries contributing to a forecast date
  std::vector<std::size_t> window(const Date& date) const;

  double clim_mean(const Date& date, int row, int col) const;
  DiscreteCDF clim_cdf(const Date& date, int row, int col) const;

  // (1, H, W) tensor of clim_mean at every pixel
  Tensor mean_map(const Date& date) const;

 private:
  std::vector<Date> dates_;
  std::vector<Tensor> images_;  // each (1, H, W)
  GridMeta grid_;
  std::vector<std::vector<std::size_t>> by_doy_;  // history indices per day-of-year (1..365)

  std::vector<double> window_values(const Date& date, int row, int col) const;
};

}  // namespace raincast
