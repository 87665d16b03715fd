#include "raincast/climatology.hpp"

#include <string>
#include <utility>

#include "raincast/errors.hpp"

namespace raincast {

ClimatologyTable::ClimatologyTable(std::vector<Date> dates, std::vector<Tensor> images,
                                   GridMeta grid)
    : dates_(std::move(dates)), images_(std::move(images)), grid_(std::move(grid)) {
  if (dates_.empty()) throw ValidationError("clim: empty history");
  if (dates_.size() != images_.size()) throw ValidationError("clim: dates/images mismatch");
  for (Tensor& t : images_) {
    if (t.rank() == 2) t.shape = {1, t.dim(0), t.dim(1)};
    if (t.rank() != 3 || t.dim(0) != 1 || t.dim(1) != grid_.height || t.dim(2) != grid_.width)
      throw ValidationError("clim: history image has shape " + shape_string(t.shape));
  }
  by_doy_.assign(366, {});  // index 1..365
  for (std::size_t i = 0; i < dates_.size(); ++i)
    by_doy_[static_cast<std::size_t>(dates_[i].day_of_year_365())].push_back(i);
}

std::vector<std::size_t> ClimatologyTable::window(const Date& date) const {
  const int d = date.day_of_year_365();
  std::vector<std::size_t> hits;
  for (int offset = -2; offset <= 2; ++offset) {
    int doy = (d - 1 + offset + 365) % 365 + 1;
    for (std::size_t i : by_doy_[static_cast<std::size_t>(doy)])
      if (dates_[i].year < date.year) hits.push_back(i);
  }
  std::sort(hits.begin(), hits.end());
  return hits;
}

std::vector<double> ClimatologyTable::window_values(const Date& date, int row, int col) const {
  if (row < 0 || row >= grid_.height || col < 0 || col >= grid_.width)
    throw ValidationError("clim: pixel out of range");
  std::vector<double> values;
  for (std::size_t i : window(date)) values.push_back(images_[i].at3(0, row, col));
  if (values.empty())
    throw ValidationError("clim: no historical data for " + date.to_string() +
                          " (needs prior years within +-2 days)");
  return values;
}

double ClimatologyTable::clim_mean(const Date& date, int row, int col) const {
  const std::vector<double> values = window_values(date, row, col);
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

DiscreteCDF ClimatologyTable::clim_cdf(const Date& date, int row, int col) const {
  return cdf_from_samples(window_values(date, row, col));
}

Tensor ClimatologyTable::mean_map(const Date& date) const {
  const std::vector<std::size_t> hits = window(date);
  if (hits.empty())
    throw ValidationError("clim: no historical data for " + date.to_string() +
                          " (needs prior years within +-2 days)");
  Tensor out = Tensor::zeros({1, grid_.height, grid_.width});
  for (std::size_t i : hits)
    for (std::size_t p = 0; p < out.values.size(); ++p) out.values[p] += images_[i].values[p];
  for (double& v : out.values) v /= static_cast<double>(hits.size());
  return out;
}

}  // namespace raincast
