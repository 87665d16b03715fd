#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "raincast/dates.hpp"
#include "raincast/grid.hpp"

namespace raincast {

// Aligned per-date forecasts over one split: a point prediction image per
// date, optional ensemble members, optional ground truth. Stored on disk as
// a directory holding forecastset.json plus GTF1 blobs with T as the leading
// axis (predictions/truths T x H x W, members T x M x H x W).
struct ForecastSet {
  std::vector<Date> dates;
  std::vector<double> lat;
  std::vector<double> lon;
  std::vector<float> predictions;  // T*H*W
  std::vector<float> members;      // T*M*H*W, empty when member_count == 0
  int member_count = 0;
  std::vector<float> truths;  // T*H*W, may be empty

  std::size_t size() const { return dates.size(); }
  std::size_t height() const { return lat.size(); }
  std::size_t width() const { return lon.size(); }
  std::size_t pixels() const { return height() * width(); }
  bool has_members() const { return member_count > 0; }
  bool has_truths() const { return !truths.empty(); }
  GridMeta grid() const;

  float* prediction(std::size_t t) { return predictions.data() + t * pixels(); }
  const float* prediction(std::size_t t) const { return predictions.data() + t * pixels(); }
  float* member(std::size_t t, int m) {
    return members.data() + (t * static_cast<std::size_t>(member_count) + static_cast<std::size_t>(m)) * pixels();
  }
  const float* member(std::size_t t, int m) const {
    return members.data() + (t * static_cast<std::size_t>(member_count) + static_cast<std::size_t>(m)) * pixels();
  }
  float* truth(std::size_t t) { return truths.data() + t * pixels(); }
  const float* truth(std::size_t t) const { return truths.data() + t * pixels(); }

  void validate() const;
  void save(const std::filesystem::path& dir) const;
  // Accepts either the directory or the forecastset.json path itself.
  static ForecastSet load(const std::filesystem::path& path);
};

}  // namespace raincast
