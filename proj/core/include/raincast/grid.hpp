#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "raincast/tensor_file.hpp"

namespace raincast {

// Coordinates of the regular lat/lon grid. lat has one entry per row, lon one
// per column; both strictly monotone.
struct GridMeta {
  int height = 64;
  int width = 64;
  std::vector<double> lat;
  std::vector<double> lon;

  static GridMeta regular(int height, int width, double lat_min, double lat_max,
                          double lon_min, double lon_max);
  void validate() const;
  bool same_grid(const GridMeta& other) const;
};

// One 2D real-valued field on the grid: a rainfall image or a single
// predictor channel. Row-major, units mm for rainfall.
struct GridField {
  GridMeta meta;
  std::vector<float> values;

  float& at(int row, int col) { return values[static_cast<std::size_t>(row) * meta.width + col]; }
  float at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * meta.width + col];
  }
  static GridField zeros(const GridMeta& meta);
  void validate() const;
};

// K-channel stack of predictor fields for one date, all sharing one grid.
struct InputCube {
  GridMeta meta;
  std::vector<std::string> channel_names;
  std::vector<std::vector<float>> channels;  // channel_names.size() buffers of H*W

  int channel_count() const { return static_cast<int>(channels.size()); }
  void validate() const;
};

// Grid-level wrappers over GTF1: rank 2 = field, rank 3 = cube.
void write_grid_file(const std::filesystem::path& path, const GridField& field);
void write_grid_file(const std::filesystem::path& path, const InputCube& cube);

GtfTensor read_grid_file(const std::filesystem::path& path);  // rank checked in {2,3}
GridField field_from_tensor(const GtfTensor& t, const GridMeta& meta);
InputCube cube_from_tensor(const GtfTensor& t, const GridMeta& meta,
                           const std::vector<std::string>& names);

}  // namespace raincast
