#include "raincast/grid.hpp"

#include <cmath>
#include <set>

#include "raincast/errors.hpp"

namespace raincast {

namespace {

bool strictly_monotone(const std::vector<double>& v) {
  if (v.size() < 2) return true;
  const bool up = v[1] > v[0];
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (up ? (v[i] <= v[i - 1]) : (v[i] >= v[i - 1])) return false;
  }
  return true;
}

}  // namespace

GridMeta GridMeta::regular(int height, int width, double lat_min, double lat_max,
                           double lon_min, double lon_max) {
  if (height <= 0 || width <= 0) throw ValidationError("grid dims must be positive");
  GridMeta meta;
  meta.height = height;
  meta.width = width;
  meta.lat.resize(height);
  meta.lon.resize(width);
  for (int r = 0; r < height; ++r) {
    meta.lat[r] = height == 1 ? lat_min : lat_min + (lat_max - lat_min) * r / (height - 1);
  }
  for (int c = 0; c < width; ++c) {
    meta.lon[c] = width == 1 ? lon_min : lon_min + (lon_max - lon_min) * c / (width - 1);
  }
  meta.validate();
  return meta;
}

void GridMeta::validate() const {
  if (height <= 0 || width <= 0) throw ValidationError("grid dims must be positive");
  if (static_cast<int>(lat.size()) != height) {
    throw ValidationError("lat size " + std::to_string(lat.size()) + " != height " +
                          std::to_string(height));
  }
  if (static_cast<int>(lon.size()) != width) {
    throw ValidationError("lon size " + std::to_string(lon.size()) + " != width " +
                          std::to_string(width));
  }
  for (double v : lat) {
    if (!std::isfinite(v)) throw ValidationError("non-finite latitude");
  }
  for (double v : lon) {
    if (!std::isfinite(v)) throw ValidationError("non-finite longitude");
  }
  if (!strictly_monotone(lat)) throw ValidationError("lat must be strictly monotone");
  if (!strictly_monotone(lon)) throw ValidationError("lon must be strictly monotone");
}

bool GridMeta::same_grid(const GridMeta& other) const {
  return height == other.height && width == other.width && lat == other.lat && lon == other.lon;
}

GridField GridField::zeros(const GridMeta& meta) {
  GridField f;
  f.meta = meta;
  f.values.assign(static_cast<std::size_t>(meta.height) * meta.width, 0.0f);
  return f;
}

void GridField::validate() const {
  meta.validate();
  if (values.size() != static_cast<std::size_t>(meta.height) * meta.width) {
    throw ValidationError("field has " + std::to_string(values.size()) + " values, expected " +
                          std::to_string(static_cast<std::size_t>(meta.height) * meta.width));
  }
  for (float v : values) {
    if (!std::isfinite(v)) throw ValidationError("non-finite field value");
  }
}

void InputCube::validate() const {
  meta.validate();
  if (channel_names.size() != channels.size()) {
    throw ValidationError("cube has " + std::to_string(channels.size()) + " channels but " +
                          std::to_string(channel_names.size()) + " names");
  }
  std::set<std::string> seen;
  for (const auto& name : channel_names) {
    if (!seen.insert(name).second) throw ValidationError("duplicate channel name " + name);
  }
  const std::size_t n = static_cast<std::size_t>(meta.height) * meta.width;
  for (const auto& ch : channels) {
    if (ch.size() != n) throw ValidationError("channel size mismatch");
    for (float v : ch) {
      if (!std::isfinite(v)) throw ValidationError("non-finite channel value");
    }
  }
}

void write_grid_file(const std::filesystem::path& path, const GridField& field) {
  GtfTensor t;
  t.dims = {static_cast<std::uint32_t>(field.meta.height),
            static_cast<std::uint32_t>(field.meta.width)};
  t.values = field.values;
  write_gtf_file(path, t);
}

void write_grid_file(const std::filesystem::path& path, const InputCube& cube) {
  GtfTensor t;
  t.dims = {static_cast<std::uint32_t>(cube.channels.size()),
            static_cast<std::uint32_t>(cube.meta.height),
            static_cast<std::uint32_t>(cube.meta.width)};
  t.values.reserve(cube.channels.size() * static_cast<std::size_t>(cube.meta.height) *
                   cube.meta.width);
  for (const auto& ch : cube.channels) t.values.insert(t.values.end(), ch.begin(), ch.end());
  write_gtf_file(path, t);
}

GtfTensor read_grid_file(const std::filesystem::path& path) {
  GtfTensor t = read_gtf_file(path);
  if (t.dims.size() != 2 && t.dims.size() != 3) {
    throw FormatError(path.string() + ": grid files must have rank 2 or 3, got rank " +
                      std::to_string(t.dims.size()));
  }
  return t;
}

GridField field_from_tensor(const GtfTensor& t, const GridMeta& meta) {
  if (t.dims.size() != 2) throw ValidationError("expected rank-2 tensor for a field");
  if (static_cast<int>(t.dims[0]) != meta.height || static_cast<int>(t.dims[1]) != meta.width) {
    throw ValidationError("field dims do not match grid");
  }
  GridField f;
  f.meta = meta;
  f.values = t.values;
  return f;
}

InputCube cube_from_tensor(const GtfTensor& t, const GridMeta& meta,
                           const std::vector<std::string>& names) {
  if (t.dims.size() != 3) throw ValidationError("expected rank-3 tensor for a cube");
  if (t.dims[0] != names.size()) {
    throw ValidationError("cube has " + std::to_string(t.dims[0]) + " channels, manifest lists " +
                          std::to_string(names.size()));
  }
  if (static_cast<int>(t.dims[1]) != meta.height || static_cast<int>(t.dims[2]) != meta.width) {
    throw ValidationError("cube dims do not match grid");
  }
  InputCube cube;
  cube.meta = meta;
  cube.channel_names = names;
  const std::size_t n = static_cast<std::size_t>(meta.height) * meta.width;
  cube.channels.resize(names.size());
  for (std::size_t k = 0; k < names.size(); ++k) {
    cube.channels[k].assign(t.values.begin() + k * n, t.values.begin() + (k + 1) * n);
  }
  return cube;
}

}  // namespace raincast
