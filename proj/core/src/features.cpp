#include "raincast/features.hpp"

#include <cmath>

#include "raincast/errors.hpp"

namespace raincast {

std::pair<GridField, GridField> make_seasonal_features(const Date& date, const GridMeta& meta) {
  meta.validate();
  const double day = static_cast<double>(date.day_of_year_365());
  const double angle = 2.0 * 3.14159265358979323846 * day / 365.0;
  const double cos_term = std::cos(angle);
  const double sin_term = std::sin(angle);

  GridField cos_field = GridField::zeros(meta);
  GridField sin_field = GridField::zeros(meta);
  for (int r = 0; r < meta.height; ++r) {
    const float cv = static_cast<float>(cos_term * meta.lat[r]);
    const float sv = static_cast<float>(sin_term * meta.lat[r]);
    for (int c = 0; c < meta.width; ++c) {
      cos_field.at(r, c) = cv;
      sin_field.at(r, c) = sv;
    }
  }
  return {std::move(cos_field), std::move(sin_field)};
}

DatasetManifest augment_with_seasonal(const DatasetManifest& manifest,
                                      const std::filesystem::path& out_dir) {
  manifest.validate();
  for (const auto& name : manifest.variables) {
    if (name == "cos" || name == "sin")
      throw ValidationError("features: manifest already has a \"" + name + "\" channel");
  }
  std::filesystem::create_directories(out_dir);

  const GridMeta meta = manifest.grid();
  DatasetManifest out;
  out.lead_time_hours = manifest.lead_time_hours;
  out.variables = manifest.variables;
  out.variables.push_back("cos");
  out.variables.push_back("sin");
  out.lat = manifest.lat;
  out.lon = manifest.lon;

  for (const Date& date : manifest.dates) {
    const GtfTensor t = read_grid_file(manifest.resolve(date));
    InputCube cube = t.dims.size() == 3
                         ? cube_from_tensor(t, meta, manifest.variables)
                         : InputCube{meta, manifest.variables, {t.values}};
    auto [cos_field, sin_field] = make_seasonal_features(date, meta);
    cube.channel_names.push_back("cos");
    cube.channels.push_back(std::move(cos_field.values));
    cube.channel_names.push_back("sin");
    cube.channels.push_back(std::move(sin_field.values));

    const std::string fname = date.to_string() + ".gtf";
    write_grid_file(out_dir / fname, cube);
    out.dates.push_back(date);
    out.files[date.to_string()] = fname;
  }

  out.save(out_dir / "manifest.json");
  out.base_dir = out_dir;
  return out;
}

}  // namespace raincast
