#pragma once

#include <filesystem>
#include <utility>

#include "raincast/dates.hpp"
#include "raincast/grid.hpp"
#include "raincast/manifest.hpp"

namespace raincast {

// Seasonal encoding of calendar position modulated by latitude:
//   cos_field(r, c) = cos(2*pi*day/365) * lat(r)
//   sin_field(r, c) = sin(2*pi*day/365) * lat(r)
// where day is the 365-mapped day of the year. Both fields are bounded by
// |lat(r)| pixelwise.
std::pair<GridField, GridField> make_seasonal_features(const Date& date, const GridMeta& meta);

// Rewrites every cube of `manifest` with "cos" and "sin" channels appended,
// placing the new cubes and manifest under out_dir. Returns the augmented
// manifest (saved as out_dir/manifest.json).
DatasetManifest augment_with_seasonal(const DatasetManifest& manifest,
                                      const std::filesystem::path& out_dir);

}  // namespace raincast
