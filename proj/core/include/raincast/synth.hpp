#pragma once

#include <cstdint>
#include <filesystem>

#include "raincast/dates.hpp"
#include "raincast/grid.hpp"
#include "raincast/manifest.hpp"

namespace raincast {

// Desk-scale synthetic dataset. Predictors v01..v{k} are smooth superposed
// plane waves, independent across dates and channels given the seed. The
// rainfall target is, by construction,
//   y = max(0, 3*v01 + 2*v02 + 0.5*COS + 2 + eps),   eps ~ N(0, 0.1^2) iid,
// so the generating variables are v01, v02 and the COS seasonal feature;
// every other channel (and SIN) is a decoy. Rainfall is nonnegative
// everywhere and the whole dataset is a pure function of the seed.
struct SynthConfig {
  std::uint64_t seed = 0;
  int t = 40;  // consecutive dates starting at start_date
  int k = 4;   // raw predictor channels, >= 2
  int height = 16;
  int width = 16;
  Date start_date{2000, 1, 1};
  int lead_time_hours = 12;
  int nwp_members = 0;  // when > 0, also emit an ensemble ForecastSet under nwp/
};

struct SynthResult {
  std::filesystem::path inputs_manifest;   // out_dir/inputs/manifest.json
  std::filesystem::path targets_manifest;  // out_dir/targets/manifest.json
  std::filesystem::path nwp_dir;           // out_dir/nwp, empty when not emitted
};

// Coefficients of the generating formula, shared with tests.
inline constexpr double kSynthCoefV01 = 3.0;
inline constexpr double kSynthCoefV02 = 2.0;
inline constexpr double kSynthCoefCos = 0.5;
inline constexpr double kSynthBias = 2.0;
inline constexpr double kSynthNoiseStd = 0.1;

// One smooth random field: a few random plane waves, values O(1).
GridField synth_smooth_field(std::uint64_t seed, const GridMeta& meta);

// Writes inputs/, targets/ (and optionally nwp/) under out_dir.
SynthResult synth_generate(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace raincast
