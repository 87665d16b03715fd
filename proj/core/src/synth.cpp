#include "raincast/synth.hpp"

#include <cmath>
#include <cstdio>

#include "raincast/errors.hpp"
#include "raincast/features.hpp"
#include "raincast/forecast_set.hpp"
#include "raincast/rng.hpp"

namespace raincast {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// Substream tags so every artifact draws from its own generator.
constexpr std::uint64_t kTagPredictor = 1;
constexpr std::uint64_t kTagNoise = 2;
constexpr std::uint64_t kTagMember = 3;

std::string channel_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "v%02d", index + 1);
  return std::string(buf);
}

}  // namespace

GridField synth_smooth_field(std::uint64_t seed, const GridMeta& meta) {
  Rng rng(seed);
  constexpr int kWaves = 4;
  double amp[kWaves], phase[kWaves];
  int kx[kWaves], ky[kWaves];
  for (int m = 0; m < kWaves; ++m) {
    amp[m] = rng.normal() / std::sqrt(static_cast<double>(kWaves) / 2.0);
    phase[m] = rng.uniform() * kTwoPi;
    // wavenumbers in {-3..3}, never both zero, so the field has no flat mode
    do {
      kx[m] = static_cast<int>(rng.uniform_index(7)) - 3;
      ky[m] = static_cast<int>(rng.uniform_index(7)) - 3;
    } while (kx[m] == 0 && ky[m] == 0);
  }

  GridField field = GridField::zeros(meta);
  for (int r = 0; r < meta.height; ++r) {
    for (int c = 0; c < meta.width; ++c) {
      double v = 0.0;
      for (int m = 0; m < kWaves; ++m) {
        const double arg = kTwoPi * (static_cast<double>(kx[m]) * c / meta.width +
                                     static_cast<double>(ky[m]) * r / meta.height) +
                           phase[m];
        v += amp[m] * std::cos(arg);
      }
      field.at(r, c) = static_cast<float>(v);
    }
  }
  return field;
}

SynthResult synth_generate(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.t <= 0 || cfg.k < 2 || cfg.height <= 0 || cfg.width <= 0)
    throw ValidationError("synth: need t > 0, k >= 2, positive grid dims");
  if (cfg.lead_time_hours <= 0) throw ValidationError("synth: lead_time_hours must be positive");
  if (cfg.nwp_members < 0) throw ValidationError("synth: negative member count");

  const GridMeta meta = GridMeta::regular(cfg.height, cfg.width, 4.3, 11.6, -3.8, 1.8);
  const std::size_t npx = static_cast<std::size_t>(cfg.height) * cfg.width;

  const auto inputs_dir = out_dir / "inputs";
  const auto targets_dir = out_dir / "targets";
  std::filesystem::create_directories(inputs_dir);
  std::filesystem::create_directories(targets_dir);

  DatasetManifest inputs, targets;
  inputs.lead_time_hours = targets.lead_time_hours = cfg.lead_time_hours;
  inputs.lat = targets.lat = meta.lat;
  inputs.lon = targets.lon = meta.lon;
  for (int c = 0; c < cfg.k; ++c) inputs.variables.push_back(channel_name(c));
  targets.variables = {"precip"};

  ForecastSet nwp;
  if (cfg.nwp_members > 0) {
    nwp.lat = meta.lat;
    nwp.lon = meta.lon;
    nwp.member_count = cfg.nwp_members;
  }

  Date date = cfg.start_date;
  for (int ti = 0; ti < cfg.t; ++ti) {
    InputCube cube;
    cube.meta = meta;
    for (int c = 0; c < cfg.k; ++c) {
      cube.channel_names.push_back(channel_name(c));
      cube.channels.push_back(
          synth_smooth_field(mix_seed(cfg.seed, kTagPredictor, (static_cast<std::uint64_t>(ti) << 16) | static_cast<std::uint64_t>(c)), meta)
              .values);
    }

    const auto [cos_field, sin_field] = make_seasonal_features(date, meta);
    Rng noise(mix_seed(cfg.seed, kTagNoise, static_cast<std::uint64_t>(ti)));
    GridField rain = GridField::zeros(meta);
    for (std::size_t i = 0; i < npx; ++i) {
      const double v = kSynthCoefV01 * cube.channels[0][i] + kSynthCoefV02 * cube.channels[1][i] +
                       kSynthCoefCos * cos_field.values[i] + kSynthBias +
                       kSynthNoiseStd * noise.normal();
      rain.values[i] = static_cast<float>(std::max(v, 0.0));
    }

    const std::string fname = date.to_string() + ".gtf";
    write_grid_file(inputs_dir / fname, cube);
    write_grid_file(targets_dir / fname, rain);

    const std::string ds = date.to_string();
    inputs.dates.push_back(date);
    inputs.files[ds] = fname;
    targets.dates.push_back(date);
    targets.files[ds] = fname;

    if (cfg.nwp_members > 0) {
      nwp.dates.push_back(date);
      std::vector<double> mean(npx, 0.0);
      for (int m = 0; m < cfg.nwp_members; ++m) {
        const GridField bump = synth_smooth_field(
            mix_seed(cfg.seed, kTagMember, (static_cast<std::uint64_t>(ti) << 16) | static_cast<std::uint64_t>(m)), meta);
        for (std::size_t i = 0; i < npx; ++i) {
          const float v = std::max(0.0f, rain.values[i] + 0.5f * bump.values[i]);
          nwp.members.push_back(v);
          mean[i] += v;
        }
      }
      for (std::size_t i = 0; i < npx; ++i)
        nwp.predictions.push_back(static_cast<float>(mean[i] / cfg.nwp_members));
      nwp.truths.insert(nwp.truths.end(), rain.values.begin(), rain.values.end());
    }

    date = date.next_day();
  }

  SynthResult result;
  result.inputs_manifest = inputs_dir / "manifest.json";
  result.targets_manifest = targets_dir / "manifest.json";
  inputs.save(result.inputs_manifest);
  targets.save(result.targets_manifest);
  if (cfg.nwp_members > 0) {
    result.nwp_dir = out_dir / "nwp";
    nwp.save(result.nwp_dir);
  }
  return result;
}

}  // namespace raincast
