#include "raincast/normalizer.hpp"

#include <cmath>
#include <fstream>

#include "raincast/errors.hpp"

namespace raincast {

namespace {
constexpr double kStdFloor = 1e-8;
}

Normalizer Normalizer::fit(const std::vector<InputCube>& cubes) {
  if (cubes.empty()) throw ValidationError("normalizer: no cubes to fit");
  const auto& names = cubes.front().channel_names;
  const std::size_t nch = names.size();
  if (nch == 0) throw ValidationError("normalizer: cubes have no channels");
  for (const auto& cube : cubes) {
    cube.validate();
    if (cube.channel_names != names)
      throw ValidationError("normalizer: cubes disagree on channel names");
  }

  std::vector<ChannelStats> stats(nch);
  for (std::size_t c = 0; c < nch; ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& cube : cubes) {
      for (float v : cube.channels[c]) sum += v;
      count += cube.channels[c].size();
    }
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (const auto& cube : cubes) {
      for (float v : cube.channels[c]) {
        const double d = v - mean;
        sq += d * d;
      }
    }
    const double var = sq / static_cast<double>(count);
    stats[c].name = names[c];
    stats[c].mean = mean;
    stats[c].stdev = std::max(std::sqrt(var), kStdFloor);
  }
  return Normalizer(std::move(stats));
}

void Normalizer::check_cube(const InputCube& cube) const {
  if (cube.channel_names.size() != stats_.size())
    throw ValidationError("normalizer: cube has " + std::to_string(cube.channel_names.size()) +
                          " channels, stats have " + std::to_string(stats_.size()));
  for (std::size_t c = 0; c < stats_.size(); ++c) {
    if (cube.channel_names[c] != stats_[c].name)
      throw ValidationError("normalizer: channel " + std::to_string(c) + " is \"" +
                            cube.channel_names[c] + "\", expected \"" + stats_[c].name + "\"");
  }
}

void Normalizer::apply(InputCube& cube) const {
  check_cube(cube);
  for (std::size_t c = 0; c < stats_.size(); ++c)
    apply_channel(c, cube.channels[c].data(), cube.channels[c].size());
}

void Normalizer::invert(InputCube& cube) const {
  check_cube(cube);
  for (std::size_t c = 0; c < stats_.size(); ++c)
    invert_channel(c, cube.channels[c].data(), cube.channels[c].size());
}

void Normalizer::apply_channel(std::size_t channel, float* data, std::size_t n) const {
  const auto& s = stats_.at(channel);
  for (std::size_t i = 0; i < n; ++i)
    data[i] = static_cast<float>((data[i] - s.mean) / s.stdev);
}

void Normalizer::invert_channel(std::size_t channel, float* data, std::size_t n) const {
  const auto& s = stats_.at(channel);
  for (std::size_t i = 0; i < n; ++i)
    data[i] = static_cast<float>(data[i] * s.stdev + s.mean);
}

std::size_t Normalizer::channel_index(const std::string& name) const {
  for (std::size_t i = 0; i < stats_.size(); ++i)
    if (stats_[i].name == name) return i;
  throw ValidationError("normalizer: unknown channel \"" + name + "\"");
}

nlohmann::json Normalizer::to_json() const {
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& s : stats_)
    channels.push_back({{"name", s.name}, {"mean", s.mean}, {"std", s.stdev}});
  return nlohmann::json{{"channels", channels}};
}

Normalizer Normalizer::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("channels") || !j["channels"].is_array())
    throw ValidationError("normalizer: JSON must be an object with a \"channels\" array");
  std::vector<ChannelStats> stats;
  for (const auto& entry : j["channels"]) {
    ChannelStats s;
    s.name = entry.at("name").get<std::string>();
    s.mean = entry.at("mean").get<double>();
    s.stdev = entry.at("std").get<double>();
    if (!(s.stdev > 0.0) || !std::isfinite(s.stdev) || !std::isfinite(s.mean))
      throw ValidationError("normalizer: invalid stats for channel \"" + s.name + "\"");
    stats.push_back(std::move(s));
  }
  if (stats.empty()) throw ValidationError("normalizer: empty channel list");
  return Normalizer(std::move(stats));
}

void Normalizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_json().dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

Normalizer Normalizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("normalizer: bad JSON in " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace raincast
