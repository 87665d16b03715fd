#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "raincast/grid.hpp"

namespace raincast {

struct ChannelStats {
  std::string name;
  double mean = 0.0;
  double stdev = 1.0;  // floored at 1e-8 when fitted
};

// Per-channel z-score transform. Statistics are fitted on training inputs
// only (population standard deviation) and reused verbatim elsewhere.
class Normalizer {
 public:
  Normalizer() = default;
  explicit Normalizer(std::vector<ChannelStats> stats) : stats_(std::move(stats)) {}

  // Pools every pixel of every cube, one running tally per channel.
  // All cubes must share the same channel list, in the same order.
  static Normalizer fit(const std::vector<InputCube>& cubes);

  void apply(InputCube& cube) const;   // x -> (x - mean) / std
  void invert(InputCube& cube) const;  // x -> x * std + mean

  void apply_channel(std::size_t channel, float* data, std::size_t n) const;
  void invert_channel(std::size_t channel, float* data, std::size_t n) const;

  std::size_t channel_count() const { return stats_.size(); }
  const std::vector<ChannelStats>& stats() const { return stats_; }
  const ChannelStats& channel(std::size_t i) const { return stats_.at(i); }
  // Index of a channel by name; throws ValidationError when absent.
  std::size_t channel_index(const std::string& name) const;

  nlohmann::json to_json() const;
  static Normalizer from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Normalizer load(const std::filesystem::path& path);

 private:
  void check_cube(const InputCube& cube) const;

  std::vector<ChannelStats> stats_;
};

}  // namespace raincast
