#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "raincast/dates.hpp"
#include "raincast/grid.hpp"

namespace raincast {

// JSON sidecar describing a dated collection of GTF1 files on one grid:
// {dates[], lead_time_hours, variables[], lat[], lon[], files{date->path}}.
// Paths in `files` are kept as written; resolve() joins them onto base_dir
// (set to the manifest's parent directory by load()).
struct DatasetManifest {
  std::vector<Date> dates;
  int lead_time_hours = 0;
  std::vector<std::string> variables;
  std::vector<double> lat;
  std::vector<double> lon;
  std::map<std::string, std::string> files;
  std::filesystem::path base_dir;

  std::size_t size() const { return dates.size(); }
  GridMeta grid() const;
  std::filesystem::path resolve(const Date& date) const;

  // Structural invariants: strictly increasing dates, lead > 0, exactly one
  // file entry per date, nonempty variables and grid axes.
  void validate() const;
  // Opens every listed file and checks dims against the declared grid
  // (rank 3 K x H x W for multi-variable manifests, rank 2 H x W allowed
  // when K == 1). Throws on the first missing or malformed file.
  void check_files() const;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static DatasetManifest load(const std::filesystem::path& path);
};

struct SplitSpec {
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;

  std::size_t total() const { return n_train + n_val + n_test; }
};

struct DatasetSplits {
  DatasetManifest train;
  DatasetManifest val;
  DatasetManifest test;
};

// Chronological assignment: the first n_train dates train, the next n_val
// validate, the final n_test test. spec must sum to manifest.size().
DatasetSplits split_dataset(const DatasetManifest& manifest, const SplitSpec& spec);

}  // namespace raincast
