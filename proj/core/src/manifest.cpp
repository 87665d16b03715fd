#include "raincast/manifest.hpp"

#include <cmath>
#include <fstream>

#include "raincast/errors.hpp"
#include "raincast/tensor_file.hpp"

namespace raincast {

GridMeta DatasetManifest::grid() const {
  GridMeta meta;
  meta.height = static_cast<int>(lat.size());
  meta.width = static_cast<int>(lon.size());
  meta.lat = lat;
  meta.lon = lon;
  return meta;
}

std::filesystem::path DatasetManifest::resolve(const Date& date) const {
  auto it = files.find(date.to_string());
  if (it == files.end())
    throw ValidationError("manifest: no file entry for " + date.to_string());
  std::filesystem::path p(it->second);
  return p.is_absolute() ? p : base_dir / p;
}

void DatasetManifest::validate() const {
  if (dates.empty()) throw ValidationError("manifest: empty date list");
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i - 1] < dates[i]))
      throw ValidationError("manifest: dates not strictly increasing at " + dates[i].to_string());
  }
  if (lead_time_hours <= 0)
    throw ValidationError("manifest: lead_time_hours must be positive, got " +
                          std::to_string(lead_time_hours));
  if (variables.empty()) throw ValidationError("manifest: empty variable list");
  grid().validate();
  if (files.size() != dates.size())
    throw ValidationError("manifest: " + std::to_string(files.size()) + " file entries for " +
                          std::to_string(dates.size()) + " dates");
  for (const auto& d : dates) {
    if (!files.count(d.to_string()))
      throw ValidationError("manifest: no file entry for " + d.to_string());
  }
}

void DatasetManifest::check_files() const {
  validate();
  const std::size_t k = variables.size();
  const auto h = static_cast<std::uint32_t>(lat.size());
  const auto w = static_cast<std::uint32_t>(lon.size());
  for (const auto& d : dates) {
    const auto path = resolve(d);
    if (!std::filesystem::exists(path))
      throw ValidationError("manifest: missing file " + path.string() + " for " + d.to_string());
    const GtfTensor t = read_gtf_file(path);
    const bool rank3_ok = t.dims.size() == 3 && t.dims[0] == k && t.dims[1] == h && t.dims[2] == w;
    const bool rank2_ok = k == 1 && t.dims.size() == 2 && t.dims[0] == h && t.dims[1] == w;
    if (!rank3_ok && !rank2_ok)
      throw ValidationError("manifest: " + path.string() + " dims do not match declared grid");
  }
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json j;
  nlohmann::json date_arr = nlohmann::json::array();
  for (const auto& d : dates) date_arr.push_back(d.to_string());
  j["dates"] = std::move(date_arr);
  j["lead_time_hours"] = lead_time_hours;
  j["variables"] = variables;
  j["lat"] = lat;
  j["lon"] = lon;
  j["files"] = files;
  return j;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    for (const auto& s : j.at("dates")) m.dates.push_back(Date::parse(s.get<std::string>()));
    m.lead_time_hours = j.at("lead_time_hours").get<int>();
    m.variables = j.at("variables").get<std::vector<std::string>>();
    m.lat = j.at("lat").get<std::vector<double>>();
    m.lon = j.at("lon").get<std::vector<double>>();
    m.files = j.at("files").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest: bad JSON: ") + e.what());
  }
  m.validate();
  return m;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_json().dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest: bad JSON in " + path.string() + ": " + e.what());
  }
  DatasetManifest m = from_json(j);
  m.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return m;
}

DatasetSplits split_dataset(const DatasetManifest& manifest, const SplitSpec& spec) {
  manifest.validate();
  if (spec.total() != manifest.size())
    throw ValidationError("split: spec sums to " + std::to_string(spec.total()) + " but manifest has " +
                          std::to_string(manifest.size()) + " dates");

  auto subset = [&](std::size_t begin, std::size_t count) {
    DatasetManifest out;
    out.lead_time_hours = manifest.lead_time_hours;
    out.variables = manifest.variables;
    out.lat = manifest.lat;
    out.lon = manifest.lon;
    out.base_dir = manifest.base_dir;
    for (std::size_t i = begin; i < begin + count; ++i) {
      const Date& d = manifest.dates[i];
      out.dates.push_back(d);
      out.files[d.to_string()] = manifest.files.at(d.to_string());
    }
    return out;
  };

  DatasetSplits splits;
  splits.train = subset(0, spec.n_train);
  splits.val = subset(spec.n_train, spec.n_val);
  splits.test = subset(spec.n_train + spec.n_val, spec.n_test);
  return splits;
}

}  // namespace raincast
