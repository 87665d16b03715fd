#include "raincast/forecast_set.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "raincast/errors.hpp"
#include "raincast/tensor_file.hpp"

namespace raincast {

GridMeta ForecastSet::grid() const {
  GridMeta meta;
  meta.height = static_cast<int>(lat.size());
  meta.width = static_cast<int>(lon.size());
  meta.lat = lat;
  meta.lon = lon;
  return meta;
}

void ForecastSet::validate() const {
  if (dates.empty()) throw ValidationError("forecast set: empty date list");
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i - 1] < dates[i]))
      throw ValidationError("forecast set: dates not strictly increasing at " + dates[i].to_string());
  }
  grid().validate();
  const std::size_t n = size() * pixels();
  if (predictions.size() != n)
    throw ValidationError("forecast set: predictions hold " + std::to_string(predictions.size()) +
                          " values, expected " + std::to_string(n));
  if (member_count < 0) throw ValidationError("forecast set: negative member count");
  const std::size_t nm = n * static_cast<std::size_t>(member_count);
  if (members.size() != nm)
    throw ValidationError("forecast set: members hold " + std::to_string(members.size()) +
                          " values, expected " + std::to_string(nm));
  if (!truths.empty() && truths.size() != n)
    throw ValidationError("forecast set: truths hold " + std::to_string(truths.size()) +
                          " values, expected " + std::to_string(n));
}

void ForecastSet::save(const std::filesystem::path& dir) const {
  validate();
  std::filesystem::create_directories(dir);

  const auto t = static_cast<std::uint32_t>(size());
  const auto h = static_cast<std::uint32_t>(height());
  const auto w = static_cast<std::uint32_t>(width());

  GtfTensor pred;
  pred.dims = {t, h, w};
  pred.values = predictions;
  write_gtf_file(dir / "predictions.gtf", pred);

  nlohmann::json j;
  nlohmann::json date_arr = nlohmann::json::array();
  for (const auto& d : dates) date_arr.push_back(d.to_string());
  j["dates"] = std::move(date_arr);
  j["lat"] = lat;
  j["lon"] = lon;
  j["predictions"] = "predictions.gtf";

  if (has_members()) {
    GtfTensor mem;
    mem.dims = {t, static_cast<std::uint32_t>(member_count), h, w};
    mem.values = members;
    write_gtf_file(dir / "members.gtf", mem);
    j["members"] = "members.gtf";
  }
  if (has_truths()) {
    GtfTensor tru;
    tru.dims = {t, h, w};
    tru.values = truths;
    write_gtf_file(dir / "truths.gtf", tru);
    j["truths"] = "truths.gtf";
  }

  std::ofstream out(dir / "forecastset.json");
  if (!out) throw IoError("cannot open " + (dir / "forecastset.json").string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + (dir / "forecastset.json").string());
}

ForecastSet ForecastSet::load(const std::filesystem::path& path) {
  std::filesystem::path index = path;
  if (std::filesystem::is_directory(index)) index /= "forecastset.json";
  std::ifstream in(index);
  if (!in) throw IoError("cannot open " + index.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("forecast set: bad JSON in " + index.string() + ": " + e.what());
  }

  const auto dir = index.parent_path();
  ForecastSet fs;
  try {
    for (const auto& s : j.at("dates")) fs.dates.push_back(Date::parse(s.get<std::string>()));
    fs.lat = j.at("lat").get<std::vector<double>>();
    fs.lon = j.at("lon").get<std::vector<double>>();

    const GtfTensor pred = read_gtf_file(dir / j.at("predictions").get<std::string>());
    if (pred.dims.size() != 3)
      throw ValidationError("forecast set: predictions must be rank 3");
    fs.predictions = pred.values;

    if (j.contains("members")) {
      const GtfTensor mem = read_gtf_file(dir / j.at("members").get<std::string>());
      if (mem.dims.size() != 4)
        throw ValidationError("forecast set: members must be rank 4");
      fs.member_count = static_cast<int>(mem.dims[1]);
      fs.members = mem.values;
    }
    if (j.contains("truths")) {
      const GtfTensor tru = read_gtf_file(dir / j.at("truths").get<std::string>());
      if (tru.dims.size() != 3)
        throw ValidationError("forecast set: truths must be rank 3");
      fs.truths = tru.values;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("forecast set: bad JSON in " + index.string() + ": " + e.what());
  }
  fs.validate();
  return fs;
}

}  // namespace raincast
