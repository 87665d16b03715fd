#include "raincast/easyuq.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "raincast/errors.hpp"
#include "raincast/parallel.hpp"
#include "raincast/tensor_file.hpp"

namespace raincast {

void IdrFit::validate() const {
  if (predictors.empty() || thresholds.empty()) throw ValidationError("idr: empty fit");
  if (cdf.size() != rows() * cols()) throw ValidationError("idr: cdf matrix size mismatch");
  for (std::size_t i = 1; i < rows(); ++i)
    if (!(predictors[i] > predictors[i - 1]))
      throw ValidationError("idr: predictors not strictly increasing");
  for (std::size_t j = 1; j < cols(); ++j)
    if (!(thresholds[j] > thresholds[j - 1]))
      throw ValidationError("idr: thresholds not strictly increasing");
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t j = 0; j < cols(); ++j) {
      const double v = at(i, j);
      if (v < -1e-12 || v > 1.0 + 1e-12) throw ValidationError("idr: cdf value outside [0, 1]");
      if (j > 0 && at(i, j) < at(i, j - 1) - 1e-12)
        throw ValidationError("idr: row not non-decreasing over thresholds");
      if (i > 0 && at(i, j) > at(i - 1, j) + 1e-12)
        throw ValidationError("idr: column increases with the predictor");
    }
    if (std::fabs(at(i, cols() - 1) - 1.0) > 1e-12)
      throw ValidationError("idr: row does not reach 1");
  }
}

std::vector<double> pava_antitonic(const std::vector<double>& values,
                                   const std::vector<double>& weights) {
  if (values.size() != weights.size()) throw ValidationError("pava: values/weights mismatch");
  struct Block {
    double sum, weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  blocks.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(weights[i] > 0.0)) throw ValidationError("pava: weights must be positive");
    blocks.push_back({values[i] * weights[i], weights[i], 1});
    // antitonic: block means must never increase left to right
    while (blocks.size() > 1) {
      const Block& prev = blocks[blocks.size() - 2];
      const Block& last = blocks.back();
      if (prev.sum * last.weight >= last.sum * prev.weight) break;  // prev mean >= last mean
      blocks[blocks.size() - 2] = {prev.sum + last.sum, prev.weight + last.weight,
                                   prev.count + last.count};
      blocks.pop_back();
    }
  }
  std::vector<double> fit;
  fit.reserve(values.size());
  for (const Block& b : blocks) {
    const double mean = b.sum / b.weight;
    for (std::size_t c = 0; c < b.count; ++c) fit.push_back(mean);
  }
  return fit;
}

IdrFit idr_fit(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) throw ValidationError("idr: no training pairs");
  for (const auto& [x, y] : pairs) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw ValidationError("idr: non-finite pair");
    if (y < 0.0) throw ValidationError("idr: negative observation");
  }

  std::vector<std::pair<double, double>> sorted = pairs;
  std::sort(sorted.begin(), sorted.end());

  IdrFit fit;
  std::vector<double> weights;                   // per merged predictor group
  std::vector<std::vector<double>> group_obs;    // observations per group
  for (const auto& [x, y] : sorted) {
    if (fit.predictors.empty() || x > fit.predictors.back()) {
      fit.predictors.push_back(x);
      weights.push_back(0.0);
      group_obs.emplace_back();
    }
    weights.back() += 1.0;
    group_obs.back().push_back(y);
  }

  std::vector<double> ys;
  ys.reserve(sorted.size());
  for (const auto& p : sorted) ys.push_back(p.second);
  std::sort(ys.begin(), ys.end());
  for (double y : ys)
    if (fit.thresholds.empty() || y > fit.thresholds.back()) fit.thresholds.push_back(y);

  const std::size_t n = fit.rows(), m = fit.cols();
  fit.cdf.assign(n * m, 0.0);
  std::vector<double> indicator(n);
  for (std::size_t j = 0; j < m; ++j) {
    const double u = fit.thresholds[j];
    for (std::size_t g = 0; g < n; ++g) {
      double hits = 0.0;
      for (double y : group_obs[g]) hits += y <= u ? 1.0 : 0.0;
      indicator[g] = hits / weights[g];
    }
    const std::vector<double> column = pava_antitonic(indicator, weights);
    for (std::size_t g = 0; g < n; ++g) fit.cdf[g * m + j] = column[g];
  }
  fit.validate();
  return fit;
}

DiscreteCDF idr_predict(const IdrFit& fit, double x) {
  fit.validate();
  if (!std::isfinite(x)) throw ValidationError("idr: non-finite predictor");

  const std::size_t m = fit.cols();
  std::vector<double> levels(m);
  const auto& xs = fit.predictors;
  if (x <= xs.front()) {
    for (std::size_t j = 0; j < m; ++j) levels[j] = fit.at(0, j);
  } else if (x >= xs.back()) {
    for (std::size_t j = 0; j < m; ++j) levels[j] = fit.at(fit.rows() - 1, j);
  } else {
    const std::size_t hi =
        static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin());
    if (xs[hi] == x) {
      for (std::size_t j = 0; j < m; ++j) levels[j] = fit.at(hi, j);
    } else {
      const std::size_t lo = hi - 1;
      const double lambda = (x - xs[lo]) / (xs[hi] - xs[lo]);
      for (std::size_t j = 0; j < m; ++j)
        levels[j] = (1.0 - lambda) * fit.at(lo, j) + lambda * fit.at(hi, j);
    }
  }
  // rows are non-decreasing and end at 1, so the convex mix is too
  levels[m - 1] = 1.0;
  return cdf_from_steps(fit.thresholds, levels);
}

double idr_in_sample_crps(const IdrFit& fit, const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) throw ValidationError("idr: no pairs to score");
  double total = 0.0;
  for (const auto& [x, y] : pairs) total += crps_discrete(idr_predict(fit, x), y);
  return total / static_cast<double>(pairs.size());
}

void IdrGrid::validate() const {
  if (height <= 0 || width <= 0) throw ValidationError("idr grid: empty dimensions");
  if (fits.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
    throw ValidationError("idr grid: pixel count mismatch");
  for (const auto& f : fits) f.validate();
}

IdrGrid idr_fit_grid(const ForecastSet& training, int threads) {
  training.validate();
  if (!training.has_truths()) throw ValidationError("idr grid: training set carries no truths");
  if (training.size() == 0) throw ValidationError("idr grid: no training dates");

  IdrGrid grid;
  grid.height = static_cast<int>(training.height());
  grid.width = static_cast<int>(training.width());
  grid.fits.resize(training.pixels());

  parallel_for(training.pixels(), threads, [&](std::size_t px) {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(training.size());
    for (std::size_t t = 0; t < training.size(); ++t)
      pairs.emplace_back(training.prediction(t)[px], training.truth(t)[px]);
    grid.fits[px] = idr_fit(pairs);
  });
  return grid;
}

void IdrGrid::save(const std::filesystem::path& path) const {
  validate();
  nlohmann::json header;
  header["format"] = "IDR1";
  header["height"] = height;
  header["width"] = width;
  const std::string header_bytes = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write("IDR1", 4);
  const std::uint32_t len = static_cast<std::uint32_t>(header_bytes.size());
  const unsigned char lenb[4] = {static_cast<unsigned char>(len),
                                 static_cast<unsigned char>(len >> 8),
                                 static_cast<unsigned char>(len >> 16),
                                 static_cast<unsigned char>(len >> 24)};
  out.write(reinterpret_cast<const char*>(lenb), 4);
  out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));

  auto write_vec = [&](const std::vector<double>& v, std::uint32_t d0, std::uint32_t d1) {
    GtfTensor t;
    t.dims = d1 == 0 ? std::vector<std::uint32_t>{d0} : std::vector<std::uint32_t>{d0, d1};
    t.values.reserve(v.size());
    for (double x : v) t.values.push_back(static_cast<float>(x));
    write_gtf(out, t);
  };
  for (const IdrFit& f : fits) {
    write_vec(f.predictors, static_cast<std::uint32_t>(f.rows()), 0);
    write_vec(f.thresholds, static_cast<std::uint32_t>(f.cols()), 0);
    write_vec(f.cdf, static_cast<std::uint32_t>(f.rows()), static_cast<std::uint32_t>(f.cols()));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

IdrGrid IdrGrid::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "IDR1")
    throw FormatError("idr grid: bad magic in " + path.string(), 0);
  unsigned char lenb[4];
  if (!in.read(reinterpret_cast<char*>(lenb), 4))
    throw FormatError("idr grid: truncated header length", 4);
  const std::uint32_t len = static_cast<std::uint32_t>(lenb[0]) |
                            (static_cast<std::uint32_t>(lenb[1]) << 8) |
                            (static_cast<std::uint32_t>(lenb[2]) << 16) |
                            (static_cast<std::uint32_t>(lenb[3]) << 24);
  std::string header_bytes(len, '\0');
  if (!in.read(header_bytes.data(), static_cast<std::streamsize>(len)))
    throw FormatError("idr grid: truncated header", 8);

  IdrGrid grid;
  try {
    const nlohmann::json header = nlohmann::json::parse(header_bytes);
    grid.height = header.at("height").get<int>();
    grid.width = header.at("width").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("idr grid: bad header: " + std::string(e.what()), 8);
  }
  if (grid.height <= 0 || grid.width <= 0) throw ValidationError("idr grid: empty dimensions");

  const std::size_t pixels = static_cast<std::size_t>(grid.height) * grid.width;
  grid.fits.resize(pixels);
  for (std::size_t px = 0; px < pixels; ++px) {
    const std::string where = path.string() + ":pixel" + std::to_string(px);
    const GtfTensor preds = read_gtf(in, where + ":predictors");
    const GtfTensor thrs = read_gtf(in, where + ":thresholds");
    const GtfTensor mat = read_gtf(in, where + ":cdf");
    if (preds.dims.size() != 1 || thrs.dims.size() != 1 || mat.dims.size() != 2 ||
        mat.dims[0] != preds.dims[0] || mat.dims[1] != thrs.dims[0])
      throw FormatError("idr grid: inconsistent tensor dims at " + where);
    IdrFit& f = grid.fits[px];
    f.predictors.assign(preds.values.begin(), preds.values.end());
    f.thresholds.assign(thrs.values.begin(), thrs.values.end());
    f.cdf.assign(mat.values.begin(), mat.values.end());
    f.validate();
  }
  return grid;
}

}  // namespace raincast
