#include "raincast/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "raincast/errors.hpp"
#include "raincast/parallel.hpp"
#include "raincast/stats.hpp"

namespace raincast {

ScoreMap ScoreMap::zeros(int height, int width) {
  if (height <= 0 || width <= 0) throw ValidationError("score map: empty dimensions");
  ScoreMap m;
  m.height = height;
  m.width = width;
  m.values.assign(static_cast<std::size_t>(height) * width, 0.0);
  return m;
}

double ScoreMap::mean() const {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double ScoreMap::stdev() const {
  const double m = mean();
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

void ScoreMap::validate() const {
  if (height <= 0 || width <= 0) throw ValidationError("score map: empty dimensions");
  if (values.size() != static_cast<std::size_t>(height) * width)
    throw ValidationError("score map: value count mismatch");
  for (double v : values)
    if (!std::isfinite(v)) throw ValidationError("score map: non-finite entry");
}

void ScoreMap::save_csv(const std::filesystem::path& path) const {
  validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "row,col,value\n";
  char line[64];
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      std::snprintf(line, sizeof line, "%d,%d,%.17g\n", r, c, at(r, c));
      out << line;
    }
  if (!out) throw IoError("failed writing " + path.string());
}

ScoreMap ScoreMap::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("row,col,value", 0) != 0)
    throw FormatError("score map: missing row,col,value header in " + path.string());

  struct Cell {
    int r, c;
    double v;
  };
  std::vector<Cell> cells;
  int max_r = -1, max_c = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Cell cell;
    if (std::sscanf(line.c_str(), "%d,%d,%lf", &cell.r, &cell.c, &cell.v) != 3)
      throw FormatError("score map: bad line \"" + line + "\" in " + path.string());
    if (cell.r < 0 || cell.c < 0) throw FormatError("score map: negative pixel index");
    max_r = std::max(max_r, cell.r);
    max_c = std::max(max_c, cell.c);
    cells.push_back(cell);
  }
  if (cells.empty()) throw FormatError("score map: no data rows in " + path.string());
  ScoreMap m = ScoreMap::zeros(max_r + 1, max_c + 1);
  std::vector<char> seen(m.pixels(), 0);
  for (const Cell& cell : cells) {
    m.at(cell.r, cell.c) = cell.v;
    seen[static_cast<std::size_t>(cell.r) * m.width + cell.c] = 1;
  }
  for (char s : seen)
    if (!s) throw FormatError("score map: missing pixels in " + path.string());
  m.validate();
  return m;
}

namespace {

void require_truths(const ForecastSet& fc, const char* what) {
  fc.validate();
  if (!fc.has_truths()) throw ValidationError(std::string(what) + ": forecast set carries no truths");
  if (fc.size() == 0) throw ValidationError(std::string(what) + ": no dates");
}

}  // namespace

ScoreMap mae_map(const ForecastSet& fc) {
  require_truths(fc, "mae");
  ScoreMap m = ScoreMap::zeros(static_cast<int>(fc.height()), static_cast<int>(fc.width()));
  const std::size_t px = fc.pixels();
  for (std::size_t p = 0; p < px; ++p) {
    double sum = 0.0;
    for (std::size_t t = 0; t < fc.size(); ++t)
      sum += std::fabs(static_cast<double>(fc.prediction(t)[p]) - fc.truth(t)[p]);
    m.values[p] = sum / static_cast<double>(fc.size());
  }
  return m;
}

ScoreMap crps_map(std::size_t n_dates, int height, int width, const CdfAt& cdf_at,
                  const TruthAt& truth_at, int threads) {
  if (n_dates == 0) throw ValidationError("crps: no dates");
  ScoreMap m = ScoreMap::zeros(height, width);
  parallel_for(m.pixels(), threads, [&](std::size_t p) {
    const int r = static_cast<int>(p) / width;
    const int c = static_cast<int>(p) % width;
    double sum = 0.0;
    for (std::size_t t = 0; t < n_dates; ++t)
      sum += crps_discrete(cdf_at(t, r, c), truth_at(t, r, c));
    m.values[p] = sum / static_cast<double>(n_dates);
  });
  return m;
}

ScoreMap crps_map_point(const ForecastSet& fc, int threads) {
  require_truths(fc, "crps");
  const int w = static_cast<int>(fc.width());
  return crps_map(
      fc.size(), static_cast<int>(fc.height()), w,
      [&](std::size_t t, int r, int c) { return point_mass(fc.prediction(t)[r * w + c]); },
      [&](std::size_t t, int r, int c) { return static_cast<double>(fc.truth(t)[r * w + c]); },
      threads);
}

ScoreMap crps_map_members(const ForecastSet& fc, int threads) {
  require_truths(fc, "crps");
  if (!fc.has_members()) throw ValidationError("crps: forecast set carries no ensemble members");
  const int w = static_cast<int>(fc.width());
  return crps_map(
      fc.size(), static_cast<int>(fc.height()), w,
      [&](std::size_t t, int r, int c) {
        std::vector<double> xs(static_cast<std::size_t>(fc.member_count));
        for (int k = 0; k < fc.member_count; ++k) xs[static_cast<std::size_t>(k)] = fc.member(t, k)[r * w + c];
        return cdf_from_samples(xs);
      },
      [&](std::size_t t, int r, int c) { return static_cast<double>(fc.truth(t)[r * w + c]); },
      threads);
}

ScoreMap crps_map_idr(const IdrGrid& fit, const ForecastSet& fc, int threads) {
  require_truths(fc, "crps");
  fit.validate();
  if (fit.height != static_cast<int>(fc.height()) || fit.width != static_cast<int>(fc.width()))
    throw ValidationError("crps: idr grid and forecast set disagree on dimensions");
  const int w = fit.width;
  return crps_map(
      fc.size(), fit.height, w,
      [&](std::size_t t, int r, int c) {
        return idr_predict(fit.at(r, c), fc.prediction(t)[r * w + c]);
      },
      [&](std::size_t t, int r, int c) { return static_cast<double>(fc.truth(t)[r * w + c]); },
      threads);
}

ScoreMap crps_map_clim(const ClimatologyTable& table, const ForecastSet& truthset, int threads) {
  require_truths(truthset, "crps");
  if (table.grid().height != static_cast<int>(truthset.height()) ||
      table.grid().width != static_cast<int>(truthset.width()))
    throw ValidationError("crps: climatology and truth set disagree on dimensions");
  const int w = table.grid().width;
  return crps_map(
      truthset.size(), table.grid().height, w,
      [&](std::size_t t, int r, int c) { return table.clim_cdf(truthset.dates[t], r, c); },
      [&](std::size_t t, int r, int c) { return static_cast<double>(truthset.truth(t)[r * w + c]); },
      threads);
}

SkillResult skill_map(const ScoreMap& model, const ScoreMap& clim) {
  model.validate();
  clim.validate();
  if (model.height != clim.height || model.width != clim.width)
    throw ValidationError("skill: score maps disagree on dimensions");

  SkillResult result;
  result.skill = ScoreMap::zeros(model.height, model.width);
  result.ternary.assign(model.pixels(), 0);
  result.flagged.assign(model.pixels(), 0);
  for (std::size_t p = 0; p < model.pixels(); ++p) {
    const double denom = clim.values[p];
    if (denom < 0.0 || model.values[p] < 0.0)
      throw ValidationError("skill: negative CRPS entry");
    if (denom == 0.0) {
      result.flagged[p] = 1;
      ++result.flagged_count;
      continue;
    }
    const double s = (denom - model.values[p]) / denom;
    result.skill.values[p] = s;
    result.ternary[p] = s > 0.0 ? 1 : (s < 0.0 ? -1 : 0);
  }
  return result;
}

double f1_from_pr(double precision, double recall) {
  if (precision < 0.0 || precision > 1.0 || recall < 0.0 || recall > 1.0)
    throw ValidationError("f1: precision and recall must lie in [0, 1]");
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

Prf1Result prf1(const ForecastSet& fc, double tau) {
  require_truths(fc, "prf1");
  if (!(tau > 0.0)) throw ValidationError("prf1: tau must be positive");

  const int h = static_cast<int>(fc.height()), w = static_cast<int>(fc.width());
  Prf1Result out;
  out.precision = ScoreMap::zeros(h, w);
  out.recall = ScoreMap::zeros(h, w);
  out.f1 = ScoreMap::zeros(h, w);
  out.precision_defined.assign(fc.pixels(), 0);
  out.recall_defined.assign(fc.pixels(), 0);
  out.f1_defined.assign(fc.pixels(), 0);

  double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
  long long n_p = 0, n_r = 0, n_f = 0;
  for (std::size_t p = 0; p < fc.pixels(); ++p) {
    long long tp = 0, fp = 0, fn = 0;
    for (std::size_t t = 0; t < fc.size(); ++t) {
      const bool pred_event = std::fabs(static_cast<double>(fc.prediction(t)[p])) > tau;
      const bool true_event = std::fabs(static_cast<double>(fc.truth(t)[p])) > tau;
      tp += pred_event && true_event;
      fp += pred_event && !true_event;
      fn += !pred_event && true_event;
    }
    if (tp + fp > 0) {
      out.precision_defined[p] = 1;
      out.precision.values[p] = static_cast<double>(tp) / static_cast<double>(tp + fp);
      sum_p += out.precision.values[p];
      ++n_p;
    }
    if (tp + fn > 0) {
      out.recall_defined[p] = 1;
      out.recall.values[p] = static_cast<double>(tp) / static_cast<double>(tp + fn);
      sum_r += out.recall.values[p];
      ++n_r;
    }
    if (tp + fp > 0 && tp + fn > 0) {
      out.f1_defined[p] = 1;
      out.f1.values[p] = tp == 0 ? 0.0 : f1_from_pr(out.precision.values[p], out.recall.values[p]);
      sum_f += out.f1.values[p];
      ++n_f;
    }
  }
  const auto npx = static_cast<long long>(fc.pixels());
  out.excluded_precision = static_cast<int>(npx - n_p);
  out.excluded_recall = static_cast<int>(npx - n_r);
  out.excluded_f1 = static_cast<int>(npx - n_f);
  if (n_p > 0) out.avg_precision = sum_p / static_cast<double>(n_p);
  if (n_r > 0) out.avg_recall = sum_r / static_cast<double>(n_r);
  if (n_f > 0) out.avg_f1 = sum_f / static_cast<double>(n_f);
  return out;
}

long long BiasHistogram::total() const {
  long long t = 0;
  for (long long c : counts) t += c;
  return t;
}

std::array<double, 6> BiasHistogram::proportions() const {
  const long long t = total();
  if (t == 0) throw ValidationError("bias histogram: empty");
  std::array<double, 6> p{};
  for (int i = 0; i < 6; ++i) p[static_cast<std::size_t>(i)] = static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(t);
  return p;
}

int BiasHistogram::bin_of(double bias) {
  if (bias <= -1.0) return 0;
  if (bias <= -0.1) return 1;
  if (bias <= 0.0) return 2;
  if (bias <= 0.1) return 3;
  if (bias <= 1.0) return 4;
  return 5;
}

const char* BiasHistogram::bin_label(int bin) {
  static const char* kLabels[6] = {"(-inf,-1]", "(-1,-0.1]", "(-0.1,0]",
                                   "(0,0.1]",   "(0.1,1]",   "(1,inf)"};
  if (bin < 0 || bin >= 6) throw ValidationError("bias histogram: bad bin index");
  return kLabels[bin];
}

void BiasHistogram::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "bin,count,proportion\n";
  const auto props = proportions();
  char line[96];
  for (int i = 0; i < 6; ++i) {
    std::snprintf(line, sizeof line, "%s,%lld,%.17g\n", bin_label(i), counts[static_cast<std::size_t>(i)],
                  props[static_cast<std::size_t>(i)]);
    out << line;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

BiasHistogram BiasHistogram::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("bin,count", 0) != 0)
    throw FormatError("bias histogram: missing bin,count header in " + path.string());
  BiasHistogram h;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= 6) throw FormatError("bias histogram: more than six bins in " + path.string());
    // bin labels themselves contain commas, so split after the bracket that closes the label
    const auto bracket = line.find_first_of("])");
    const auto comma = bracket == std::string::npos ? std::string::npos : line.find(',', bracket);
    if (comma == std::string::npos)
      throw FormatError("bias histogram: bad line \"" + line + "\"");
    long long count = 0;
    if (std::sscanf(line.c_str() + comma + 1, "%lld", &count) != 1 || count < 0)
      throw FormatError("bias histogram: bad count in \"" + line + "\"");
    h.counts[static_cast<std::size_t>(row++)] = count;
  }
  if (row != 6) throw FormatError("bias histogram: expected six bins in " + path.string());
  return h;
}

BiasHistogram bias_histogram(const ForecastSet& fc) {
  require_truths(fc, "bias");
  BiasHistogram h;
  for (std::size_t t = 0; t < fc.size(); ++t)
    for (std::size_t p = 0; p < fc.pixels(); ++p) {
      const double bias = static_cast<double>(fc.prediction(t)[p]) - fc.truth(t)[p];
      ++h.counts[static_cast<std::size_t>(BiasHistogram::bin_of(bias))];
    }
  return h;
}

Chi2Result chi2_homogeneity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("chi2: histograms disagree on bin count");
  if (a.size() < 2) throw ValidationError("chi2: need at least two bins");
  Chi2Result result;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0.0 || b[i] < 0.0) throw ValidationError("chi2: negative count");
    const double denom = a[i] + b[i];
    if (denom <= 0.0)
      throw ValidationError("chi2: empty shared bin " + std::to_string(i));
    const double diff = a[i] - b[i];
    result.s += diff * diff / denom;
  }
  const double half_nu = static_cast<double>(a.size() - 1) / 2.0;
  result.p = gamma_q(half_nu, result.s / 2.0);
  result.log10_p = log_gamma_q(half_nu, result.s / 2.0) / std::log(10.0);
  return result;
}

Chi2Result chi2_homogeneity(const BiasHistogram& a, const BiasHistogram& b) {
  std::vector<double> va(a.counts.begin(), a.counts.end());
  std::vector<double> vb(b.counts.begin(), b.counts.end());
  return chi2_homogeneity(va, vb);
}

void write_pgm_heatmap(const ScoreMap& map, const std::filesystem::path& path) {
  map.validate();
  const double lo = *std::min_element(map.values.begin(), map.values.end());
  const double hi = *std::max_element(map.values.begin(), map.values.end());
  const double span = hi - lo;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << map.width << " " << map.height << "\n255\n";
  std::vector<unsigned char> bytes(map.pixels());
  for (std::size_t p = 0; p < map.pixels(); ++p)
    bytes[p] = span == 0.0
                   ? 0
                   : static_cast<unsigned char>(std::lround((map.values[p] - lo) / span * 255.0));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());

  nlohmann::json sidecar;
  sidecar["min"] = lo;
  sidecar["max"] = hi;
  sidecar["height"] = map.height;
  sidecar["width"] = map.width;
  std::ofstream side(path.string() + ".json");
  if (!side) throw IoError("cannot open " + path.string() + ".json for writing");
  side << sidecar.dump(2) << "\n";
}

}  // namespace raincast
