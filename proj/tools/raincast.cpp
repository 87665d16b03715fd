// raincast: command-line surface over the forecasting and verification core.
// Every subcommand is deterministic given (inputs, seed, --threads 1) and
// writes a reproducibility record next to its output.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "raincast/climatology.hpp"
#include "raincast/dataset.hpp"
#include "raincast/easyuq.hpp"
#include "raincast/errors.hpp"
#include "raincast/features.hpp"
#include "raincast/forecast_set.hpp"
#include "raincast/hybrid.hpp"
#include "raincast/importance.hpp"
#include "raincast/manifest.hpp"
#include "raincast/scoring.hpp"
#include "raincast/synth.hpp"
#include "raincast/tensor_file.hpp"
#include "raincast/unet.hpp"

namespace fs = std::filesystem;
using namespace raincast;
using nlohmann::json;

namespace {

#ifndef RAINCAST_VERSION
#define RAINCAST_VERSION "0.0.0"
#endif

// Relative paths resolve under $RAINCAST_DATA_DIR when it is set.
fs::path resolve_path(const std::string& p) {
  fs::path path(p);
  if (path.is_absolute() || path.empty()) return path;
  if (const char* base = std::getenv("RAINCAST_DATA_DIR"); base && *base)
    return fs::path(base) / path;
  return path;
}

// Record lands in <dir>/run_record.json for directory outputs and next to
// the file (<name>.run.json) otherwise.
void write_run_record(const fs::path& target, bool target_is_dir, const std::string& subcommand,
                      const json& options) {
  json j;
  j["tool"] = "raincast";
  j["version"] = RAINCAST_VERSION;
  j["subcommand"] = subcommand;
  j["options"] = options;
  fs::path record;
  if (target_is_dir) {
    fs::create_directories(target);
    record = target / "run_record.json";
  } else {
    record = fs::path(target.string() + ".run.json");
  }
  std::ofstream out(record);
  if (!out) throw IoError("cannot open " + record.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + record.string());
}

Tensor tensor_from_gtf(const GtfTensor& t) {
  std::vector<int> shape;
  for (std::uint32_t d : t.dims) shape.push_back(static_cast<int>(d));
  std::vector<double> values(t.values.begin(), t.values.end());
  return Tensor(std::move(shape), std::move(values));
}

struct SplitCounts {
  std::size_t n_train = 0, n_val = 0, n_test = 0;
};

SplitCounts auto_split(std::size_t total) {
  SplitCounts c;
  c.n_train = total * 70 / 100;
  c.n_val = total * 15 / 100;
  c.n_test = total - c.n_train - c.n_val;
  return c;
}

void save_split_json(const fs::path& path, const SplitCounts& c) {
  json j;
  j["n_train"] = c.n_train;
  j["n_val"] = c.n_val;
  j["n_test"] = c.n_test;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
}

SplitCounts load_split_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  SplitCounts c;
  try {
    json j;
    in >> j;
    c.n_train = j.at("n_train").get<std::size_t>();
    c.n_val = j.at("n_val").get<std::size_t>();
    c.n_test = j.at("n_test").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError("split record " + path.string() + ": " + e.what());
  }
  return c;
}

// Loads the named chronological split of (inputs, targets) as a Dataset.
// split "all" skips the split step entirely.
Dataset load_named_split(const fs::path& inputs, const fs::path& targets, const fs::path& model_dir,
                         const std::string& split) {
  const DatasetManifest in_m = DatasetManifest::load(inputs);
  const DatasetManifest tg_m = DatasetManifest::load(targets);
  if (split == "all") return load_dataset(in_m, tg_m);

  const SplitCounts c = load_split_json(model_dir / "split.json");
  const SplitSpec spec{c.n_train, c.n_val, c.n_test};
  const DatasetSplits in_s = split_dataset(in_m, spec);
  const DatasetSplits tg_s = split_dataset(tg_m, spec);
  if (split == "train") return load_dataset(in_s.train, tg_s.train);
  if (split == "val") return load_dataset(in_s.val, tg_s.val);
  if (split == "test") return load_dataset(in_s.test, tg_s.test);
  throw ValidationError("unknown split \"" + split + "\" (expected train, val, test, or all)");
}

// predict/importance share the model-loading preamble
struct LoadedModel {
  Checkpoint ck;
  Dataset split;
};

LoadedModel load_model_and_split(const fs::path& inputs, const fs::path& targets,
                                 const fs::path& model_dir, const std::string& split) {
  LoadedModel lm;
  lm.split = load_named_split(inputs, targets, model_dir, split);
  const Normalizer norm = Normalizer::load(model_dir / "normalizer.json");
  apply_normalizer(lm.split, norm);
  lm.ck = load_checkpoint(model_dir / "model.unc");
  const int k = static_cast<int>(lm.split.channel_names.size());
  if (lm.ck.model.config.in_channels != k)
    throw ValidationError("model expects " + std::to_string(lm.ck.model.config.in_channels) +
                          " channels, dataset has " + std::to_string(k));
  return lm;
}

ScoreMap ternary_as_map(const SkillResult& r) {
  ScoreMap m = ScoreMap::zeros(r.skill.height, r.skill.width);
  for (std::size_t i = 0; i < r.ternary.size(); ++i)
    m.values[i] = static_cast<double>(r.ternary[i]);
  return m;
}

// ---- subcommand options ---------------------------------------------------

struct SynthOpts {
  std::string out;
  std::uint64_t seed = 0;
  int t = 40, k = 4, height = 16, width = 16, members = 0, lead = 12;
  std::string start_date = "2000-01-01";
};

struct FeaturesOpts {
  std::string inputs, out;
};

struct TrainOpts {
  std::string inputs, targets, out;
  std::size_t n_train = 0, n_val = 0, n_test = 0;
  int base_width = 8, depth = 3, batch = 256, epochs = 100, patience = 100, threads = 1;
  double lr = 1e-4, weight_decay = 1e-4, factor = 0.1;
  std::uint64_t seed = 0;
};

struct PredictOpts {
  std::string inputs, targets, model, out, split = "test";
  int threads = 1;
};

struct ClimOpts {
  std::string history, dates, out;
};

struct UqFitOpts {
  std::string forecasts, out;
  int threads = 1;
};

struct UqPredictOpts {
  std::string fit, forecasts, out;
  int row = 0, col = 0;
  double value = 0.0;
  bool has_value = false;
};

struct HybridFitOpts {
  std::string unet, nwp, out, split_name = "held-out";
};

struct HybridApplyOpts {
  std::string unet, nwp, beta, out;
};

struct ScoreCommonOpts {
  std::string forecasts, out_csv, heatmap;
  int threads = 1;
};

struct ScoreCrpsOpts : ScoreCommonOpts {
  std::string method = "point", fit, history;
};

struct ScoreSkillOpts {
  std::string model_csv, clim_csv, out_csv, ternary_csv, heatmap;
};

struct ScorePrf1Opts : ScoreCommonOpts {
  double tau = 0.5;
  std::string precision_csv, recall_csv;
};

struct ScoreChi2Opts {
  std::string a, b, out;
};

struct ImportanceCommonOpts {
  std::string inputs, targets, model, split = "test";
  int threads = 1;
};

struct GibbsOpts : ImportanceCommonOpts {
  std::string out;
  double r = 3.76, sigma2 = 0.01;
  int epochs = 1000, burn_in = 950, top = 30;
  std::uint64_t seed = 0;
  bool random_scan = false;
};

struct SensitivityOpts : ImportanceCommonOpts {
  std::string out;
};

struct HeatmapOpts {
  std::string map_csv, out;
};

// ---- subcommand bodies ----------------------------------------------------

void run_synth(const SynthOpts& o) {
  SynthConfig cfg;
  cfg.seed = o.seed;
  cfg.t = o.t;
  cfg.k = o.k;
  cfg.height = o.height;
  cfg.width = o.width;
  cfg.nwp_members = o.members;
  cfg.lead_time_hours = o.lead;
  cfg.start_date = Date::parse(o.start_date);
  const fs::path out = resolve_path(o.out);
  const SynthResult res = synth_generate(cfg, out);
  write_run_record(out, true, "synth",
                   {{"out", out.string()},
                    {"seed", o.seed},
                    {"t", o.t},
                    {"k", o.k},
                    {"height", o.height},
                    {"width", o.width},
                    {"members", o.members},
                    {"lead", o.lead},
                    {"start_date", o.start_date}});
  std::cout << "inputs:  " << res.inputs_manifest.string() << "\n"
            << "targets: " << res.targets_manifest.string() << "\n";
  if (!res.nwp_dir.empty()) std::cout << "nwp:     " << res.nwp_dir.string() << "\n";
}

void run_features(const FeaturesOpts& o) {
  const fs::path inputs = resolve_path(o.inputs);
  const fs::path out = resolve_path(o.out);
  const DatasetManifest m = DatasetManifest::load(inputs);
  const DatasetManifest aug = augment_with_seasonal(m, out);
  write_run_record(out, true, "features", {{"inputs", inputs.string()}, {"out", out.string()}});
  std::cout << "augmented manifest: " << (out / "manifest.json").string() << " ("
            << aug.variables.size() << " channels)\n";
}

void run_train(const TrainOpts& o) {
  const fs::path inputs = resolve_path(o.inputs);
  const fs::path targets = resolve_path(o.targets);
  const fs::path out = resolve_path(o.out);

  const DatasetManifest in_m = DatasetManifest::load(inputs);
  const DatasetManifest tg_m = DatasetManifest::load(targets);
  SplitCounts c{o.n_train, o.n_val, o.n_test};
  if (c.n_train + c.n_val + c.n_test == 0) c = auto_split(in_m.size());
  const SplitSpec spec{c.n_train, c.n_val, c.n_test};
  const DatasetSplits in_s = split_dataset(in_m, spec);
  const DatasetSplits tg_s = split_dataset(tg_m, spec);

  Dataset train = load_dataset(in_s.train, tg_s.train);
  Dataset val = load_dataset(in_s.val, tg_s.val);
  const Normalizer norm = fit_normalizer(train);
  apply_normalizer(train, norm);
  apply_normalizer(val, norm);

  UNetConfig uc;
  uc.in_channels = static_cast<int>(train.channel_names.size());
  uc.base_width = o.base_width;
  uc.depth = o.depth;
  UNetModel model = build_unet(uc, o.seed);

  TrainConfig tc;
  tc.lr = o.lr;
  tc.weight_decay = o.weight_decay;
  tc.batch_size = o.batch;
  tc.max_epochs = o.epochs;
  tc.patience = o.patience;
  tc.factor = o.factor;
  tc.seed = o.seed;
  tc.threads = o.threads;
  const TrainResult r = train_unet(model, train, val, tc);

  fs::create_directories(out);
  save_checkpoint(model, out / "model.unc", r.best_epoch, r.best_val_loss);
  norm.save(out / "normalizer.json");
  save_split_json(out / "split.json", c);
  {
    std::ofstream hist(out / "history.csv");
    if (!hist) throw IoError("cannot open " + (out / "history.csv").string() + " for writing");
    hist << "epoch,train_loss,val_loss\n";
    char line[96];
    for (std::size_t e = 0; e < r.train_loss.size(); ++e) {
      std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", e, r.train_loss[e], r.val_loss[e]);
      hist << line;
    }
  }
  write_run_record(out, true, "train",
                   {{"inputs", inputs.string()},
                    {"targets", targets.string()},
                    {"out", out.string()},
                    {"n_train", c.n_train},
                    {"n_val", c.n_val},
                    {"n_test", c.n_test},
                    {"base_width", o.base_width},
                    {"depth", o.depth},
                    {"lr", o.lr},
                    {"weight_decay", o.weight_decay},
                    {"batch", o.batch},
                    {"epochs", o.epochs},
                    {"patience", o.patience},
                    {"factor", o.factor},
                    {"seed", o.seed},
                    {"threads", o.threads}});
  std::printf("trained %d epochs; best epoch %d, val loss %.6g\n",
              static_cast<int>(r.train_loss.size()), r.best_epoch, r.best_val_loss);
}

void run_predict(const PredictOpts& o) {
  const fs::path model_dir = resolve_path(o.model);
  const fs::path out = resolve_path(o.out);
  const LoadedModel lm = load_model_and_split(resolve_path(o.inputs), resolve_path(o.targets),
                                              model_dir, o.split);
  const std::vector<Tensor> preds = lm.ck.model.predict_batch(lm.split.inputs, o.threads);

  ForecastSet fc;
  fc.dates = lm.split.dates;
  fc.lat = lm.split.grid.lat;
  fc.lon = lm.split.grid.lon;
  for (const Tensor& p : preds)
    for (double v : p.values) fc.predictions.push_back(static_cast<float>(v));
  for (const Tensor& t : lm.split.targets)
    for (double v : t.values) fc.truths.push_back(static_cast<float>(v));
  fc.validate();
  fc.save(out);
  write_run_record(out, true, "predict",
                   {{"inputs", resolve_path(o.inputs).string()},
                    {"targets", resolve_path(o.targets).string()},
                    {"model", model_dir.string()},
                    {"split", o.split},
                    {"threads", o.threads},
                    {"out", out.string()}});
  std::cout << "wrote " << fc.size() << " forecasts to " << out.string() << "\n";
}

void run_clim(const ClimOpts& o) {
  const fs::path history = resolve_path(o.history);
  const fs::path out = resolve_path(o.out);
  const DatasetManifest hist_m = DatasetManifest::load(history);
  std::vector<Tensor> images;
  images.reserve(hist_m.size());
  for (const Date& d : hist_m.dates) images.push_back(tensor_from_gtf(read_gtf_file(hist_m.resolve(d))));
  const ClimatologyTable table(hist_m.dates, images, hist_m.grid());

  const DatasetManifest dates_m = o.dates.empty() ? hist_m : DatasetManifest::load(resolve_path(o.dates));
  ForecastSet fc;
  fc.lat = dates_m.lat;
  fc.lon = dates_m.lon;
  std::size_t skipped = 0;
  for (const Date& d : dates_m.dates) {
    if (table.window(d).empty()) {
      ++skipped;  // nothing from prior years within the window
      continue;
    }
    fc.dates.push_back(d);
    const Tensor mean = table.mean_map(d);
    for (double v : mean.values) fc.predictions.push_back(static_cast<float>(v));
    const Tensor truth = tensor_from_gtf(read_gtf_file(dates_m.resolve(d)));
    for (double v : truth.values) fc.truths.push_back(static_cast<float>(v));
  }
  if (fc.dates.empty())
    throw ValidationError("clim: no date has prior-year history; extend the history manifest");
  fc.validate();
  fc.save(out);
  write_run_record(out, true, "clim",
                   {{"history", history.string()},
                    {"dates", o.dates.empty() ? history.string() : resolve_path(o.dates).string()},
                    {"out", out.string()},
                    {"skipped_dates", skipped}});
  std::cout << "wrote " << fc.size() << " climatology forecasts (" << skipped
            << " dates skipped for missing history)\n";
}

void run_uq_fit(const UqFitOpts& o) {
  const fs::path out = resolve_path(o.out);
  const ForecastSet fc = ForecastSet::load(resolve_path(o.forecasts));
  const IdrGrid grid = idr_fit_grid(fc, o.threads);
  grid.save(out);
  write_run_record(out, false, "uq-fit",
                   {{"forecasts", resolve_path(o.forecasts).string()},
                    {"out", out.string()},
                    {"threads", o.threads}});
  std::cout << "fitted " << grid.fits.size() << " pixel CDF families to " << out.string() << "\n";
}

void run_uq_predict(const UqPredictOpts& o) {
  const fs::path out = resolve_path(o.out);
  const IdrGrid grid = IdrGrid::load(resolve_path(o.fit));
  if (o.row < 0 || o.row >= grid.height || o.col < 0 || o.col >= grid.width)
    throw ValidationError("uq-predict: pixel (" + std::to_string(o.row) + "," +
                          std::to_string(o.col) + ") outside " + std::to_string(grid.height) +
                          "x" + std::to_string(grid.width));
  const IdrFit& fit = grid.at(o.row, o.col);

  std::ofstream csv(out);
  if (!csv) throw IoError("cannot open " + out.string() + " for writing");
  char line[128];
  if (o.has_value) {
    const DiscreteCDF cdf = idr_predict(fit, o.value);
    csv << "atom,level\n";
    for (std::size_t i = 0; i < cdf.atoms.size(); ++i) {
      std::snprintf(line, sizeof line, "%.17g,%.17g\n", cdf.atoms[i], cdf.cum[i]);
      csv << line;
    }
  } else {
    if (o.forecasts.empty())
      throw ValidationError("uq-predict: need --value or --forecasts");
    const ForecastSet fc = ForecastSet::load(resolve_path(o.forecasts));
    if (o.row >= static_cast<int>(fc.height()) || o.col >= static_cast<int>(fc.width()))
      throw ValidationError("uq-predict: pixel outside the forecast grid");
    csv << "date,atom,level\n";
    for (std::size_t t = 0; t < fc.size(); ++t) {
      const double x = fc.prediction(t)[static_cast<std::size_t>(o.row) * fc.width() + o.col];
      const DiscreteCDF cdf = idr_predict(fit, x);
      for (std::size_t i = 0; i < cdf.atoms.size(); ++i) {
        std::snprintf(line, sizeof line, "%s,%.17g,%.17g\n", fc.dates[t].to_string().c_str(),
                      cdf.atoms[i], cdf.cum[i]);
        csv << line;
      }
    }
  }
  if (!csv) throw IoError("failed writing " + out.string());
  write_run_record(out, false, "uq-predict",
                   {{"fit", resolve_path(o.fit).string()},
                    {"row", o.row},
                    {"col", o.col},
                    {"value", o.has_value ? json(o.value) : json()},
                    {"forecasts", o.forecasts.empty() ? json() : json(resolve_path(o.forecasts).string())},
                    {"out", out.string()}});
  std::cout << "wrote " << out.string() << "\n";
}

void run_hybrid_fit(const HybridFitOpts& o) {
  const fs::path out = resolve_path(o.out);
  const ForecastSet unet = ForecastSet::load(resolve_path(o.unet));
  const ForecastSet nwp = ForecastSet::load(resolve_path(o.nwp));
  const BlendWeight w = fit_beta(unet, nwp, o.split_name);
  w.save_json(out);
  write_run_record(out, false, "hybrid-fit",
                   {{"unet", resolve_path(o.unet).string()},
                    {"nwp", resolve_path(o.nwp).string()},
                    {"out", out.string()},
                    {"split_name", o.split_name}});
  std::printf("beta=%.6f (n=%zu, fit on %s)\n", w.beta, w.n, w.fit_split.c_str());
}

void run_hybrid_apply(const HybridApplyOpts& o) {
  const fs::path out = resolve_path(o.out);
  const ForecastSet unet = ForecastSet::load(resolve_path(o.unet));
  const ForecastSet nwp = ForecastSet::load(resolve_path(o.nwp));
  const BlendWeight w = BlendWeight::load_json(resolve_path(o.beta));
  BlendStats stats;
  const ForecastSet hyb = blend_sets(unet, nwp, w.beta, &stats);
  hyb.save(out);
  write_run_record(out, true, "hybrid-apply",
                   {{"unet", resolve_path(o.unet).string()},
                    {"nwp", resolve_path(o.nwp).string()},
                    {"beta", w.beta},
                    {"out", out.string()},
                    {"floored_predictions", stats.floored_predictions},
                    {"floored_members", stats.floored_members}});
  std::printf("blended %zu forecasts with beta=%.6f (%zu predictions floored)\n", hyb.size(),
              w.beta, stats.floored_predictions);
}

void finish_score_map(const ScoreMap& map, const fs::path& out_csv, const std::string& heatmap,
                      const char* name) {
  map.save_csv(out_csv);
  if (!heatmap.empty()) write_pgm_heatmap(map, resolve_path(heatmap));
  std::printf("%s: mean=%.6g stdev=%.6g -> %s\n", name, map.mean(), map.stdev(),
              out_csv.string().c_str());
}

void run_score_mae(const ScoreCommonOpts& o) {
  const fs::path out = resolve_path(o.out_csv);
  const ForecastSet fc = ForecastSet::load(resolve_path(o.forecasts));
  const ScoreMap map = mae_map(fc);
  finish_score_map(map, out, o.heatmap, "mae");
  write_run_record(out, false, "score-mae",
                   {{"forecasts", resolve_path(o.forecasts).string()}, {"out_csv", out.string()}});
}

void run_score_crps(const ScoreCrpsOpts& o) {
  const fs::path out = resolve_path(o.out_csv);
  const ForecastSet fc = ForecastSet::load(resolve_path(o.forecasts));
  ScoreMap map;
  if (o.method == "point") {
    map = crps_map_point(fc, o.threads);
  } else if (o.method == "members") {
    map = crps_map_members(fc, o.threads);
  } else if (o.method == "idr") {
    if (o.fit.empty()) throw ValidationError("score crps --method idr needs --fit");
    map = crps_map_idr(IdrGrid::load(resolve_path(o.fit)), fc, o.threads);
  } else if (o.method == "clim") {
    if (o.history.empty()) throw ValidationError("score crps --method clim needs --history");
    const DatasetManifest hist_m = DatasetManifest::load(resolve_path(o.history));
    std::vector<Tensor> images;
    for (const Date& d : hist_m.dates)
      images.push_back(tensor_from_gtf(read_gtf_file(hist_m.resolve(d))));
    const ClimatologyTable table(hist_m.dates, images, hist_m.grid());
    map = crps_map_clim(table, fc, o.threads);
  } else {
    throw ValidationError("unknown crps method \"" + o.method +
                          "\" (expected point, members, idr, or clim)");
  }
  finish_score_map(map, out, o.heatmap, "crps");
  write_run_record(out, false, "score-crps",
                   {{"forecasts", resolve_path(o.forecasts).string()},
                    {"method", o.method},
                    {"fit", o.fit},
                    {"history", o.history},
                    {"threads", o.threads},
                    {"out_csv", out.string()}});
}

void run_score_skill(const ScoreSkillOpts& o) {
  const fs::path out = resolve_path(o.out_csv);
  const ScoreMap model = ScoreMap::load_csv(resolve_path(o.model_csv));
  const ScoreMap clim = ScoreMap::load_csv(resolve_path(o.clim_csv));
  const SkillResult r = skill_map(model, clim);
  r.skill.save_csv(out);
  if (!o.ternary_csv.empty()) ternary_as_map(r).save_csv(resolve_path(o.ternary_csv));
  if (!o.heatmap.empty()) write_pgm_heatmap(r.skill, resolve_path(o.heatmap));
  std::printf("skill: mean=%.6g flagged=%d -> %s\n", r.skill.mean(), r.flagged_count,
              out.string().c_str());
  write_run_record(out, false, "score-skill",
                   {{"model_csv", resolve_path(o.model_csv).string()},
                    {"clim_csv", resolve_path(o.clim_csv).string()},
                    {"out_csv", out.string()},
                    {"ternary_csv", o.ternary_csv}});
}

void run_score_prf1(const ScorePrf1Opts& o) {
  const fs::path out = resolve_path(o.out_csv);
  const ForecastSet fc = ForecastSet::load(resolve_path(o.forecasts));
  const Prf1Result r = prf1(fc, o.tau);
  r.f1.save_csv(out);
  if (!o.precision_csv.empty()) r.precision.save_csv(resolve_path(o.precision_csv));
  if (!o.recall_csv.empty()) r.recall.save_csv(resolve_path(o.recall_csv));
  if (!o.heatmap.empty()) write_pgm_heatmap(r.f1, resolve_path(o.heatmap));
  std::printf(
      "tau=%g precision=%.4f recall=%.4f f1=%.4f (excluded: %d/%d/%d pixels) -> %s\n", o.tau,
      r.avg_precision, r.avg_recall, r.avg_f1, r.excluded_precision, r.excluded_recall,
      r.excluded_f1, out.string().c_str());
  write_run_record(out, false, "score-prf1",
                   {{"forecasts", resolve_path(o.forecasts).string()},
                    {"tau", o.tau},
                    {"out_csv", out.string()}});
}

void run_score_bias(const ScoreCommonOpts& o) {
  const fs::path out = resolve_path(o.out_csv);
  const ForecastSet fc = ForecastSet::load(resolve_path(o.forecasts));
  const BiasHistogram h = bias_histogram(fc);
  h.save_csv(out);
  std::printf("bias histogram over %lld values -> %s\n", h.total(), out.string().c_str());
  write_run_record(out, false, "score-bias",
                   {{"forecasts", resolve_path(o.forecasts).string()}, {"out_csv", out.string()}});
}

void run_score_chi2(const ScoreChi2Opts& o) {
  const fs::path out = resolve_path(o.out);
  const BiasHistogram a = BiasHistogram::load_csv(resolve_path(o.a));
  const BiasHistogram b = BiasHistogram::load_csv(resolve_path(o.b));
  const Chi2Result r = chi2_homogeneity(a, b);
  json j;
  j["s"] = r.s;
  j["p"] = r.p;
  j["log10_p"] = r.log10_p;
  std::ofstream os(out);
  if (!os) throw IoError("cannot open " + out.string() + " for writing");
  os << j.dump(2) << "\n";
  std::printf("S=%.2f p=%.6g log10_p=%.4f\n", r.s, r.p, r.log10_p);
  write_run_record(out, false, "score-chi2",
                   {{"a", resolve_path(o.a).string()},
                    {"b", resolve_path(o.b).string()},
                    {"out", out.string()}});
}

void run_importance_gibbs(const GibbsOpts& o) {
  const fs::path out = resolve_path(o.out);
  const LoadedModel lm = load_model_and_split(resolve_path(o.inputs), resolve_path(o.targets),
                                              resolve_path(o.model), o.split);
  GibbsConfig cfg;
  cfg.r = o.r;
  cfg.sigma2 = o.sigma2;
  cfg.epochs = o.epochs;
  cfg.burn_in = o.burn_in;
  cfg.seed = o.seed;
  cfg.random_scan = o.random_scan;
  const ImportanceChain chain = gibbs_run(lm.ck.model, lm.split, cfg, o.threads);

  fs::create_directories(out);
  chain.save_chain_csv(out / "chain.csv");
  chain.save_means_json(out / "means.json", lm.split.channel_names);
  chain.save_top_csv(out / "top.csv", o.top, lm.split.channel_names);
  write_run_record(out, true, "importance-gibbs",
                   {{"inputs", resolve_path(o.inputs).string()},
                    {"targets", resolve_path(o.targets).string()},
                    {"model", resolve_path(o.model).string()},
                    {"split", o.split},
                    {"r", o.r},
                    {"sigma2", o.sigma2},
                    {"epochs", o.epochs},
                    {"burn_in", o.burn_in},
                    {"seed", o.seed},
                    {"random_scan", o.random_scan},
                    {"top", o.top},
                    {"threads", o.threads},
                    {"out", out.string()}});
  const std::vector<int> order = chain.ranking();
  const std::size_t show = std::min<std::size_t>(5, order.size());
  std::cout << "top channels:";
  for (std::size_t i = 0; i < show; ++i) {
    const std::size_t c = static_cast<std::size_t>(order[i]);
    std::printf(" %s=%.3f", lm.split.channel_names[c].c_str(), chain.posterior_means[c]);
  }
  std::cout << "\n";
}

void run_importance_sensitivity(const SensitivityOpts& o) {
  const fs::path out = resolve_path(o.out);
  const LoadedModel lm = load_model_and_split(resolve_path(o.inputs), resolve_path(o.targets),
                                              resolve_path(o.model), o.split);
  const std::vector<double> scores = sensitivity(lm.ck.model, lm.split, o.threads);
  std::ofstream csv(out);
  if (!csv) throw IoError("cannot open " + out.string() + " for writing");
  csv << "channel,score\n";
  char line[128];
  for (std::size_t c = 0; c < scores.size(); ++c) {
    std::snprintf(line, sizeof line, "%s,%.17g\n", lm.split.channel_names[c].c_str(), scores[c]);
    csv << line;
  }
  if (!csv) throw IoError("failed writing " + out.string());
  write_run_record(out, false, "importance-sensitivity",
                   {{"inputs", resolve_path(o.inputs).string()},
                    {"targets", resolve_path(o.targets).string()},
                    {"model", resolve_path(o.model).string()},
                    {"split", o.split},
                    {"threads", o.threads},
                    {"out", out.string()}});
  std::cout << "wrote " << scores.size() << " channel scores to " << out.string() << "\n";
}

void run_heatmap(const HeatmapOpts& o) {
  const fs::path out = resolve_path(o.out);
  const ScoreMap map = ScoreMap::load_csv(resolve_path(o.map_csv));
  write_pgm_heatmap(map, out);
  write_run_record(out, false, "heatmap",
                   {{"map_csv", resolve_path(o.map_csv).string()}, {"out", out.string()}});
  std::cout << "wrote " << out.string() << " and " << out.string() << ".json\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rainfall forecasting and verification toolkit"};
  app.set_version_flag("--version", RAINCAST_VERSION);
  app.require_subcommand(1);
  std::function<void()> action;

  SynthOpts synth_o;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", synth_o.out, "output directory")->required();
  synth->add_option("--seed", synth_o.seed, "generator seed");
  synth->add_option("--t", synth_o.t, "number of dates");
  synth->add_option("--k", synth_o.k, "raw predictor channels (>= 2)");
  synth->add_option("--height", synth_o.height, "grid rows");
  synth->add_option("--width", synth_o.width, "grid columns");
  synth->add_option("--members", synth_o.members, "NWP ensemble members (0 = none)");
  synth->add_option("--lead", synth_o.lead, "lead time in hours");
  synth->add_option("--start-date", synth_o.start_date, "first date (YYYY-MM-DD)");
  synth->callback([&] { action = [&] { run_synth(synth_o); }; });

  FeaturesOpts features_o;
  auto* features = app.add_subcommand("features", "append cos/sin seasonal channels");
  features->add_option("--inputs", features_o.inputs, "inputs manifest")->required();
  features->add_option("--out", features_o.out, "output directory")->required();
  features->callback([&] { action = [&] { run_features(features_o); }; });

  TrainOpts train_o;
  auto* train = app.add_subcommand("train", "train the U-Net on a chronological split");
  train->add_option("--inputs", train_o.inputs, "inputs manifest")->required();
  train->add_option("--targets", train_o.targets, "targets manifest")->required();
  train->add_option("--out", train_o.out, "model output directory")->required();
  train->add_option("--train", train_o.n_train, "training dates (0 0 0 = 70/15/15)");
  train->add_option("--val", train_o.n_val, "validation dates");
  train->add_option("--test", train_o.n_test, "test dates");
  train->add_option("--base-width", train_o.base_width, "feature maps at the first level");
  train->add_option("--depth", train_o.depth, "downsampling blocks");
  train->add_option("--lr", train_o.lr, "Adam learning rate");
  train->add_option("--weight-decay", train_o.weight_decay, "L2 weight decay");
  train->add_option("--batch", train_o.batch, "mini-batch size");
  train->add_option("--epochs", train_o.epochs, "training epochs");
  train->add_option("--patience", train_o.patience, "plateau patience (epochs)");
  train->add_option("--factor", train_o.factor, "plateau lr factor");
  train->add_option("--seed", train_o.seed, "init and shuffle seed");
  train->add_option("--threads", train_o.threads, "validation threads");
  train->callback([&] { action = [&] { run_train(train_o); }; });

  PredictOpts predict_o;
  auto* predict = app.add_subcommand("predict", "run a trained model over a split");
  predict->add_option("--inputs", predict_o.inputs, "inputs manifest")->required();
  predict->add_option("--targets", predict_o.targets, "targets manifest")->required();
  predict->add_option("--model", predict_o.model, "model directory from train")->required();
  predict->add_option("--out", predict_o.out, "forecast-set output directory")->required();
  predict->add_option("--split", predict_o.split, "train|val|test|all");
  predict->add_option("--threads", predict_o.threads, "inference threads");
  predict->callback([&] { action = [&] { run_predict(predict_o); }; });

  ClimOpts clim_o;
  auto* clim = app.add_subcommand("clim", "per-pixel +-2-day prior-year climatology");
  clim->add_option("--history", clim_o.history, "historical targets manifest")->required();
  clim->add_option("--dates", clim_o.dates, "manifest of dates to forecast (default: history)");
  clim->add_option("--out", clim_o.out, "forecast-set output directory")->required();
  clim->callback([&] { action = [&] { run_clim(clim_o); }; });

  UqFitOpts uq_fit_o;
  auto* uq_fit = app.add_subcommand("uq-fit", "fit per-pixel IDR calibration");
  uq_fit->add_option("--forecasts", uq_fit_o.forecasts, "forecast set with truths")->required();
  uq_fit->add_option("--out", uq_fit_o.out, "output .idr file")->required();
  uq_fit->add_option("--threads", uq_fit_o.threads, "fit threads");
  uq_fit->callback([&] { action = [&] { run_uq_fit(uq_fit_o); }; });

  UqPredictOpts uq_predict_o;
  auto* uq_predict = app.add_subcommand("uq-predict", "query fitted predictive CDFs");
  uq_predict->add_option("--fit", uq_predict_o.fit, "fitted .idr file")->required();
  uq_predict->add_option("--row", uq_predict_o.row, "pixel row")->required();
  uq_predict->add_option("--col", uq_predict_o.col, "pixel column")->required();
  auto* value_opt =
      uq_predict->add_option("--value", uq_predict_o.value, "point forecast to calibrate");
  uq_predict->add_option("--forecasts", uq_predict_o.forecasts,
                         "forecast set to calibrate at this pixel");
  uq_predict->add_option("--out", uq_predict_o.out, "output CSV")->required();
  uq_predict->callback([&] {
    uq_predict_o.has_value = value_opt->count() > 0;
    action = [&] { run_uq_predict(uq_predict_o); };
  });

  HybridFitOpts hybrid_fit_o;
  auto* hybrid_fit = app.add_subcommand("hybrid-fit", "fit the blend weight beta");
  hybrid_fit->add_option("--unet", hybrid_fit_o.unet, "UNET forecast set")->required();
  hybrid_fit->add_option("--nwp", hybrid_fit_o.nwp, "NWP forecast set")->required();
  hybrid_fit->add_option("--out", hybrid_fit_o.out, "output beta JSON")->required();
  hybrid_fit->add_option("--split-name", hybrid_fit_o.split_name,
                         "split label recorded with the fit");
  hybrid_fit->callback([&] { action = [&] { run_hybrid_fit(hybrid_fit_o); }; });

  HybridApplyOpts hybrid_apply_o;
  auto* hybrid_apply = app.add_subcommand("hybrid-apply", "blend UNET and NWP forecasts");
  hybrid_apply->add_option("--unet", hybrid_apply_o.unet, "UNET forecast set")->required();
  hybrid_apply->add_option("--nwp", hybrid_apply_o.nwp, "NWP forecast set")->required();
  hybrid_apply->add_option("--beta", hybrid_apply_o.beta, "beta JSON from hybrid-fit")->required();
  hybrid_apply->add_option("--out", hybrid_apply_o.out, "output directory")->required();
  hybrid_apply->callback([&] { action = [&] { run_hybrid_apply(hybrid_apply_o); }; });

  auto* score = app.add_subcommand("score", "verification metrics");
  score->require_subcommand(1);

  ScoreCommonOpts score_mae_o;
  auto* score_mae = score->add_subcommand("mae", "per-pixel mean absolute error");
  score_mae->add_option("--forecasts", score_mae_o.forecasts, "forecast set")->required();
  score_mae->add_option("--out-csv", score_mae_o.out_csv, "score map CSV")->required();
  score_mae->add_option("--heatmap", score_mae_o.heatmap, "also write a PGM heatmap");
  score_mae->callback([&] { action = [&] { run_score_mae(score_mae_o); }; });

  ScoreCrpsOpts score_crps_o;
  auto* score_crps = score->add_subcommand("crps", "per-pixel mean CRPS");
  score_crps->add_option("--forecasts", score_crps_o.forecasts, "forecast set")->required();
  score_crps->add_option("--method", score_crps_o.method, "point|members|idr|clim");
  score_crps->add_option("--fit", score_crps_o.fit, ".idr file for --method idr");
  score_crps->add_option("--history", score_crps_o.history, "history manifest for --method clim");
  score_crps->add_option("--out-csv", score_crps_o.out_csv, "score map CSV")->required();
  score_crps->add_option("--heatmap", score_crps_o.heatmap, "also write a PGM heatmap");
  score_crps->add_option("--threads", score_crps_o.threads, "scoring threads");
  score_crps->callback([&] { action = [&] { run_score_crps(score_crps_o); }; });

  ScoreSkillOpts score_skill_o;
  auto* score_skill = score->add_subcommand("skill", "CRPS skill versus climatology");
  score_skill->add_option("--model-csv", score_skill_o.model_csv, "model CRPS map")->required();
  score_skill->add_option("--clim-csv", score_skill_o.clim_csv, "climatology CRPS map")->required();
  score_skill->add_option("--out-csv", score_skill_o.out_csv, "skill map CSV")->required();
  score_skill->add_option("--ternary-csv", score_skill_o.ternary_csv, "sign map CSV");
  score_skill->add_option("--heatmap", score_skill_o.heatmap, "also write a PGM heatmap");
  score_skill->callback([&] { action = [&] { run_score_skill(score_skill_o); }; });

  ScorePrf1Opts score_prf1_o;
  auto* score_prf1 = score->add_subcommand("prf1", "thresholded precision/recall/F1");
  score_prf1->add_option("--forecasts", score_prf1_o.forecasts, "forecast set")->required();
  score_prf1->add_option("--tau", score_prf1_o.tau, "event threshold (mm)");
  score_prf1->add_option("--out-csv", score_prf1_o.out_csv, "F1 map CSV")->required();
  score_prf1->add_option("--precision-csv", score_prf1_o.precision_csv, "precision map CSV");
  score_prf1->add_option("--recall-csv", score_prf1_o.recall_csv, "recall map CSV");
  score_prf1->add_option("--heatmap", score_prf1_o.heatmap, "also write a PGM heatmap");
  score_prf1->callback([&] { action = [&] { run_score_prf1(score_prf1_o); }; });

  ScoreCommonOpts score_bias_o;
  auto* score_bias = score->add_subcommand("bias", "forecast-bias histogram");
  score_bias->add_option("--forecasts", score_bias_o.forecasts, "forecast set")->required();
  score_bias->add_option("--out-csv", score_bias_o.out_csv, "histogram CSV")->required();
  score_bias->callback([&] { action = [&] { run_score_bias(score_bias_o); }; });

  ScoreChi2Opts score_chi2_o;
  auto* score_chi2 = score->add_subcommand("chi2", "histogram homogeneity test");
  score_chi2->add_option("--a", score_chi2_o.a, "first histogram CSV")->required();
  score_chi2->add_option("--b", score_chi2_o.b, "second histogram CSV")->required();
  score_chi2->add_option("--out", score_chi2_o.out, "result JSON")->required();
  score_chi2->callback([&] { action = [&] { run_score_chi2(score_chi2_o); }; });

  auto* importance = app.add_subcommand("importance", "input-variable importance");
  importance->require_subcommand(1);

  GibbsOpts gibbs_o;
  auto* gibbs = importance->add_subcommand("gibbs", "Bernoulli-mask Gibbs sampler");
  gibbs->add_option("--inputs", gibbs_o.inputs, "inputs manifest")->required();
  gibbs->add_option("--targets", gibbs_o.targets, "targets manifest")->required();
  gibbs->add_option("--model", gibbs_o.model, "model directory")->required();
  gibbs->add_option("--out", gibbs_o.out, "output directory")->required();
  gibbs->add_option("--split", gibbs_o.split, "train|val|test|all");
  gibbs->add_option("--r", gibbs_o.r, "prior sharpness");
  gibbs->add_option("--sigma2", gibbs_o.sigma2, "temperature");
  gibbs->add_option("--epochs", gibbs_o.epochs, "full sweeps");
  gibbs->add_option("--burn-in", gibbs_o.burn_in, "sweeps discarded from the averages");
  gibbs->add_option("--seed", gibbs_o.seed, "chain seed");
  gibbs->add_option("--top", gibbs_o.top, "rows in top.csv");
  gibbs->add_flag("--random-scan", gibbs_o.random_scan, "permute site order each sweep");
  gibbs->add_option("--threads", gibbs_o.threads, "forward-pass threads");
  gibbs->callback([&] { action = [&] { run_importance_gibbs(gibbs_o); }; });

  SensitivityOpts sens_o;
  auto* sens = importance->add_subcommand("sensitivity", "gradient sensitivity scores");
  sens->add_option("--inputs", sens_o.inputs, "inputs manifest")->required();
  sens->add_option("--targets", sens_o.targets, "targets manifest")->required();
  sens->add_option("--model", sens_o.model, "model directory")->required();
  sens->add_option("--out", sens_o.out, "output CSV")->required();
  sens->add_option("--split", sens_o.split, "train|val|test|all");
  sens->add_option("--threads", sens_o.threads, "backward-pass threads");
  sens->callback([&] { action = [&] { run_importance_sensitivity(sens_o); }; });

  HeatmapOpts heatmap_o;
  auto* heatmap = app.add_subcommand("heatmap", "render a score-map CSV as a PGM");
  heatmap->add_option("--map-csv", heatmap_o.map_csv, "score map CSV")->required();
  heatmap->add_option("--out", heatmap_o.out, "output PGM path")->required();
  heatmap->callback([&] { action = [&] { run_heatmap(heatmap_o); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;  // --help/--version exit cleanly
  }

  try {
    action();
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}
