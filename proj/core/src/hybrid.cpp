#include "raincast/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "raincast/errors.hpp"

namespace raincast {

namespace {

void check_aligned(const ForecastSet& unet, const ForecastSet& nwp, const char* op) {
  if (unet.dates != nwp.dates)
    throw ValidationError(std::string(op) + ": forecast sets disagree on dates");
  if (unet.lat != nwp.lat || unet.lon != nwp.lon)
    throw ValidationError(std::string(op) + ": forecast sets disagree on the grid");
}

}  // namespace

void BlendWeight::save_json(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["beta"] = beta;
  j["sum_squares"] = sum_squares;
  j["n"] = n;
  j["fit_split"] = fit_split;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

BlendWeight BlendWeight::load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  BlendWeight w;
  try {
    nlohmann::json j;
    in >> j;
    w.beta = j.at("beta").get<double>();
    w.sum_squares = j.at("sum_squares").get<double>();
    w.n = j.at("n").get<std::size_t>();
    w.fit_split = j.value("fit_split", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("blend weight " + path.string() + ": " + e.what());
  }
  if (!std::isfinite(w.beta)) throw ValidationError("blend weight: beta is not finite");
  return w;
}

BlendWeight fit_beta(const std::vector<double>& y, const std::vector<double>& unet,
                     const std::vector<double>& nwp, const std::string& fit_split) {
  if (y.size() != unet.size() || y.size() != nwp.size())
    throw ValidationError("fit_beta: input arrays have mismatched lengths");
  if (y.empty()) throw ValidationError("fit_beta: no pairs to fit");

  double sum_dr = 0.0;
  double sum_dd = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = nwp[i] - unet[i];
    const double r = y[i] - unet[i];
    if (!std::isfinite(d) || !std::isfinite(r))
      throw ValidationError("fit_beta: non-finite value at pair " + std::to_string(i));
    sum_dr += d * r;
    sum_dd += d * d;
  }
  if (sum_dd <= 0.0)
    throw ValidationError("fit_beta: NWP and UNET forecasts coincide everywhere (sum d^2 == 0)");

  BlendWeight w;
  w.beta = sum_dr / sum_dd;
  w.sum_squares = sum_dd;
  w.n = y.size();
  w.fit_split = fit_split;
  return w;
}

BlendWeight fit_beta(const ForecastSet& unet, const ForecastSet& nwp,
                     const std::string& fit_split) {
  check_aligned(unet, nwp, "fit_beta");
  const std::vector<float>& truths = !unet.truths.empty() ? unet.truths : nwp.truths;
  if (truths.empty()) throw ValidationError("fit_beta: neither forecast set carries truths");

  const std::size_t total = unet.size() * unet.pixels();
  std::vector<double> y(total), u(total), v(total);
  for (std::size_t i = 0; i < total; ++i) {
    y[i] = truths[i];
    u[i] = unet.predictions[i];
    v[i] = nwp.predictions[i];
  }
  return fit_beta(y, u, v, fit_split);
}

std::vector<double> blend(const std::vector<double>& unet, const std::vector<double>& nwp,
                          double beta) {
  if (unet.size() != nwp.size())
    throw ValidationError("blend: input arrays have mismatched lengths");
  if (!std::isfinite(beta)) throw ValidationError("blend: beta is not finite");
  std::vector<double> out(unet.size());
  for (std::size_t i = 0; i < unet.size(); ++i)
    out[i] = std::max((1.0 - beta) * unet[i] + beta * nwp[i], 0.0);
  return out;
}

ForecastSet blend_sets(const ForecastSet& unet, const ForecastSet& nwp, double beta,
                       BlendStats* stats) {
  check_aligned(unet, nwp, "blend");
  if (!std::isfinite(beta)) throw ValidationError("blend: beta is not finite");

  ForecastSet hyb;
  hyb.dates = unet.dates;
  hyb.lat = unet.lat;
  hyb.lon = unet.lon;
  hyb.truths = !unet.truths.empty() ? unet.truths : nwp.truths;

  BlendStats local;
  hyb.predictions.resize(unet.predictions.size());
  for (std::size_t i = 0; i < unet.predictions.size(); ++i) {
    const double raw = (1.0 - beta) * static_cast<double>(unet.predictions[i]) +
                       beta * static_cast<double>(nwp.predictions[i]);
    if (raw < 0.0) ++local.floored_predictions;
    hyb.predictions[i] = static_cast<float>(std::max(raw, 0.0));
  }

  if (nwp.has_members()) {
    hyb.member_count = nwp.member_count;
    hyb.members.resize(nwp.members.size());
    const std::size_t px = unet.pixels();
    for (std::size_t t = 0; t < unet.size(); ++t) {
      const float* base = unet.prediction(t);
      for (int m = 0; m < nwp.member_count; ++m) {
        const float* in = nwp.member(t, m);
        float* out = hyb.member(t, m);
        for (std::size_t p = 0; p < px; ++p) {
          const double raw = (1.0 - beta) * static_cast<double>(base[p]) +
                             beta * static_cast<double>(in[p]);
          if (raw < 0.0) ++local.floored_members;
          out[p] = static_cast<float>(std::max(raw, 0.0));
        }
      }
    }
  }

  hyb.validate();
  if (stats) *stats = local;
  return hyb;
}

}  // namespace raincast
