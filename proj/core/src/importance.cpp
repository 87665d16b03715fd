#include "raincast/importance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "raincast/errors.hpp"
#include "raincast/parallel.hpp"
#include "raincast/rng.hpp"

namespace raincast {

namespace {

std::string mask_string(const MaskVector& mask) {
  std::string s;
  s.reserve(mask.size());
  for (std::uint8_t b : mask) s.push_back(b ? '1' : '0');
  return s;
}

std::string channel_label(const std::vector<std::string>& names, std::size_t j) {
  if (!names.empty()) return names[j];
  return "ch" + std::to_string(j);
}

}  // namespace

void GibbsConfig::validate() const {
  if (!std::isfinite(r)) throw ValidationError("gibbs: r must be finite");
  if (!(sigma2 > 0.0)) throw ValidationError("gibbs: sigma^2 must be positive");
  if (epochs < 1) throw ValidationError("gibbs: need at least one epoch");
  if (burn_in < 0 || burn_in >= epochs)
    throw ValidationError("gibbs: burn-in must lie in [0, epochs)");
}

std::vector<int> ImportanceChain::ranking() const {
  std::vector<int> idx(posterior_means.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return posterior_means[static_cast<std::size_t>(a)] >
           posterior_means[static_cast<std::size_t>(b)];
  });
  return idx;
}

void ImportanceChain::save_chain_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::size_t k = states.empty() ? 0 : states.front().size();
  out << "epoch";
  for (std::size_t j = 0; j < k; ++j) out << ",delta_" << j;
  out << "\n";
  for (std::size_t e = 0; e < states.size(); ++e) {
    out << e;
    for (std::uint8_t b : states[e]) out << ',' << static_cast<int>(b);
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void ImportanceChain::save_means_json(const std::filesystem::path& path,
                                      const std::vector<std::string>& channel_names) const {
  if (!channel_names.empty() && channel_names.size() != posterior_means.size())
    throw ValidationError("importance: channel name count does not match K");
  nlohmann::json j;
  j["epochs"] = states.size();
  j["burn_in"] = burn_in;
  nlohmann::json means = nlohmann::json::array();
  for (std::size_t c = 0; c < posterior_means.size(); ++c)
    means.push_back({{"channel", channel_label(channel_names, c)}, {"mean", posterior_means[c]}});
  j["posterior_means"] = means;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

void ImportanceChain::save_top_csv(const std::filesystem::path& path, int top_n,
                                   const std::vector<std::string>& channel_names) const {
  if (!channel_names.empty() && channel_names.size() != posterior_means.size())
    throw ValidationError("importance: channel name count does not match K");
  if (top_n < 1) throw ValidationError("importance: top_n must be positive");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "rank,channel,mean\n";
  const std::vector<int> order = ranking();
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(top_n), order.size());
  char line[128];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = static_cast<std::size_t>(order[i]);
    std::snprintf(line, sizeof line, "%zu,%s,%.17g\n", i + 1, channel_label(channel_names, c).c_str(),
                  posterior_means[c]);
    out << line;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

double masked_loss(const UNetModel& model, const Dataset& split, const MaskVector& mask,
                   int threads) {
  const int k = model.config.in_channels;
  if (mask.size() != static_cast<std::size_t>(k))
    throw ValidationError("masked_loss: mask has " + std::to_string(mask.size()) +
                          " entries for " + std::to_string(k) + " input channels");
  if (split.inputs.empty()) throw ValidationError("masked_loss: empty split");

  bool all_ones = true;
  for (std::uint8_t b : mask) all_ones = all_ones && b != 0;

  std::vector<double> per_sample(split.size());
  parallel_for(split.size(), threads, [&](std::size_t i) {
    const Tensor* x = &split.inputs[i];
    Tensor masked;
    if (!all_ones) {
      masked = *x;
      const std::size_t plane = masked.values.size() / static_cast<std::size_t>(k);
      for (int c = 0; c < k; ++c)
        if (!mask[static_cast<std::size_t>(c)])
          std::fill_n(masked.values.begin() + static_cast<std::size_t>(c) * plane, plane, 0.0);
      x = &masked;
    }
    const Tensor pred = model.predict(*x);
    const Tensor& target = split.targets[i];
    double sum = 0.0;
    for (std::size_t v = 0; v < pred.values.size(); ++v)
      sum += std::fabs(pred.values[v] - target.values[v]);
    per_sample[i] = sum;
  });

  double total = 0.0;
  for (double v : per_sample) total += v;  // fixed order: thread-count invariant
  return total;
}

double gibbs_conditional(double r, double sigma2, double l1, double l0) {
  if (!(sigma2 > 0.0)) throw ValidationError("gibbs: sigma^2 must be positive");
  const double z = r + (l1 - l0) / (2.0 * sigma2);
  if (std::isnan(z)) throw NumericError("gibbs: conditional exponent is NaN");
  // stable sigmoid(-z); saturates to exact 0/1 at the +-inf limits
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

ImportanceChain gibbs_run(const MaskLossFn& loss, int k, const GibbsConfig& cfg) {
  cfg.validate();
  if (k < 1) throw ValidationError("gibbs: need at least one channel");

  std::unordered_map<std::string, double> memo;
  auto eval = [&](const MaskVector& mask) {
    const std::string key = mask_string(mask);
    const auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const double value = loss(mask);
    if (!std::isfinite(value))
      throw NumericError("gibbs: non-finite loss for mask " + key);
    memo.emplace(key, value);
    return value;
  };

  Rng rng(mix_seed(cfg.seed, 0x67696262));
  MaskVector current(static_cast<std::size_t>(k), 1);
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);

  ImportanceChain chain;
  chain.burn_in = cfg.burn_in;
  chain.states.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.random_scan) rng.shuffle(order);
    for (int j : order) {
      MaskVector on = current, off = current;
      on[static_cast<std::size_t>(j)] = 1;
      off[static_cast<std::size_t>(j)] = 0;
      const double q = gibbs_conditional(cfg.r, cfg.sigma2, eval(on), eval(off));
      current[static_cast<std::size_t>(j)] = rng.uniform() < q ? 1 : 0;
    }
    chain.states.push_back(current);
  }

  chain.posterior_means.assign(static_cast<std::size_t>(k), 0.0);
  const std::size_t kept = chain.states.size() - static_cast<std::size_t>(cfg.burn_in);
  for (std::size_t e = static_cast<std::size_t>(cfg.burn_in); e < chain.states.size(); ++e)
    for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j)
      chain.posterior_means[j] += chain.states[e][j];
  for (double& m : chain.posterior_means) m /= static_cast<double>(kept);
  return chain;
}

ImportanceChain gibbs_run(const UNetModel& model, const Dataset& split, const GibbsConfig& cfg,
                          int threads) {
  const int k = model.config.in_channels;
  return gibbs_run(
      [&](const MaskVector& mask) { return masked_loss(model, split, mask, threads); }, k, cfg);
}

std::vector<double> sensitivity(const UNetModel& model, const Dataset& split, int threads) {
  if (split.inputs.empty()) throw ValidationError("sensitivity: empty split");
  const std::size_t k = static_cast<std::size_t>(model.config.in_channels);

  // per-sample rows; each worker builds its own graph over constant copies of
  // the parameters so nothing is shared or mutated across threads
  std::vector<std::vector<double>> rows(split.size());
  parallel_for(split.size(), threads, [&](std::size_t i) {
    UNetModel local;
    local.config = model.config;
    local.param_names = model.param_names;
    local.params.reserve(model.params.size());
    for (const NodePtr& p : model.params) local.params.push_back(constant(p->value));

    const NodePtr x = parameter(split.inputs[i]);
    const NodePtr out = local.forward(x);
    backward(out, out->value);  // seeds d(0.5 ||F||^2)/dF = F

    const std::size_t plane = x->grad.values.size() / k;
    std::vector<double> row(k, 0.0);
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t v = 0; v < plane; ++v)
        row[c] += std::fabs(x->grad.values[c * plane + v]);
    rows[i] = std::move(row);
  });

  std::vector<double> score(k, 0.0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < k; ++c) score[c] += row[c];
  for (double& s : score) s /= static_cast<double>(split.size());
  return score;
}

}  // namespace raincast
