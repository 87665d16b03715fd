#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "raincast/dataset.hpp"
#include "raincast/unet.hpp"

namespace raincast {

// binary inclusion mask over the K input channels
using MaskVector = std::vector<std::uint8_t>;

struct GibbsConfig {
  double r = 3.76;       // prior sharpness
  double sigma2 = 0.01;  // temperature
  int epochs = 1000;     // full sweeps over the K sites
  int burn_in = 950;     // leading epochs excluded from the averages
  std::uint64_t seed = 0;
  bool random_scan = false;  // permute the site order each sweep

  void validate() const;
};

struct ImportanceChain {
  std::vector<MaskVector> states;       // one mask per epoch
  std::vector<double> posterior_means;  // per channel, post-burn-in
  int burn_in = 0;

  // channel indices by descending posterior mean; ties break toward the
  // lower index so the order is reproducible
  std::vector<int> ranking() const;

  void save_chain_csv(const std::filesystem::path& path) const;
  void save_means_json(const std::filesystem::path& path,
                       const std::vector<std::string>& channel_names = {}) const;
  void save_top_csv(const std::filesystem::path& path, int top_n,
                    const std::vector<std::string>& channel_names = {}) const;
};

// L(delta; D): channels with delta_j == 0 are zeroed in the model's input
// space (the normalized space), then the per-sample L1 norms are summed over
// the split. The all-ones mask reproduces the plain split loss bit-for-bit.
double masked_loss(const UNetModel& model, const Dataset& split, const MaskVector& mask,
                   int threads = 1);

// q_j = 1 / (1 + exp(r + (L1 - L0) / (2 sigma^2))); the exponent is kept in
// the log domain so large gaps saturate to exact 0 or 1 instead of overflowing
double gibbs_conditional(double r, double sigma2, double l1, double l0);

using MaskLossFn = std::function<double(const MaskVector&)>;

// Single-site Gibbs sweep targeting
// Pi(delta) ~ exp(-r sum_j delta_j - L(delta)/(2 sigma^2)), starting from the
// all-ones mask. Loss values are memoized by mask, so each sweep costs at
// most two fresh evaluations per site and repeat visits are free.
ImportanceChain gibbs_run(const MaskLossFn& loss, int k, const GibbsConfig& cfg);
ImportanceChain gibbs_run(const UNetModel& model, const Dataset& split, const GibbsConfig& cfg,
                          int threads = 1);

// score_k = mean over samples of sum_i |d(0.5 ||F(x)||^2) / dx_{k,i}|; one
// backward pass per sample, seeded with the forward values
std::vector<double> sensitivity(const UNetModel& model, const Dataset& split, int threads = 1);

}  // namespace raincast
