#pragma once

#include <string>
#include <vector>

#include "raincast/autodiff.hpp"
#include "raincast/dates.hpp"
#include "raincast/grid.hpp"
#include "raincast/manifest.hpp"
#include "raincast/normalizer.hpp"

namespace raincast {

// In-memory supervised dataset: aligned (input cube, rainfall image) tensor
// pairs over the dates shared by an inputs manifest and a targets manifest.
struct Dataset {
  std::vector<Date> dates;
  std::vector<Tensor> inputs;   // (K, H, W) each
  std::vector<Tensor> targets;  // (1, H, W) each
  std::vector<std::string> channel_names;
  GridMeta grid;

  std::size_t size() const { return dates.size(); }
  void validate() const;
};

// Loads every date of `inputs` (its date list must equal `targets`'). Inputs
// stay in raw units; apply a normalizer separately.
Dataset load_dataset(const DatasetManifest& inputs, const DatasetManifest& targets);

// Per-channel population statistics over every pixel of every input tensor;
// same floor (1e-8) and conventions as Normalizer::fit.
Normalizer fit_normalizer(const Dataset& train);

void apply_normalizer(Dataset& ds, const Normalizer& norm);

}  // namespace raincast
