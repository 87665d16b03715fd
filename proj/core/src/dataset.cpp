#include "raincast/dataset.hpp"

#include <cmath>

#include "raincast/errors.hpp"
#include "raincast/tensor_file.hpp"

namespace raincast {

void Dataset::validate() const {
  if (dates.empty()) throw ValidationError("dataset: empty");
  if (inputs.size() != dates.size() || targets.size() != dates.size())
    throw ValidationError("dataset: misaligned arrays");
  const int k = static_cast<int>(channel_names.size());
  for (const auto& t : inputs) {
    if (t.rank() != 3 || t.dim(0) != k || t.dim(1) != grid.height || t.dim(2) != grid.width)
      throw ValidationError("dataset: input tensor has shape " + shape_string(t.shape));
  }
  for (const auto& t : targets) {
    if (t.rank() != 3 || t.dim(0) != 1 || t.dim(1) != grid.height || t.dim(2) != grid.width)
      throw ValidationError("dataset: target tensor has shape " + shape_string(t.shape));
  }
}

namespace {

Tensor tensor_from_gtf(const GtfTensor& g, int k, int h, int w, const std::string& what) {
  const bool rank3 = g.dims.size() == 3 && static_cast<int>(g.dims[0]) == k &&
                     static_cast<int>(g.dims[1]) == h && static_cast<int>(g.dims[2]) == w;
  const bool rank2 = k == 1 && g.dims.size() == 2 && static_cast<int>(g.dims[0]) == h &&
                     static_cast<int>(g.dims[1]) == w;
  if (!rank3 && !rank2) throw ValidationError("dataset: " + what + " has unexpected dims");
  Tensor t = Tensor::zeros({k, h, w});
  for (std::size_t i = 0; i < g.values.size(); ++i) t.values[i] = g.values[i];
  return t;
}

}  // namespace

Dataset load_dataset(const DatasetManifest& inputs, const DatasetManifest& targets) {
  inputs.validate();
  targets.validate();
  if (inputs.dates != targets.dates)
    throw ValidationError("dataset: inputs and targets disagree on dates");
  if (inputs.lat != targets.lat || inputs.lon != targets.lon)
    throw ValidationError("dataset: inputs and targets disagree on the grid");
  if (targets.variables.size() != 1)
    throw ValidationError("dataset: targets manifest must declare exactly one variable");

  Dataset ds;
  ds.dates = inputs.dates;
  ds.channel_names = inputs.variables;
  ds.grid = inputs.grid();
  const int k = static_cast<int>(inputs.variables.size());
  const int h = ds.grid.height, w = ds.grid.width;
  for (const Date& d : inputs.dates) {
    ds.inputs.push_back(tensor_from_gtf(read_gtf_file(inputs.resolve(d)), k, h, w,
                                        "input " + d.to_string()));
    ds.targets.push_back(tensor_from_gtf(read_gtf_file(targets.resolve(d)), 1, h, w,
                                         "target " + d.to_string()));
  }
  ds.validate();
  return ds;
}

Normalizer fit_normalizer(const Dataset& train) {
  train.validate();
  const std::size_t k = train.channel_names.size();
  const std::size_t npx = static_cast<std::size_t>(train.grid.height) * train.grid.width;
  std::vector<ChannelStats> stats(k);
  for (std::size_t c = 0; c < k; ++c) {
    double sum = 0.0;
    const std::size_t count = npx * train.inputs.size();
    for (const auto& t : train.inputs)
      for (std::size_t i = 0; i < npx; ++i) sum += t.values[c * npx + i];
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (const auto& t : train.inputs)
      for (std::size_t i = 0; i < npx; ++i) {
        const double d = t.values[c * npx + i] - mean;
        sq += d * d;
      }
    stats[c].name = train.channel_names[c];
    stats[c].mean = mean;
    stats[c].stdev = std::max(std::sqrt(sq / static_cast<double>(count)), 1e-8);
  }
  return Normalizer(std::move(stats));
}

void apply_normalizer(Dataset& ds, const Normalizer& norm) {
  if (norm.channel_count() != ds.channel_names.size())
    throw ValidationError("dataset: normalizer has " + std::to_string(norm.channel_count()) +
                          " channels, dataset " + std::to_string(ds.channel_names.size()));
  for (std::size_t c = 0; c < ds.channel_names.size(); ++c)
    if (norm.channel(c).name != ds.channel_names[c])
      throw ValidationError("dataset: normalizer channel \"" + norm.channel(c).name +
                            "\" does not match dataset channel \"" + ds.channel_names[c] + "\"");
  const std::size_t npx = static_cast<std::size_t>(ds.grid.height) * ds.grid.width;
  for (auto& t : ds.inputs) {
    for (std::size_t c = 0; c < ds.channel_names.size(); ++c) {
      const auto& s = norm.channel(c);
      for (std::size_t i = 0; i < npx; ++i) {
        double& v = t.values[c * npx + i];
        v = (v - s.mean) / s.stdev;
      }
    }
  }
}

}  // namespace raincast
