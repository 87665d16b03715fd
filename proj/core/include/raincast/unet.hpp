#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "raincast/autodiff.hpp"
#include "raincast/dataset.hpp"
#include "raincast/optim.hpp"

namespace raincast {

struct UNetConfig {
  int in_channels = 57;
  int out_channels = 1;
  int base_width = 8;  // feature maps at the first level; doubles per level
  int depth = 3;       // downsampling blocks

  void validate() const;
  // smallest spatial size the config accepts (inputs must be multiples)
  int spatial_divisor() const { return 1 << depth; }
  bool operator==(const UNetConfig&) const = default;
};

// Encoder-decoder network: depth blocks of [conv3x3-relu-conv3x3-relu] with
// widths base*2^level, each followed by maxpool2; a double conv bottleneck
// at base*2^depth; then depth blocks of [tconv2d, concat skip, double conv];
// a final 1x1 conv to out_channels and an output relu.
struct UNetModel {
  UNetConfig config;
  std::vector<NodePtr> params;
  std::vector<std::string> param_names;  // parallel to params

  // Builds the op graph on top of `input` (a (C, H, W) node) and returns the
  // (out_channels, H, W) output node. Shared by training and inference.
  NodePtr forward(const NodePtr& input) const;
  Tensor predict(const Tensor& input) const;
  // Inference is read-only on parameters, so samples run safely in parallel;
  // element i equals predict(inputs[i]) for every thread count.
  std::vector<Tensor> predict_batch(const std::vector<Tensor>& inputs, int threads = 1) const;

  std::size_t parameter_count() const;
};

// Deterministic He-style scaled-uniform initialization (bound sqrt(6/fan_in),
// biases zero); parameters land on the binary32 grid so a fresh model equals
// its own checkpoint.
UNetModel build_unet(const UNetConfig& config, std::uint64_t seed);

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-4;
  int batch_size = 256;
  int max_epochs = 100;
  int patience = 100;
  double factor = 0.1;
  std::uint64_t seed = 0;
  int threads = 1;  // parallel validation forwards; training itself is sequential

  void validate() const;
};

struct TrainResult {
  std::vector<double> train_loss;  // summed L1 over the split, one entry per epoch
  std::vector<double> val_loss;
  int best_epoch = -1;      // epoch whose parameters the model carries at return
  double best_val_loss = 0.0;
};

// Mini-batch Adam on the summed L1 loss. The plateau scheduler follows the
// validation loss; the best-validation parameters (binary32-quantized, i.e.
// exactly what save_checkpoint would write) are restored into `model` before
// returning. Throws NumericError with a diagnostic if the loss leaves the
// finite range.
TrainResult train_unet(UNetModel& model, const Dataset& train_data, const Dataset& val_data,
                       const TrainConfig& cfg);

// UNC1 checkpoint: magic, u32 LE header length, JSON header (config, epoch,
// val_loss, tensor names), then one GTF1 blob per parameter in order.
void save_checkpoint(const UNetModel& model, const std::filesystem::path& path, int epoch = -1,
                     double val_loss = 0.0);

struct Checkpoint {
  UNetModel model;
  int epoch = -1;
  double val_loss = 0.0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace raincast
