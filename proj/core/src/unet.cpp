#include "raincast/unet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "raincast/errors.hpp"
#include "raincast/parallel.hpp"
#include "raincast/rng.hpp"
#include "raincast/tensor_file.hpp"

namespace raincast {

void UNetConfig::validate() const {
  if (in_channels <= 0 || out_channels <= 0 || base_width <= 0 || depth < 1)
    throw ValidationError("unet: config fields must be positive (depth >= 1)");
}

void TrainConfig::validate() const {
  if (lr < 0.0 || weight_decay < 0.0) throw ValidationError("train: negative lr or weight decay");
  if (batch_size <= 0 || max_epochs <= 0 || patience <= 0)
    throw ValidationError("train: batch_size, max_epochs, patience must be positive");
  if (!(factor > 0.0 && factor < 1.0)) throw ValidationError("train: factor must lie in (0, 1)");
  if (threads < 1) throw ValidationError("train: threads must be >= 1");
}

namespace {

struct ParamSpec {
  std::string name;
  std::vector<int> shape;
};

// Shapes of every parameter, in creation order: a pure function of config.
std::vector<ParamSpec> unet_param_specs(const UNetConfig& cfg) {
  std::vector<ParamSpec> specs;
  auto conv = [&](const std::string& name, int co, int ci, int k) {
    specs.push_back({name + ".weight", {co, ci, k, k}});
    specs.push_back({name + ".bias", {co}});
  };
  auto tconv = [&](const std::string& name, int ci, int co) {
    specs.push_back({name + ".weight", {ci, co, 2, 2}});
    specs.push_back({name + ".bias", {co}});
  };

  const int b = cfg.base_width;
  for (int l = 0; l < cfg.depth; ++l) {
    const int w = b << l;
    const int in = l == 0 ? cfg.in_channels : (b << (l - 1));
    const std::string p = "enc" + std::to_string(l);
    conv(p + ".conv1", w, in, 3);
    conv(p + ".conv2", w, w, 3);
  }
  const int wb = b << cfg.depth;
  conv("bottleneck.conv1", wb, b << (cfg.depth - 1), 3);
  conv("bottleneck.conv2", wb, wb, 3);
  for (int l = cfg.depth - 1; l >= 0; --l) {
    const int w = b << l;
    const int from = l == cfg.depth - 1 ? wb : (b << (l + 1));
    const std::string p = "dec" + std::to_string(l);
    tconv(p + ".tconv", from, w);
    conv(p + ".conv1", w, 2 * w, 3);
    conv(p + ".conv2", w, w, 3);
  }
  conv("head", cfg.out_channels, b, 1);
  return specs;
}

int param_index(const UNetModel& model, const std::string& name) {
  for (std::size_t i = 0; i < model.param_names.size(); ++i)
    if (model.param_names[i] == name) return static_cast<int>(i);
  throw ValidationError("unet: missing parameter " + name);
}

}  // namespace

UNetModel build_unet(const UNetConfig& config, std::uint64_t seed) {
  config.validate();
  UNetModel model;
  model.config = config;
  Rng rng(mix_seed(seed, 0x756e6574));  // one stream across all parameters

  for (const auto& spec : unet_param_specs(config)) {
    Tensor t = Tensor::zeros(spec.shape);
    if (spec.shape.size() == 4) {
      // He-style scaled uniform over fan_in = Ci * kh * kw
      const double fan_in = static_cast<double>(spec.shape[1]) * spec.shape[2] * spec.shape[3];
      const double bound = std::sqrt(6.0 / fan_in);
      for (double& v : t.values) v = rng.uniform(-bound, bound);
      quantize_f32(t);
    }
    // biases stay zero
    model.params.push_back(parameter(std::move(t)));
    model.param_names.push_back(spec.name);
  }
  return model;
}

std::size_t UNetModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p->value.numel();
  return n;
}

NodePtr UNetModel::forward(const NodePtr& input) const {
  const Tensor& in = input->value;
  if (in.rank() != 3 || in.dim(0) != config.in_channels)
    throw ValidationError("unet: input must be (" + std::to_string(config.in_channels) +
                          ", H, W), got " + shape_string(in.shape));
  const int div = config.spatial_divisor();
  if (in.dim(1) % div != 0 || in.dim(2) % div != 0)
    throw ValidationError("unet: spatial dims " + shape_string(in.shape) +
                          " not divisible by 2^depth = " + std::to_string(div));

  auto p = [&](const std::string& name) { return params[static_cast<std::size_t>(param_index(*this, name))]; };
  auto double_conv = [&](NodePtr x, const std::string& prefix) {
    x = relu(conv2d(x, p(prefix + ".conv1.weight"), p(prefix + ".conv1.bias")));
    return relu(conv2d(x, p(prefix + ".conv2.weight"), p(prefix + ".conv2.bias")));
  };

  std::vector<NodePtr> skips;
  NodePtr x = input;
  for (int l = 0; l < config.depth; ++l) {
    const NodePtr e = double_conv(x, "enc" + std::to_string(l));
    skips.push_back(e);
    x = maxpool2(e);
  }
  x = double_conv(x, "bottleneck");
  for (int l = config.depth - 1; l >= 0; --l) {
    const std::string prefix = "dec" + std::to_string(l);
    x = tconv2d(x, p(prefix + ".tconv.weight"), p(prefix + ".tconv.bias"));
    x = concat_channels(x, skips[static_cast<std::size_t>(l)]);
    x = double_conv(x, prefix);
  }
  return relu(conv2d(x, p("head.weight"), p("head.bias")));
}

Tensor UNetModel::predict(const Tensor& input) const {
  return forward(constant(input))->value;
}

std::vector<Tensor> UNetModel::predict_batch(const std::vector<Tensor>& inputs, int threads) const {
  std::vector<Tensor> out(inputs.size());
  parallel_for(inputs.size(), threads, [&](std::size_t i) { out[i] = predict(inputs[i]); });
  return out;
}

namespace {

double eval_split_loss(const UNetModel& model, const Dataset& data, int threads) {
  std::vector<double> losses(data.size(), 0.0);
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const Tensor pred = model.predict(data.inputs[i]);
    double sum = 0.0;
    for (std::size_t j = 0; j < pred.values.size(); ++j)
      sum += std::fabs(pred.values[j] - data.targets[i].values[j]);
    losses[i] = sum;
  });
  // fixed-order reduction keeps the result independent of the thread count
  double total = 0.0;
  for (double l : losses) total += l;
  return total;
}

void check_dataset_against(const UNetModel& model, const Dataset& data, const char* which) {
  if (data.size() == 0) throw ValidationError(std::string("train: empty ") + which + " split");
  if (static_cast<int>(data.channel_names.size()) != model.config.in_channels)
    throw ValidationError(std::string("train: ") + which + " split has " +
                          std::to_string(data.channel_names.size()) + " channels, config wants " +
                          std::to_string(model.config.in_channels));
}

}  // namespace

TrainResult train_unet(UNetModel& model, const Dataset& train_data, const Dataset& val_data,
                       const TrainConfig& cfg) {
  cfg.validate();
  train_data.validate();
  val_data.validate();
  check_dataset_against(model, train_data, "train");
  check_dataset_against(model, val_data, "validation");

  AdamState adam;
  adam.lr = cfg.lr;
  adam.weight_decay = cfg.weight_decay;
  PlateauScheduler sched(cfg.lr, cfg.patience, cfg.factor);
  Rng shuffle_rng(mix_seed(cfg.seed, 0x7368756666));

  TrainResult result;
  std::vector<Tensor> best_params;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;

  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    adam.lr = sched.lr();
    shuffle_rng.shuffle(order);

    // per-sample losses summed in dataset order: the recorded history does
    // not depend on the shuffle
    std::vector<double> sample_loss(order.size(), 0.0);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      zero_grad(model.params);
      for (std::size_t bi = start; bi < end; ++bi) {
        const std::size_t idx = order[bi];
        const NodePtr loss = l1_loss(model.forward(constant(train_data.inputs[idx])),
                                     train_data.targets[idx]);
        const double l = loss->value.values[0];
        if (!std::isfinite(l))
          throw NumericError("train: loss became non-finite at epoch " + std::to_string(epoch) +
                             ", sample " + train_data.dates[idx].to_string() +
                             " (lr=" + std::to_string(adam.lr) + ")");
        sample_loss[idx] = l;
        backward(loss);
      }
      adam_step(model.params, adam);
    }
    double train_sum = 0.0;
    for (double l : sample_loss) train_sum += l;

    const double val_sum = eval_split_loss(model, val_data, cfg.threads);
    if (!std::isfinite(val_sum))
      throw NumericError("train: validation loss became non-finite at epoch " +
                         std::to_string(epoch));
    result.train_loss.push_back(train_sum);
    result.val_loss.push_back(val_sum);

    if (val_sum < best_val) {
      best_val = val_sum;
      best_epoch = epoch;
      best_params.clear();
      for (const auto& p : model.params) {
        Tensor copy = p->value;
        quantize_f32(copy);  // checkpoint-identical snapshot
        best_params.push_back(std::move(copy));
      }
    }
    sched.step(val_sum);
  }

  for (std::size_t i = 0; i < model.params.size(); ++i) model.params[i]->value = best_params[i];
  result.best_epoch = best_epoch;
  result.best_val_loss = best_val;
  return result;
}

void save_checkpoint(const UNetModel& model, const std::filesystem::path& path, int epoch,
                     double val_loss) {
  nlohmann::json header;
  header["format"] = "UNC1";
  header["config"] = {{"in_channels", model.config.in_channels},
                      {"out_channels", model.config.out_channels},
                      {"base_width", model.config.base_width},
                      {"depth", model.config.depth}};
  header["epoch"] = epoch;
  header["val_loss"] = val_loss;
  header["tensors"] = model.param_names;
  const std::string header_bytes = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write("UNC1", 4);
  const std::uint32_t len = static_cast<std::uint32_t>(header_bytes.size());
  unsigned char lenb[4] = {static_cast<unsigned char>(len), static_cast<unsigned char>(len >> 8),
                           static_cast<unsigned char>(len >> 16),
                           static_cast<unsigned char>(len >> 24)};
  out.write(reinterpret_cast<const char*>(lenb), 4);
  out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));

  for (const auto& p : model.params) {
    GtfTensor t;
    for (int d : p->value.shape) t.dims.push_back(static_cast<std::uint32_t>(d));
    t.values.reserve(p->value.values.size());
    for (double v : p->value.values) t.values.push_back(static_cast<float>(v));
    write_gtf(out, t);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "UNC1")
    throw FormatError("checkpoint: bad magic in " + path.string(), 0);
  unsigned char lenb[4];
  if (!in.read(reinterpret_cast<char*>(lenb), 4))
    throw FormatError("checkpoint: truncated header length", 4);
  const std::uint32_t len = static_cast<std::uint32_t>(lenb[0]) |
                            (static_cast<std::uint32_t>(lenb[1]) << 8) |
                            (static_cast<std::uint32_t>(lenb[2]) << 16) |
                            (static_cast<std::uint32_t>(lenb[3]) << 24);
  std::string header_bytes(len, '\0');
  if (!in.read(header_bytes.data(), static_cast<std::streamsize>(len)))
    throw FormatError("checkpoint: truncated header", 8);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_bytes);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint: bad header JSON: " + std::string(e.what()), 8);
  }

  Checkpoint ck;
  try {
    const auto& c = header.at("config");
    ck.model.config.in_channels = c.at("in_channels").get<int>();
    ck.model.config.out_channels = c.at("out_channels").get<int>();
    ck.model.config.base_width = c.at("base_width").get<int>();
    ck.model.config.depth = c.at("depth").get<int>();
    ck.epoch = header.at("epoch").get<int>();
    ck.val_loss = header.at("val_loss").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint: bad header fields: " + std::string(e.what()), 8);
  }
  ck.model.config.validate();

  const auto specs = unet_param_specs(ck.model.config);
  const auto names = header.at("tensors").get<std::vector<std::string>>();
  if (names.size() != specs.size())
    throw ValidationError("checkpoint: " + std::to_string(names.size()) + " tensors listed, config " +
                          "implies " + std::to_string(specs.size()));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (names[i] != specs[i].name)
      throw ValidationError("checkpoint: tensor " + std::to_string(i) + " is \"" + names[i] +
                            "\", config implies \"" + specs[i].name + "\"");
    const GtfTensor g = read_gtf(in, path.string() + ":" + names[i]);
    std::vector<int> shape;
    for (auto d : g.dims) shape.push_back(static_cast<int>(d));
    if (shape != specs[i].shape)
      throw ValidationError("checkpoint: tensor \"" + names[i] + "\" has shape " +
                            shape_string(shape) + ", config implies " + shape_string(specs[i].shape));
    Tensor t = Tensor::zeros(shape);
    for (std::size_t j = 0; j < g.values.size(); ++j) t.values[j] = g.values[j];
    ck.model.params.push_back(parameter(std::move(t)));
    ck.model.param_names.push_back(names[i]);
  }
  return ck;
}

}  // namespace raincast
