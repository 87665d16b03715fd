// Micro-benchmarks for the numeric hot paths: convolution, CRPS, PAVA/IDR,
// mask sweeps, and GTF1 I/O.
#include <benchmark/benchmark.h>

#include <filesystem>
#include <utility>
#include <vector>

#include "raincast/autodiff.hpp"
#include "raincast/dataset.hpp"
#include "raincast/discrete_cdf.hpp"
#include "raincast/easyuq.hpp"
#include "raincast/grid.hpp"
#include "raincast/importance.hpp"
#include "raincast/rng.hpp"
#include "raincast/tensor_file.hpp"
#include "raincast/unet.hpp"

namespace fs = std::filesystem;
using namespace raincast;

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape, double lo, double hi) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

void BM_Conv2dForward(benchmark::State& state) {
  Rng rng(1);
  const NodePtr x = constant(random_tensor(rng, {8, 16, 16}, -1.0, 1.0));
  const NodePtr w = constant(random_tensor(rng, {8, 8, 3, 3}, -0.5, 0.5));
  const NodePtr b = constant(random_tensor(rng, {8}, -0.1, 0.1));
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b)->value.values.data());
}
BENCHMARK(BM_Conv2dForward);

void BM_Conv2dForwardBackward(benchmark::State& state) {
  Rng rng(2);
  const Tensor xt = random_tensor(rng, {8, 16, 16}, -1.0, 1.0);
  const Tensor wt = random_tensor(rng, {8, 8, 3, 3}, -0.5, 0.5);
  const Tensor bt = random_tensor(rng, {8}, -0.1, 0.1);
  const Tensor target = Tensor::full({8, 16, 16}, 0.25);
  for (auto _ : state) {
    const NodePtr w = parameter(wt);
    const NodePtr b = parameter(bt);
    const NodePtr loss = l1_loss(conv2d(constant(xt), w, b), target);
    backward(loss);
    benchmark::DoNotOptimize(w->grad.values.data());
  }
}
BENCHMARK(BM_Conv2dForwardBackward);

void BM_UNetPredict(benchmark::State& state) {
  UNetConfig cfg;
  cfg.in_channels = 6;
  cfg.base_width = 4;
  cfg.depth = 2;
  const UNetModel model = build_unet(cfg, 3);
  Rng rng(4);
  const Tensor input = random_tensor(rng, {6, 16, 16}, -1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(input).values.data());
}
BENCHMARK(BM_UNetPredict);

void BM_CrpsDiscrete(benchmark::State& state) {
  Rng rng(5);
  std::vector<double> samples;
  for (int i = 0; i < 20; ++i) samples.push_back(rng.uniform(0.0, 10.0));
  const DiscreteCDF cdf = cdf_from_samples(samples);
  double y = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(crps_discrete(cdf, y));
    y += 0.01;
    if (y > 12.0) y = 0.0;
  }
}
BENCHMARK(BM_CrpsDiscrete);

void BM_PavaAntitonic(benchmark::State& state) {
  Rng rng(6);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<double> v(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = rng.uniform(-5.0, 5.0);
    w[i] = rng.uniform(0.1, 3.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(pava_antitonic(v, w).data());
}
BENCHMARK(BM_PavaAntitonic)->Arg(64)->Arg(512);

void BM_IdrFit(benchmark::State& state) {
  Rng rng(7);
  std::vector<std::pair<double, double>> pairs;
  for (int i = 0; i < 256; ++i)
    pairs.emplace_back(rng.uniform(0.0, 8.0), std::max(0.0, rng.uniform(-2.0, 10.0)));
  for (auto _ : state) benchmark::DoNotOptimize(idr_fit(pairs).cdf.data());
}
BENCHMARK(BM_IdrFit);

void BM_MaskedLoss(benchmark::State& state) {
  UNetConfig cfg;
  cfg.in_channels = 6;
  cfg.base_width = 4;
  cfg.depth = 2;
  const UNetModel model = build_unet(cfg, 8);
  Rng rng(9);
  Dataset ds;
  ds.grid = GridMeta::regular(16, 16, 4.3, 11.6, -3.8, 1.8);
  ds.channel_names = {"v01", "v02", "v03", "v04", "cos", "sin"};
  Date d{2001, 1, 1};
  for (int i = 0; i < 8; ++i) {
    ds.dates.push_back(d);
    d = d.next_day();
    ds.inputs.push_back(random_tensor(rng, {6, 16, 16}, -1.0, 1.0));
    ds.targets.push_back(random_tensor(rng, {1, 16, 16}, 0.0, 5.0));
  }
  MaskVector mask(6, 1);
  mask[3] = 0;
  for (auto _ : state) benchmark::DoNotOptimize(masked_loss(model, ds, mask, 1));
}
BENCHMARK(BM_MaskedLoss);

void BM_GtfRoundTrip(benchmark::State& state) {
  Rng rng(10);
  GtfTensor t;
  t.dims = {8, 64, 64};
  for (std::uint64_t i = 0; i < t.numel(); ++i)
    t.values.push_back(static_cast<float>(rng.uniform(-100.0, 100.0)));
  const fs::path path = fs::temp_directory_path() / "raincast-bench.gtf";
  for (auto _ : state) {
    write_gtf_file(path, t);
    benchmark::DoNotOptimize(read_gtf_file(path).values.data());
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(gtf_file_size(t.dims)) * 2);
}
BENCHMARK(BM_GtfRoundTrip);

}  // namespace

BENCHMARK_MAIN();
