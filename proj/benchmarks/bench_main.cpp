#include <benchmark/benchmark.h>

#include "impress/expert_net.hpp"
#include "impress/ie_net.hpp"
#include "impress/metrics.hpp"
#include "impress/perceptual.hpp"

using namespace impress;

static void BM_AdaIn(benchmark::State& state) {
  torch::NoGradGuard no_grad;
  const int64_t size = state.range(0);
  auto k = torch::randn({4, 64, size, size});
  auto gamma = torch::rand({4, 64});
  auto beta = torch::randn({4, 64});
  for (auto _ : state) benchmark::DoNotOptimize(adain(k, gamma, beta));
}
BENCHMARK(BM_AdaIn)->Arg(16)->Arg(64);

static void BM_AnomalyMap(benchmark::State& state) {
  torch::NoGradGuard no_grad;
  const int64_t size = state.range(0);
  PmConfig config;
  config.backbone = BackboneMode::kFallback;
  PerceptualMeasurement pm(config, FeatureBackbone::fallback(1));
  auto x = torch::rand({1, 3, size, size});
  auto x_hat = torch::rand({1, 3, size, size});
  auto m = torch::rand({1, 3, size, size});
  auto m_hat = torch::rand({1, 3, size, size});
  for (auto _ : state) benchmark::DoNotOptimize(pm.raw_maps(x, x_hat, m, m_hat));
}
BENCHMARK(BM_AnomalyMap)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_PixelAuroc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto scores = torch::rand({static_cast<int64_t>(n)});
  auto labels = (torch::rand({static_cast<int64_t>(n)}) > 0.9).to(torch::kUInt8);
  std::span<const float> s(scores.data_ptr<float>(), n);
  std::span<const uint8_t> l(labels.data_ptr<uint8_t>(), n);
  for (auto _ : state) benchmark::DoNotOptimize(auroc(s, l));
}
BENCHMARK(BM_PixelAuroc)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

static void BM_IeForward(benchmark::State& state) {
  torch::NoGradGuard no_grad;
  IeArchitecture arch;
  arch.image_size = 64;
  arch.widths = {16, 32, 32};
  arch.latent_dim = 64;
  arch.moment_hidden = 64;
  arch.disc_hidden = 64;
  IENet net(arch);
  net->eval();
  auto x = torch::rand({4, 3, 64, 64});
  for (auto _ : state) benchmark::DoNotOptimize(net->impression(x));
}
BENCHMARK(BM_IeForward)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
