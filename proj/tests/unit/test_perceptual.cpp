#include <gtest/gtest.h>

#include <cstdlib>

#include "impress/error.hpp"
#include "impress/perceptual.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace impress;

namespace {

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kIoError;
}

oracle::Volume volume_of(const torch::Tensor& chw) {
  oracle::Volume v(static_cast<int>(chw.size(0)), static_cast<int>(chw.size(1)), static_cast<int>(chw.size(2)));
  v.v = testing_util::to_vector(chw);
  return v;
}

PmConfig fallback_pm() {
  PmConfig pm;
  pm.backbone = BackboneMode::kFallback;
  return pm;
}

std::map<std::string, torch::Tensor> vgg_shaped_tensors() {
  const std::vector<std::tuple<std::string, int64_t, int64_t>> convs{
      {"conv1_1", 3, 64},    {"conv1_2", 64, 64},   {"conv2_1", 64, 128},  {"conv2_2", 128, 128},
      {"conv3_1", 128, 256}, {"conv3_2", 256, 256}, {"conv3_3", 256, 256}, {"conv3_4", 256, 256}};
  std::map<std::string, torch::Tensor> out;
  torch::manual_seed(42);
  for (const auto& [name, in, o] : convs) {
    out[name + ".weight"] = torch::randn({o, in, 3, 3}) * 0.05;
    out[name + ".bias"] = torch::randn({o}) * 0.01;
  }
  return out;
}

}  // namespace

TEST(Backbone, PoolingScheduleAt256) {
  auto bb = FeatureBackbone::fallback(1);
  auto s = bb.features(torch::rand({1, 3, 256, 256}), {"conv1_2", "conv2_2", "conv3_4"}, {0.485, 0.456, 0.406},
                       {0.229, 0.224, 0.225});
  ASSERT_EQ(s.maps.size(), 3u);
  EXPECT_EQ(s.maps[0].size(2), 256);
  EXPECT_EQ(s.maps[1].size(2), 128);
  EXPECT_EQ(s.maps[2].size(2), 64);
  EXPECT_EQ(FeatureBackbone::stride_of("conv3_4"), 4);
}

TEST(Backbone, PoolingScheduleAt64AndDeterminism) {
  auto bb = FeatureBackbone::fallback(1);
  auto x = torch::rand({2, 3, 64, 64});
  auto a = bb.features(x, {"conv1_2", "conv2_2", "conv3_4"}, {0.5, 0.5, 0.5}, {0.25, 0.25, 0.25});
  auto b = bb.features(x, {"conv1_2", "conv2_2", "conv3_4"}, {0.5, 0.5, 0.5}, {0.25, 0.25, 0.25});
  EXPECT_EQ(a.maps[0].sizes(), (std::vector<int64_t>{2, 64, 64, 64}));
  EXPECT_EQ(a.maps[1].sizes(), (std::vector<int64_t>{2, 128, 32, 32}));
  EXPECT_EQ(a.maps[2].sizes(), (std::vector<int64_t>{2, 256, 16, 16}));
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(torch::equal(a.maps[i], b.maps[i]));
  EXPECT_GE(a.maps[2].min().item<float>(), 0.0f);
}

TEST(Backbone, FallbackIsSeeded) {
  auto x = torch::rand({1, 3, 16, 16});
  auto f = [&](std::uint64_t seed) {
    return FeatureBackbone::fallback(seed).features(x, {"conv2_1"}, {0, 0, 0}, {1, 1, 1}).maps[0];
  };
  EXPECT_TRUE(torch::equal(f(3), f(3)));
  EXPECT_FALSE(torch::equal(f(3), f(4)));
}

TEST(Backbone, GrayInputReplicated) {
  auto bb = FeatureBackbone::fallback(2);
  auto gray = torch::rand({1, 1, 16, 16});
  auto a = bb.features(gray, {"conv1_1"}, {0.4, 0.4, 0.4}, {0.2, 0.2, 0.2}).maps[0];
  auto b = bb.features(gray.expand({1, 3, 16, 16}), {"conv1_1"}, {0.4, 0.4, 0.4}, {0.2, 0.2, 0.2}).maps[0];
  EXPECT_TRUE(torch::allclose(a, b));
}

TEST(Backbone, WeightsFileRoundTrip) {
  testing_util::TempDir dir;
  auto tensors = vgg_shaped_tensors();
  write_weights_file(dir / "w.bin", tensors);
  auto back = read_weights_file(dir / "w.bin");
  ASSERT_EQ(back.size(), tensors.size());
  for (const auto& [k, v] : tensors) EXPECT_TRUE(torch::equal(back.at(k), v)) << k;
  auto bb = FeatureBackbone::from_weights_file(dir / "w.bin");
  EXPECT_TRUE(bb.pretrained());
  // conv1_1 by hand: relu(conv(normalized x) + b)
  auto x = torch::rand({1, 3, 8, 8});
  auto got = bb.features(x, {"conv1_1"}, {0, 0, 0}, {1, 1, 1}).maps[0];
  auto ref = torch::relu(torch::conv2d(x, tensors["conv1_1.weight"], tensors["conv1_1.bias"], 1, 1));
  EXPECT_TRUE(torch::allclose(got, ref, 1e-5, 1e-6));
}

TEST(Backbone, MissingOrBadWeights) {
  testing_util::TempDir dir;
  EXPECT_EQ(kind_of([&] { FeatureBackbone::from_weights_file(dir / "none.bin"); }), ErrorKind::kBackboneUnavailable);
  auto tensors = vgg_shaped_tensors();
  tensors["conv2_1.weight"] = torch::zeros({3, 3, 3, 3});
  write_weights_file(dir / "bad.bin", tensors);
  EXPECT_EQ(kind_of([&] { FeatureBackbone::from_weights_file(dir / "bad.bin"); }), ErrorKind::kBackboneUnavailable);
  PmConfig pm;
  ::unsetenv(kBackboneWeightsEnv);
  EXPECT_EQ(kind_of([&] { FeatureBackbone::from_config(pm, 0); }), ErrorKind::kBackboneUnavailable);
}

TEST(Backbone, EnvironmentOverridesWeightsPath) {
  testing_util::TempDir dir;
  write_weights_file(dir / "w.bin", vgg_shaped_tensors());
  PmConfig pm;
  pm.weights_path = (dir / "missing.bin").string();
  ::setenv(kBackboneWeightsEnv, (dir / "w.bin").c_str(), 1);
  EXPECT_TRUE(FeatureBackbone::from_config(pm, 0).pretrained());
  ::unsetenv(kBackboneWeightsEnv);
}

TEST(LayerDistance, ZeroAndConstantOffset) {
  auto a = torch::rand({2, 5, 4, 4});
  EXPECT_EQ(layer_distance(a, a, 4, 4).abs().max().item<float>(), 0.0f);
  auto d = layer_distance(a, a + 1, 8, 8);
  EXPECT_EQ(d.sizes(), (std::vector<int64_t>{2, 8, 8}));
  EXPECT_LE((d - 1).abs().max().item<float>(), 1e-6f);
}

TEST(LayerDistance, MatchesOracle) {
  torch::manual_seed(3);
  auto a = torch::rand({1, 3, 2, 2}, torch::kFloat64), b = torch::rand({1, 3, 2, 2}, torch::kFloat64);
  auto got = testing_util::to_vector(layer_distance(a, b, 2, 2));
  auto ref = oracle::layer_distance(volume_of(a[0]), volume_of(b[0]), 2, 2);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], ref[i], 1e-12);
  auto c = torch::rand({1, 4, 3, 5}, torch::kFloat64), e = torch::rand({1, 4, 3, 5}, torch::kFloat64);
  auto up = testing_util::to_vector(layer_distance(c, e, 12, 20));
  auto up_ref = oracle::layer_distance(volume_of(c[0]), volume_of(e[0]), 12, 20);
  for (std::size_t i = 0; i < up.size(); ++i) EXPECT_NEAR(up[i], up_ref[i], 1e-12);
}

TEST(AnomalyMap, IdenticalQuadrupleGivesZero) {
  PerceptualMeasurement pm(fallback_pm(), FeatureBackbone::fallback(0));
  ImageTensor x(torch::rand({3, 16, 16}));
  auto e = pm.anomaly_map(x, x, x, x);
  EXPECT_EQ(e.raw.abs().max().item<float>(), 0.0f);
  EXPECT_EQ(e.normalized.abs().max().item<float>(), 0.0f);
}

TEST(AnomalyMap, DoubledWeightsDoubleRawOnly) {
  auto cfg = fallback_pm();
  PerceptualMeasurement pm(cfg, FeatureBackbone::fallback(0));
  cfg.layer_weights = {2.0, 2.0, 2.0};
  PerceptualMeasurement pm2(cfg, FeatureBackbone::fallback(0));
  torch::manual_seed(4);
  ImageTensor x(torch::rand({3, 16, 16})), xh(torch::rand({3, 16, 16})), m(torch::rand({3, 16, 16})),
      mh(torch::rand({3, 16, 16}));
  auto a = pm.anomaly_map(x, xh, m, mh), b = pm2.anomaly_map(x, xh, m, mh);
  EXPECT_TRUE(torch::allclose(b.raw, 2 * a.raw, 1e-5, 1e-6));
  EXPECT_LE((a.normalized - b.normalized).abs().max().item<float>(), 1e-5f);
}

TEST(AnomalyMap, MatchesNineTermOracle) {
  auto cfg = fallback_pm();
  cfg.layer_weights = {0.5, 1.5, 2.0};
  PerceptualMeasurement pm(cfg, FeatureBackbone::fallback(5));
  torch::manual_seed(5);
  auto x = torch::rand({1, 3, 8, 8}), xh = torch::rand({1, 3, 8, 8}), m = torch::rand({1, 3, 8, 8}),
       mh = torch::rand({1, 3, 8, 8});
  oracle::Quadruple q;
  for (const auto* img : {&x, &xh, &m, &mh}) {
    auto stack = pm.features(*img);
    auto& dst = img == &x ? q.x : img == &xh ? q.x_hat : img == &m ? q.m : q.m_hat;
    for (const auto& map : stack.maps) dst.push_back(volume_of(map[0]));
  }
  for (int mask = 1; mask < 8; ++mask) {
    MeasurementTerms t{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0};
    auto got = testing_util::to_vector(pm.raw_maps(x, xh, m, mh, t)[0]);
    auto ref = oracle::anomaly_map(q, cfg.layer_weights, t.input_reconstruction, t.impression_naive,
                                   t.input_impression, 8, 8);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], ref[i], 1e-5) << "terms " << mask;
  }
}

TEST(AnomalyMap, PixelModes) {
  auto cfg = fallback_pm();
  torch::manual_seed(6);
  auto x = torch::rand({1, 3, 8, 8}), xh = torch::rand({1, 3, 8, 8}), m = torch::rand({1, 3, 8, 8}),
       mh = torch::rand({1, 3, 8, 8});
  auto check = [&](MeasurementMode mode, const torch::Tensor& a, const torch::Tensor& b) {
    cfg.mode = mode;
    PerceptualMeasurement pm(cfg, FeatureBackbone::fallback(0));
    EXPECT_TRUE(torch::allclose(pm.raw_maps(x, xh, m, mh), (a - b).abs().mean(1)));
  };
  check(MeasurementMode::kPixelInputReconstruction, x, xh);
  check(MeasurementMode::kPixelInputImpression, x, m);
  check(MeasurementMode::kPixelImpressionNaive, m, mh);
}

TEST(AnomalyMap, ExpertTermsOffNeedOnlyImpression) {
  PerceptualMeasurement pm(fallback_pm(), FeatureBackbone::fallback(0));
  auto x = torch::rand({2, 3, 16, 16}), m = torch::rand({2, 3, 16, 16});
  MeasurementTerms t = MeasurementTerms::from_ablation({true, false, true, true});
  EXPECT_FALSE(t.input_reconstruction);
  EXPECT_FALSE(t.impression_naive);
  EXPECT_EQ(pm.raw_maps(x, {}, m, {}, t).sizes(), (std::vector<int64_t>{2, 16, 16}));
  EXPECT_EQ(kind_of([&] { pm.raw_maps(x, {}, m, {}, MeasurementTerms{}); }), ErrorKind::kShapeError);
}

TEST(Normalize, MinMaxAndConstant) {
  auto raw = torch::tensor({{1.0f, 2.0f}, {3.0f, 5.0f}});
  auto e = normalize_map(raw, MapNormalization::kMinMax);
  EXPECT_FLOAT_EQ(e.normalized[0][0].item<float>(), 0.0f);
  EXPECT_FLOAT_EQ(e.normalized[1][0].item<float>(), 0.5f);
  EXPECT_FLOAT_EQ(e.normalized[1][1].item<float>(), 1.0f);
  EXPECT_EQ(normalize_map(torch::full({3, 3}, 4.0), MapNormalization::kMinMax).normalized.abs().max().item<float>(), 0.0f);
}

TEST(Normalize, PercentileMatchesOracle) {
  torch::manual_seed(7);
  auto raw = torch::rand({9, 11}, torch::kFloat64);
  auto e = normalize_map(raw, MapNormalization::kPercentile, 5, 95);
  const auto v = testing_util::to_vector(raw);
  EXPECT_NEAR(e.norm_low, oracle::percentile(v, 5), 1e-6);
  EXPECT_NEAR(e.norm_high, oracle::percentile(v, 95), 1e-6);
  EXPECT_GE(e.normalized.min().item<float>(), 0.0f);
  EXPECT_LE(e.normalized.max().item<float>(), 1.0f);
}

TEST(Segment, StrictThreshold) {
  AnomalyMap e;
  e.normalized = torch::tensor({{0.7f, 0.5f}, {0.49f, 1.0f}});
  auto y = segment(e, 0.5).y.tensor();
  EXPECT_EQ(y[0][0].item<int>(), 1);
  EXPECT_EQ(y[0][1].item<int>(), 0);
  EXPECT_EQ(y[1][0].item<int>(), 0);
  EXPECT_EQ(y[1][1].item<int>(), 1);
  e.normalized = torch::zeros({4, 4});
  EXPECT_EQ(segment(e, 0.5).y.count(), 0);
  EXPECT_EQ(kind_of([&] { segment(e, 1.5); }), ErrorKind::kInvalidThreshold);
  EXPECT_EQ(kind_of([&] { segment(e, -0.1); }), ErrorKind::kInvalidThreshold);
}

TEST(ImageScore, TopKCases) {
  EXPECT_EQ(image_score(torch::zeros({8, 8})), 0.0);
  EXPECT_NEAR(image_score(torch::full({8, 8}, 0.3)), 0.3, 1e-7);
  auto small = torch::rand({10, 10}) * 0.5;
  small[4][6] = 1.0;
  EXPECT_DOUBLE_EQ(image_score(small, 0.01), 1.0);
  auto big = torch::rand({100, 100}) * 0.5;
  big.slice(0, 10, 20).slice(1, 30, 40).fill_(1.0);
  EXPECT_DOUBLE_EQ(image_score(big, 0.01), 1.0);
  auto r = torch::rand({13, 17}, torch::kFloat64);
  EXPECT_NEAR(image_score(r, 0.05), oracle::top_k_mean(testing_util::to_vector(r), 12), 1e-12);
}
