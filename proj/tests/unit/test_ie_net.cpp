#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "impress/error.hpp"
#include "impress/ie_net.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace impress;

namespace {

IeArchitecture tiny_arch(int size = 16) {
  IeArchitecture a;
  a.image_size = size;
  a.channels = 3;
  a.widths = {8, 8};
  a.latent_dim = 6;
  a.moment_hidden = 10;
  a.disc_hidden = 10;
  return a;
}

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

}  // namespace

TEST(IeNet, EncodeFullSizeShape) {
  torch::manual_seed(0);
  IENet net(IeArchitecture{});
  auto z = net->encode(ImageTensor(torch::rand({3, 256, 256})));
  EXPECT_EQ(z.z.sizes(), (std::vector<int64_t>{256}));
}

TEST(IeNet, ImpressionFullSizeShape) {
  torch::manual_seed(0);
  IENet net(IeArchitecture{});
  auto m = net->extract_impression(ImageTensor(torch::rand({3, 256, 256})));
  EXPECT_EQ(m.tensor().sizes(), (std::vector<int64_t>{3, 256, 256}));
}

TEST(IeNet, EncodeIsDeterministic) {
  torch::manual_seed(1);
  IENet net(tiny_arch());
  ImageTensor x(torch::rand({3, 16, 16}));
  EXPECT_TRUE(torch::equal(net->encode(x).z, net->encode(x).z));
}

TEST(IeNet, BatchedEncodingMatchesPerItem) {
  torch::manual_seed(2);
  IENet net(tiny_arch());
  torch::NoGradGuard g;
  auto batch = torch::rand({5, 3, 16, 16});
  auto z = net->encode(batch);
  for (int64_t i = 0; i < 5; ++i) {
    auto zi = net->encode(ImageTensor(batch[i])).z;
    EXPECT_LE((z[i] - zi).abs().max().item<float>(), 1e-5f);
  }
}

TEST(IeNet, WrongSizeIsShapeError) {
  IENet net(tiny_arch());
  EXPECT_EQ(kind_of([&] { net->encode(torch::rand({1, 3, 20, 20})); }), ErrorKind::kShapeError);
  EXPECT_EQ(kind_of([&] { net->encode(torch::rand({1, 1, 16, 16})); }), ErrorKind::kShapeError);
}

TEST(IeNet, MomentsPositiveDeterministicAndOrderInvariant) {
  torch::manual_seed(3);
  IENet net(tiny_arch());
  torch::NoGradGuard g;
  auto z = torch::randn({7, 6}) * 3;
  auto a = net->estimate_moments(z);
  auto b = net->estimate_moments(z);
  EXPECT_TRUE((a.sigma > 0).all().item<bool>());
  EXPECT_TRUE(torch::equal(a.mu, b.mu));
  EXPECT_TRUE(torch::equal(a.sigma, b.sigma));
  auto perm = torch::randperm(7);
  auto c = net->estimate_moments(z.index_select(0, perm));
  EXPECT_LE((a.mu - c.mu).abs().max().item<float>(), 1e-6f);
  EXPECT_LE((a.sigma - c.sigma).abs().max().item<float>(), 1e-6f);
  auto per = net->estimate_moments(z, KlMode::kPerSample);
  EXPECT_EQ(per.mu.sizes(), (std::vector<int64_t>{7, 6}));
  EXPECT_TRUE((per.sigma > 0).all().item<bool>());
}

TEST(IeNet, UntrainedMomentsMatchBatchStatistics) {
  torch::manual_seed(5);
  IENet net(tiny_arch());
  torch::NoGradGuard g;
  auto z = torch::randn({9, 6}) * 2 + 1;
  auto m = net->estimate_moments(z);
  auto mean = z.mean(0);
  auto sd = (z.var(0, false) + 1e-6).sqrt();
  EXPECT_LE((m.mu.reshape({-1}) - mean).abs().max().item<float>(), 1e-5f);
  EXPECT_LE((m.sigma.reshape({-1}) - sd).abs().max().item<float>(), 1e-4f);
}

TEST(IeNet, DiscriminatorRange) {
  torch::manual_seed(4);
  IENet net(tiny_arch());
  torch::NoGradGuard g;
  auto x = torch::rand({4, 3, 16, 16});
  auto z = torch::randn({4, 6});
  auto t = net->discriminate(x, z);
  EXPECT_TRUE(((t > 0) & (t < 1)).all().item<bool>());
  EXPECT_TRUE(torch::equal(t, net->discriminate(x, z)));
  net->disc->final_layer()->weight.zero_();
  net->disc->final_layer()->bias.zero_();
  EXPECT_TRUE(torch::allclose(net->discriminate(x, z), torch::full({4}, 0.5)));
}

TEST(MiLoss, HalfProbabilitiesGiveTwoLnTwo) {
  auto l = mi_discriminator_loss(torch::full({6}, 0.5), torch::full({6}, 0.5));
  EXPECT_NEAR(l.item<double>(), 2 * std::log(2.0), 1e-6);
}

TEST(MiLoss, HandEvaluatedCase) {
  auto l = mi_discriminator_loss(torch::full({3}, 0.9, torch::kFloat64), torch::full({3}, 0.1, torch::kFloat64));
  EXPECT_NEAR(l.item<double>(), -2 * std::log(0.9), 1e-9);
  EXPECT_NEAR(l.item<double>(), 0.21072103, 1e-7);
}

TEST(MiLoss, PerfectDiscriminationApproachesZero) {
  auto l = mi_discriminator_loss(torch::full({2}, 1.0 - 1e-9, torch::kFloat64), torch::full({2}, 1e-9, torch::kFloat64));
  EXPECT_LT(l.item<double>(), 1e-6);
  EXPECT_TRUE(std::isfinite(mi_discriminator_loss(torch::ones({2}), torch::ones({2})).item<double>()));
}

TEST(MiLoss, BatchOfOneIsTooSmall) {
  EXPECT_EQ(kind_of([] { mi_discriminator_loss(torch::full({1}, 0.5), torch::full({1}, 0.5)); }),
            ErrorKind::kBatchTooSmall);
}

TEST(MiLoss, MatchesOracleOnRandomInputs) {
  torch::manual_seed(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto pos = torch::rand({8}, torch::kFloat64);
    auto neg = torch::rand({8}, torch::kFloat64);
    EXPECT_NEAR(mi_discriminator_loss(pos, neg).item<double>(),
                oracle::mi_loss(testing_util::to_vector(pos), testing_util::to_vector(neg), kProbabilityClamp), 1e-9);
  }
}

TEST(KlGaussian, ClosedFormCases) {
  auto kl = [](std::vector<double> mu, std::vector<double> sigma) {
    return kl_gaussian({torch::tensor(mu, torch::kFloat64), torch::tensor(sigma, torch::kFloat64)}).item<double>();
  };
  EXPECT_NEAR(kl({0, 0, 0}, {1, 1, 1}), 0.0, 1e-12);
  EXPECT_NEAR(kl({1}, {1}), 0.5, 1e-12);
  EXPECT_NEAR(kl({0}, {std::sqrt(std::numbers::e)}), 0.5 * (std::numbers::e - 2), 1e-12);
  EXPECT_NEAR(0.5 * (std::numbers::e - 2), 0.35914091, 1e-8);
}

TEST(KlGaussian, MonteCarloCrossCheck) {
  const double mc = oracle::kl_monte_carlo(0.0, std::sqrt(std::numbers::e), 400000, 11);
  EXPECT_NEAR(mc, 0.5 * (std::numbers::e - 2), 0.02);
}

TEST(KlGaussian, InvalidMoments) {
  EXPECT_EQ(kind_of([] { kl_gaussian({torch::zeros({2}), torch::tensor({1.0f, 0.0f})}); }), ErrorKind::kInvalidMoments);
  EXPECT_EQ(kind_of([] { kl_gaussian({torch::zeros({2}), torch::ones({3})}); }), ErrorKind::kInvalidMoments);
}

TEST(ReconstructionLoss, Cases) {
  auto x = torch::rand({2, 3, 4, 4}) * 0.8;
  EXPECT_EQ(l1_distance(x, x).item<float>(), 0.0f);
  EXPECT_NEAR(l1_distance(x + 0.1, x).item<float>(), 0.1f, 1e-6f);
  auto a = torch::rand({2, 3, 4, 4}, torch::kFloat64), b = torch::rand({2, 3, 4, 4}, torch::kFloat64);
  EXPECT_NEAR(l1_distance(a, b).item<double>(),
              oracle::mean_abs_diff(testing_util::to_vector(a), testing_util::to_vector(b)), 1e-12);
}

TEST(IeTotalLoss, WeightedSums) {
  auto s = [](double v) { return torch::tensor(v, torch::kFloat64); };
  EXPECT_NEAR(combine_ie_loss(s(0.7), s(0.2), s(0.3), 0, 0).total.item<double>(), 0.7, 1e-12);
  EXPECT_NEAR(combine_ie_loss(s(1.0), s(0.2), s(0.3), 1, 1).total.item<double>(), 1.5, 1e-12);
  EXPECT_NEAR(combine_ie_loss(s(1.3863), s(0.5), s(0.1), 0.5, 10).total.item<double>(), 2.6363, 1e-9);
}

TEST(IeTotalLoss, LossTermsAreConsistent) {
  torch::manual_seed(6);
  IENet net(tiny_arch());
  std::mt19937_64 rng(1);
  auto x = torch::rand({4, 3, 16, 16});
  auto neg = sample_negatives(4, 6, rng);
  IeLossWeights w;
  w.lambda_kl = 0.5;
  w.lambda_rec = 3.0;
  auto t = net->loss(x, neg, w);
  EXPECT_NEAR(t.total.item<double>(), t.mi.item<double>() + 0.5 * t.kl.item<double>() + 3.0 * t.recon.item<double>(),
              1e-5);
  w.use_mi = false;
  auto plain = net->loss(x, {}, w);
  EXPECT_EQ(plain.mi.item<float>(), 0.0f);
  EXPECT_NEAR(plain.total.item<double>(), 3.0 * plain.recon.item<double>(), 1e-6);
}

TEST(Negatives, DerangementHasNoFixedPoints) {
  std::mt19937_64 rng(3);
  for (int n = 2; n < 12; ++n) {
    auto p = random_derangement(n, rng);
    std::vector<int64_t> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < n; ++i) {
      EXPECT_NE(p[i], i);
      EXPECT_EQ(sorted[i], i);
    }
  }
  EXPECT_EQ(kind_of([&] { random_derangement(1, rng); }), ErrorKind::kBatchTooSmall);
}

TEST(Negatives, SeededStreamsRepeat) {
  std::mt19937_64 a(9), b(9);
  auto x = sample_negatives(5, 4, a);
  auto y = sample_negatives(5, 4, b);
  EXPECT_EQ(x.permutation, y.permutation);
  EXPECT_TRUE(torch::equal(x.noise, y.noise));
}

TEST(IeNet, ImpressionDeterministic) {
  torch::manual_seed(7);
  IENet net(tiny_arch());
  ImageTensor x(torch::rand({3, 16, 16}));
  EXPECT_TRUE(torch::equal(net->extract_impression(x).tensor(), net->extract_impression(x).tensor()));
}
