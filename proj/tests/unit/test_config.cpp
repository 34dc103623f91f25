#include <gtest/gtest.h>

#include "impress/config.hpp"
#include "impress/error.hpp"
#include "test_util.hpp"

using namespace impress;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kIoError;
}

}  // namespace

TEST(Config, MvtecScheduleDefaults) {
  const auto c = mvtec_defaults();
  EXPECT_EQ(c.data.image_size, 256);
  EXPECT_EQ(c.ie.optimizer, OptimizerKind::kSgd);
  EXPECT_DOUBLE_EQ(c.ie.lr, 1e-3);
  EXPECT_DOUBLE_EQ(c.ie.momentum, 0.9);
  EXPECT_EQ(c.ie.epochs, 200);
  EXPECT_EQ(c.ie.batch_size, 4);
  EXPECT_EQ(c.expert.optimizer, OptimizerKind::kAdam);
  EXPECT_DOUBLE_EQ(c.expert.lr, 1e-3);
  EXPECT_EQ(c.ie.blocks, 4);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, SmallDatasetDefaults) {
  const auto c = small_dataset_defaults();
  EXPECT_EQ(c.data.image_size, 64);
  EXPECT_EQ(c.ie.epochs, 20);
  EXPECT_EQ(c.expert.epochs, 20);
  EXPECT_LT(c.ie.blocks, mvtec_defaults().ie.blocks);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, YamlRoundTrip) {
  auto c = mvtec_defaults();
  apply_override(c, "ie.widths=[8, 16, 24, 32]");
  apply_override(c, "pm.alpha", "0.35");
  apply_override(c, "ablation.use_detail_guidance", "false");
  apply_override(c, "pm.layers", "[conv1_1, conv3_4]");
  apply_override(c, "pm.layer_weights", "[0.25, 2]");
  apply_override(c, "seed", "12345678901");
  apply_override(c, "ie.kl_mode", "per_sample");
  const auto text = to_yaml(c);
  const auto back = parse_config(text, small_dataset_defaults());
  EXPECT_EQ(to_yaml(back), text);
  EXPECT_EQ(back.ie.widths, (std::vector<int>{8, 16, 24, 32}));
  EXPECT_DOUBLE_EQ(back.pm.alpha, 0.35);
  EXPECT_FALSE(back.ablation.use_detail_guidance);
  EXPECT_EQ(back.seed, 12345678901ULL);
  EXPECT_EQ(back.ie.kl_mode, KlMode::kPerSample);
  EXPECT_EQ(config_fingerprint(back), config_fingerprint(c));
}

TEST(Config, FileRoundTrip) {
  testing_util::TempDir dir;
  auto c = small_dataset_defaults();
  c.expert.w_s = 0.5;
  save_config(c, dir / "c.yaml");
  EXPECT_EQ(to_yaml(load_config(dir / "c.yaml")), to_yaml(c));
}

TEST(Config, PartialYamlKeepsBase) {
  const auto c = parse_config("ie:\n  lr: 0.01\nseed: 3\n", small_dataset_defaults());
  EXPECT_DOUBLE_EQ(c.ie.lr, 0.01);
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.data.image_size, 64);
}

TEST(Config, UnknownKeysRejected) {
  auto c = mvtec_defaults();
  EXPECT_EQ(kind_of([&] { apply_override(c, "ie.learning_rate=0.1"); }), ErrorKind::kConfigParseError);
  EXPECT_EQ(kind_of([&] { parse_config("ie:\n  bogus: 1\n"); }), ErrorKind::kConfigParseError);
  EXPECT_EQ(kind_of([&] { apply_override(c, "no-equals-sign"); }), ErrorKind::kConfigParseError);
}

TEST(Config, OverridesAreTypeChecked) {
  auto c = mvtec_defaults();
  EXPECT_EQ(kind_of([&] { apply_override(c, "ie.epochs", "ten"); }), ErrorKind::kConfigParseError);
  EXPECT_EQ(kind_of([&] { apply_override(c, "ie.epochs", "2.5"); }), ErrorKind::kConfigParseError);
  EXPECT_EQ(kind_of([&] { apply_override(c, "ie.lr", "fast"); }), ErrorKind::kConfigParseError);
  EXPECT_EQ(kind_of([&] { apply_override(c, "ablation.use_mi_loss", "maybe"); }), ErrorKind::kConfigParseError);
  EXPECT_EQ(kind_of([&] { apply_override(c, "pm.backbone", "resnet"); }), ErrorKind::kConfigParseError);
  EXPECT_EQ(kind_of([&] { parse_config("ie: [1, 2]\n"); }), ErrorKind::kConfigParseError);
  EXPECT_EQ(kind_of([&] { parse_config("ie:\n  lr: [1\n"); }), ErrorKind::kConfigParseError);
}

TEST(Config, ValidateRejectsBadValues) {
  auto bad = [](auto mutate) {
    auto c = mvtec_defaults();
    mutate(c);
    return kind_of([&] { validate(c); });
  };
  EXPECT_EQ(bad([](ExperimentConfig& c) { c.ie.lr = 0; }), ErrorKind::kConfigParseError);
  EXPECT_EQ(bad([](ExperimentConfig& c) { c.expert.lr = -1; }), ErrorKind::kConfigParseError);
  EXPECT_EQ(bad([](ExperimentConfig& c) { c.pm.alpha = 1.5; }), ErrorKind::kConfigParseError);
  EXPECT_EQ(bad([](ExperimentConfig& c) { c.data.image_size = 100; }), ErrorKind::kConfigParseError);
  EXPECT_EQ(bad([](ExperimentConfig& c) { c.pm.layer_weights = {1.0}; }), ErrorKind::kConfigParseError);
  EXPECT_EQ(bad([](ExperimentConfig& c) { c.ie.widths = {64, 128, 256}; }), ErrorKind::kConfigParseError);
  EXPECT_EQ(bad([](ExperimentConfig& c) { c.expert.res_blocks = 0; }), ErrorKind::kConfigParseError);
  EXPECT_EQ(bad([](ExperimentConfig& c) { c.data.channels = 2; }), ErrorKind::kConfigParseError);
}

TEST(Config, HelpListsEveryKeyWithDefault) {
  const auto help = schema_help();
  for (const auto& key : config_schema()) {
    EXPECT_NE(help.find(key.name + " <"), std::string::npos) << key.name;
    EXPECT_NE(help.find(key.format(mvtec_defaults())), std::string::npos) << key.name;
  }
}

TEST(Config, ArchitectureFingerprintsTrackShapes) {
  auto a = mvtec_defaults();
  auto b = a;
  b.ie.lr = 0.5;
  b.expert.epochs = 3;
  EXPECT_EQ(ie_fingerprint(a), ie_fingerprint(b));
  EXPECT_EQ(expert_fingerprint(a), expert_fingerprint(b));
  EXPECT_NE(config_fingerprint(a), config_fingerprint(b));
  b.ie.latent_dim = 128;
  EXPECT_NE(ie_fingerprint(a), ie_fingerprint(b));
  EXPECT_EQ(expert_fingerprint(a), expert_fingerprint(b));
  b.expert.detail_dim = 4;
  EXPECT_NE(expert_fingerprint(a), expert_fingerprint(b));
}
