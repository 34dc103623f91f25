#include <gtest/gtest.h>

#include <fstream>

#include "impress/checkpoint.hpp"
#include "impress/colormap.hpp"
#include "impress/error.hpp"
#include "impress/ie_net.hpp"
#include "test_util.hpp"

using namespace impress;

namespace {

IeArchitecture arch(int latent = 6) {
  IeArchitecture a;
  a.image_size = 16;
  a.widths = {8, 8};
  a.latent_dim = latent;
  a.moment_hidden = 8;
  a.disc_hidden = 8;
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

CheckpointMeta meta(const std::string& fp) {
  CheckpointMeta m;
  m.kind = "ie-net";
  m.arch_fingerprint = fp;
  m.config_fingerprint = "cfg";
  m.image_size = 16;
  m.step = 12;
  m.epoch = 3;
  m.loss = 0.25;
  m.config_yaml = "seed: 1\n";
  return m;
}

}  // namespace

TEST(Checkpoint, RoundTripRestoresWeightsAndMeta) {
  testing_util::TempDir dir;
  torch::manual_seed(1);
  IENet a(arch());
  save_checkpoint(dir / "c.pt", *a, meta("fp1"));
  torch::manual_seed(2);
  IENet b(arch());
  EXPECT_NE(weights_digest(*a), weights_digest(*b));
  auto m = load_checkpoint(dir / "c.pt", *b, "ie-net", "fp1", 16);
  EXPECT_EQ(weights_digest(*a), weights_digest(*b));
  EXPECT_EQ(m.step, 12);
  EXPECT_EQ(m.epoch, 3);
  EXPECT_DOUBLE_EQ(m.loss, 0.25);
  EXPECT_EQ(m.config_yaml, "seed: 1\n");
  EXPECT_EQ(read_checkpoint_meta(dir / "c.pt").arch_fingerprint, "fp1");
}

TEST(Checkpoint, MismatchesAreRefused) {
  testing_util::TempDir dir;
  IENet a(arch());
  save_checkpoint(dir / "c.pt", *a, meta("fp1"));
  IENet b(arch());
  EXPECT_EQ(kind_of([&] { load_checkpoint(dir / "c.pt", *b, "ie-net", "other", 16); }), ErrorKind::kFingerprintMismatch);
  EXPECT_EQ(kind_of([&] { load_checkpoint(dir / "c.pt", *b, "ie-net", "fp1", 32); }), ErrorKind::kFingerprintMismatch);
  EXPECT_EQ(kind_of([&] { load_checkpoint(dir / "c.pt", *b, "expert-net", "fp1", 16); }), ErrorKind::kFingerprintMismatch);
}

TEST(Checkpoint, MissingOrCorruptIsModelNotReady) {
  testing_util::TempDir dir;
  IENet a(arch());
  EXPECT_EQ(kind_of([&] { load_checkpoint(dir / "none.pt", *a, "ie-net", "x", 16); }), ErrorKind::kModelNotReady);
  std::ofstream(dir / "bad.pt") << "garbage";
  EXPECT_EQ(kind_of([&] { read_checkpoint_meta(dir / "bad.pt"); }), ErrorKind::kModelNotReady);
}

TEST(Colormap, PaletteAnchorsAndMonotoneEnds) {
  const auto& lut = heatmap_palette();
  EXPECT_EQ(lut[0], (Rgb{0, 0, 128}));
  EXPECT_EQ(lut[64], (Rgb{0, 0, 255}));
  EXPECT_EQ(lut[112], (Rgb{0, 255, 255}));
  EXPECT_EQ(lut[144], (Rgb{255, 255, 0}));
  EXPECT_EQ(lut[192], (Rgb{255, 0, 0}));
  EXPECT_EQ(lut[255], (Rgb{128, 0, 0}));
  EXPECT_EQ(lut[32], (Rgb{0, 0, 192}));
}

TEST(Colormap, ApplyHeatmapIndexesPalette) {
  auto map = torch::tensor({{0.0f, 1.0f}, {0.5f, 0.25f}});
  auto rgb = apply_heatmap(map);
  ASSERT_EQ(rgb.sizes(), (std::vector<int64_t>{3, 2, 2}));
  const auto& lut = heatmap_palette();
  auto px = [&](int y, int x) {
    return Rgb{rgb[0][y][x].item<uint8_t>(), rgb[1][y][x].item<uint8_t>(), rgb[2][y][x].item<uint8_t>()};
  };
  EXPECT_EQ(px(0, 0), lut[0]);
  EXPECT_EQ(px(0, 1), lut[255]);
  EXPECT_EQ(px(1, 0), lut[128]);
  EXPECT_EQ(px(1, 1), lut[64]);
  EXPECT_TRUE(torch::equal(apply_heatmap(map), rgb));
}
