#include <gtest/gtest.h>

#include "cli.hpp"
#include "impress/image.hpp"
#include "test_util.hpp"

using namespace impress;
using testing_util::TempDir;

namespace {

const std::vector<std::string> kTiny{"--preset", "small",
                                     "--set", "data.image_size=16",
                                     "--set", "ie.blocks=2",
                                     "--set", "ie.widths=[8,8]",
                                     "--set", "ie.latent_dim=6",
                                     "--set", "ie.moment_hidden=8",
                                     "--set", "ie.disc_hidden=8",
                                     "--set", "ie.epochs=1",
                                     "--set", "ie.batch_size=2",
                                     "--set", "expert.base_width=8",
                                     "--set", "expert.detail_width=8",
                                     "--set", "expert.mlp_hidden=8",
                                     "--set", "expert.epochs=1",
                                     "--set", "expert.batch_size=2",
                                     "--set", "pm.backbone=fallback",
                                     "--set", "threads=1"};

int run(std::vector<std::string> args, const std::filesystem::path& out, bool tiny = true, bool synthetic = true) {
  std::vector<std::string> full{"impress"};
  full.insert(full.end(), args.begin(), args.end());
  full.insert(full.end(), {"-o", out.string()});
  if (tiny) full.insert(full.end(), kTiny.begin(), kTiny.end());
  if (synthetic) full.insert(full.end(), {"--format", "synthetic", "--n-clean", "6", "--n-defect", "3"});
  return cli::run(full);
}

}  // namespace

TEST(Cli, ExitCodeTable) {
  EXPECT_EQ(cli::exit_code(ErrorKind::kConfigParseError), 2);
  EXPECT_EQ(cli::exit_code(ErrorKind::kDatasetNotFound), 3);
  EXPECT_EQ(cli::exit_code(ErrorKind::kUnknownClass), 3);
  EXPECT_EQ(cli::exit_code(ErrorKind::kModelNotReady), 4);
  EXPECT_EQ(cli::exit_code(ErrorKind::kStaleImpressions), 4);
  EXPECT_EQ(cli::exit_code(ErrorKind::kBackboneUnavailable), 4);
  EXPECT_EQ(cli::exit_code(ErrorKind::kTrainingDiverged), 5);
  EXPECT_EQ(cli::exit_code(ErrorKind::kIoError), 1);
}

TEST(Cli, UsageErrors) {
  TempDir dir;
  EXPECT_EQ(cli::run({"impress", "bogus"}), 2);
  EXPECT_EQ(run({"train-ie", "--set", "no.such.key=1"}, dir / "r"), 2);
  EXPECT_EQ(run({"train-ie", "-c", (dir / "missing.yaml").string()}, dir / "r"), 2);
  EXPECT_EQ(run({"prepare", "--format", "folder", "--data", (dir / "nothing").string()}, dir / "r", true, false), 3);
  EXPECT_EQ(run({"prepare", "--format", "synthetic", "--n-clean", "0"}, dir / "r", true, false), 3);
}

TEST(Cli, HelpListsConfigKeys) {
  testing::internal::CaptureStdout();
  EXPECT_EQ(cli::run({"impress", "--help"}), 0);
  const auto out = testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("ie.lambda_rec"), std::string::npos);
  EXPECT_NE(out.find("ablation.use_detail_guidance"), std::string::npos);
  EXPECT_NE(out.find("IMPRESS_BACKBONE_WEIGHTS"), std::string::npos);
}

TEST(Cli, MissingModelsExitFour) {
  TempDir dir;
  EXPECT_EQ(run({"evaluate"}, dir / "r"), 4);
  EXPECT_EQ(run({"train-expert"}, dir / "r"), 4);
  EXPECT_EQ(run({"detect", "--image", (dir / "x.png").string()}, dir / "r", true, false), 4);
}

TEST(Cli, FullChainAndDetectArtifacts) {
  TempDir dir;
  const auto out = dir / "r";
  ASSERT_EQ(run({"prepare"}, out), 0);
  ASSERT_EQ(run({"train-ie"}, out), 0);
  ASSERT_EQ(run({"impress"}, out), 0);
  ASSERT_EQ(run({"impress"}, out), 0);
  ASSERT_EQ(run({"train-expert"}, out), 0);
  ASSERT_EQ(run({"evaluate", "--csv", (out / "report.csv").string()}, out), 0);
  EXPECT_TRUE(std::filesystem::exists(out / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(out / "report.csv"));
  ASSERT_EQ(run({"visualize", "--limit", "2"}, out), 0);
  EXPECT_TRUE(std::filesystem::exists(out / "figures" / "00000.png"));

  testing_util::write_png(dir / "probe.png", testing_util::noise_image(20, 24, CV_8UC3, 5));
  const auto det = dir / "det";
  ASSERT_EQ(run({"detect", "--image", (dir / "probe.png").string(), "--out-dir", det.string()}, out, true, false), 0);
  std::size_t png = 0, npy = 0;
  for (const auto& e : std::filesystem::directory_iterator(det)) {
    png += e.path().extension() == ".png";
    npy += e.path().extension() == ".npy";
  }
  EXPECT_EQ(png, 5u);
  EXPECT_EQ(npy, 1u);
  auto map = read_npy(det / "probe_map.npy");
  EXPECT_EQ(map.sizes(), (std::vector<int64_t>{16, 16}));
}

TEST(Cli, DivergenceExitsFive) {
  TempDir dir;
  EXPECT_EQ(run({"train-ie", "--set", "ie.optimizer=sgd", "--set", "ie.lr=1e30", "--set", "ie.epochs=5"}, dir / "r"), 5);
  EXPECT_TRUE(std::filesystem::exists(dir / "r" / "checkpoints" / "ie_latest.pt"));
}
