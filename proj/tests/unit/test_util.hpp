#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "impress/config.hpp"

namespace testing_util {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "impress") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline void write_png(const std::filesystem::path& p, const cv::Mat& m) {
  std::filesystem::create_directories(p.parent_path());
  cv::imwrite(p.string(), m);
}

inline cv::Mat noise_image(int h, int w, int type, unsigned seed) {
  cv::Mat m(h, w, type);
  cv::RNG rng(seed);
  rng.fill(m, cv::RNG::UNIFORM, 0, 255);
  return m;
}

inline std::vector<double> to_vector(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat64).contiguous().flatten();
  return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

/// 16 px, two narrow blocks, one epoch: fast enough for unit tests.
inline impress::ExperimentConfig tiny_config() {
  auto c = impress::small_dataset_defaults();
  c.data.image_size = 16;
  c.ie.blocks = 2;
  c.ie.widths = {8, 8};
  c.ie.latent_dim = 6;
  c.ie.moment_hidden = 8;
  c.ie.disc_hidden = 8;
  c.ie.epochs = 1;
  c.ie.batch_size = 2;
  c.ie.optimizer = impress::OptimizerKind::kAdam;
  c.expert.base_width = 8;
  c.expert.res_blocks = 1;
  c.expert.detail_dim = 4;
  c.expert.detail_width = 8;
  c.expert.mlp_hidden = 8;
  c.expert.epochs = 1;
  c.expert.batch_size = 2;
  c.pm.backbone = impress::BackboneMode::kFallback;
  c.seed = 3;
  c.threads = 1;
  return c;
}

}  // namespace testing_util
