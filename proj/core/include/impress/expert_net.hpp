#pragma once

#include <torch/torch.h>

#include <cstdint>

#include "impress/config.hpp"
#include "impress/image.hpp"

namespace impress {

inline constexpr double kAdaInEpsilon = 1e-5;

/// AdaIN(k, gamma, beta) = gamma * (k - mean(k)) / std(k) + beta, with
/// per-sample, per-channel population statistics and std = sqrt(var + eps).
/// k is B x C x H x W (or C x H x W); gamma and beta are B x C or C.
torch::Tensor adain(const torch::Tensor& k, const torch::Tensor& gamma, const torch::Tensor& beta,
                    double eps = kAdaInEpsilon);

/// Channel-wise mean f(k) and standard deviation g(k) used by adain().
std::pair<torch::Tensor, torch::Tensor> channel_moments(const torch::Tensor& k, double eps = kAdaInEpsilon);

struct ExpertArchitecture {
  int image_size = 256;
  int channels = 3;
  int base_width = 64;
  int res_blocks = 2;
  int detail_dim = 8;
  int detail_width = 32;
  int mlp_hidden = 256;

  static ExpertArchitecture from_config(const ExperimentConfig& config);
  int content_width() const { return 4 * base_width; }
  /// Number of AdaIN layers (two per residual block of D_X^A).
  int adain_layers() const { return 2 * res_blocks; }
};

/// E_X: 7x7 conv, two stride-2 4x4 convs, a 3x3 conv (instance norm + ReLU
/// each) followed by instance-normalized residual blocks.
class ContentEncoderImpl : public torch::nn::Module {
 public:
  explicit ContentEncoderImpl(const ExpertArchitecture& arch);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential convs_{nullptr};
  torch::nn::ModuleList res_;
};
TORCH_MODULE(ContentEncoder);

/// Residual block; normalization is AdaIN when gamma/beta are supplied,
/// instance normalization otherwise.
class ResidualBlockImpl : public torch::nn::Module {
 public:
  explicit ResidualBlockImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);
  /// gamma/beta: B x 2C (first C for the first conv, next C for the second).
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& gamma, const torch::Tensor& beta);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
};
TORCH_MODULE(ResidualBlock);

/// D_X: residual blocks, two (2x upsample + conv) blocks, a 3x3 conv block and
/// a 7x7 output convolution with sigmoid.
class ImageDecoderImpl : public torch::nn::Module {
 public:
  explicit ImageDecoderImpl(const ExpertArchitecture& arch);
  torch::Tensor forward(const torch::Tensor& content);
  /// gamma/beta: B x (adain_layers * C).
  torch::Tensor forward(const torch::Tensor& content, const torch::Tensor& gamma, const torch::Tensor& beta);

 private:
  torch::Tensor upsample(const torch::Tensor& h);
  torch::nn::ModuleList res_;
  torch::nn::Conv2d up1_{nullptr}, up2_{nullptr}, refine_{nullptr}, out_{nullptr};
};
TORCH_MODULE(ImageDecoder);

/// E_S: three convolutions (3x3, then two stride-2 4x4) and global average pooling.
class DetailExtractorImpl : public torch::nn::Module {
 public:
  explicit DetailExtractorImpl(const ExpertArchitecture& arch);
  /// With detach_parameters the result depends on x only; no gradient reaches E_S.
  torch::Tensor forward(const torch::Tensor& x, bool detach_parameters = false);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, conv3_{nullptr};
};
TORCH_MODULE(DetailExtractor);

/// Maps a detail vector to (gamma, beta) for every AdaIN layer; gamma = 1 + output.
class AdaInMlpImpl : public torch::nn::Module {
 public:
  explicit AdaInMlpImpl(const ExpertArchitecture& arch);
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& s);

 private:
  int64_t params_per_half_;
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr}, fc3_{nullptr};
};
TORCH_MODULE(AdaInMlp);

struct ExpertOutputs {
  torch::Tensor x_hat;  // D_X^A(E_X^A(m), s)
  torch::Tensor m_hat;  // D_X^B(E_X^B(x))
  torch::Tensor s;      // E_S(x), or the Gaussian code when guidance is off
  torch::Tensor s_hat;  // E_S(x_hat); undefined when guidance is off
};

struct ExpertLossWeights {
  double w_x = 1.0;
  double w_m = 1.0;
  double w_s = 1.0;
  bool stop_grad_detail = false;
};

struct ExpertLossTerms {
  torch::Tensor reconstruction;  // |x_hat - x|
  torch::Tensor naive;           // |m_hat - m|
  torch::Tensor detail;          // |s_hat - s|
  torch::Tensor total;
};

class ExpertNetImpl : public torch::nn::Module {
 public:
  explicit ExpertNetImpl(const ExpertArchitecture& arch);

  const ExpertArchitecture& architecture() const { return arch_; }

  torch::Tensor extract_details(const torch::Tensor& batch);
  torch::Tensor reconstruct(const torch::Tensor& impressions, const torch::Tensor& details);
  torch::Tensor naive_impression(const torch::Tensor& batch);

  /// Full forward pass. When `random_details` is defined it replaces E_S(x)
  /// (detail-guidance ablation) and s_hat is not computed.
  ExpertOutputs forward(const torch::Tensor& x, const torch::Tensor& m, const torch::Tensor& random_details = {},
                        bool stop_grad_detail = false);

  ExpertLossTerms loss(const torch::Tensor& x, const torch::Tensor& m, const ExpertLossWeights& weights,
                       const torch::Tensor& random_details = {});

  ContentEncoder encoder_a{nullptr}, encoder_b{nullptr};
  ImageDecoder decoder_a{nullptr}, decoder_b{nullptr};
  DetailExtractor details{nullptr};
  AdaInMlp mlp{nullptr};

 private:
  void check_input(const torch::Tensor& batch) const;
  ExpertArchitecture arch_;
};
TORCH_MODULE(ExpertNet);

/// w_x |x_hat - x| + w_m |m_hat - m| + w_s |s_hat - s| (element means). An
/// undefined s_hat drops the detail term. Mismatched x/m shapes raise pairing-error.
ExpertLossTerms expert_loss(const torch::Tensor& x, const torch::Tensor& m, const ExpertOutputs& out,
                            const ExpertLossWeights& weights);

/// Seeded N(0,1) detail codes, one row per sample.
torch::Tensor gaussian_details(int64_t batch, int64_t dim, std::uint64_t seed);

}  // namespace impress
