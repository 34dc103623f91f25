#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <random>
#include <vector>

#include "impress/config.hpp"
#include "impress/image.hpp"

namespace impress {

/// Shape-determining hyperparameters of IE-Net.
struct IeArchitecture {
  int image_size = 256;
  int channels = 3;
  std::vector<int> widths{64, 128, 256, 256};
  int latent_dim = 256;
  int moment_hidden = 256;
  int disc_hidden = 256;

  static IeArchitecture from_config(const ExperimentConfig& config);
  int blocks() const { return static_cast<int>(widths.size()); }
  int bottleneck_size() const { return image_size >> blocks(); }
};

/// Parallel 1x1 / 3x3 / 5x5 convolutions and a pooled 1x1 branch, each with
/// out_channels / 4 filters, concatenated along channels.
class InceptionBlockImpl : public torch::nn::Module {
 public:
  InceptionBlockImpl(int64_t in_channels, int64_t out_channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d branch1_{nullptr}, branch3_{nullptr}, branch5_{nullptr}, branch_pool_{nullptr};
};
TORCH_MODULE(InceptionBlock);

/// E_M: inception blocks each followed by 2x max-pooling, then a linear map to z.
class ImpressionEncoderImpl : public torch::nn::Module {
 public:
  explicit ImpressionEncoderImpl(const IeArchitecture& arch);

  struct Output {
    /// Final pre-latent feature map, B x C x s x s.
    torch::Tensor features;
    /// Latent codes, B x d_z.
    torch::Tensor z;
  };
  Output forward(const torch::Tensor& x);

 private:
  torch::nn::ModuleList blocks_;
  torch::nn::Linear to_latent_{nullptr};
};
TORCH_MODULE(ImpressionEncoder);

/// D_M: linear lift to the bottleneck grid, (2x nearest upsample + inception)
/// per block, then a 1x1 convolution with sigmoid.
class ImpressionDecoderImpl : public torch::nn::Module {
 public:
  explicit ImpressionDecoderImpl(const IeArchitecture& arch);
  torch::Tensor forward(const torch::Tensor& z);

 private:
  IeArchitecture arch_;
  torch::nn::Linear from_latent_{nullptr};
  torch::nn::ModuleList blocks_;
  torch::nn::Conv2d to_image_{nullptr};
};
TORCH_MODULE(ImpressionDecoder);

/// Per-dimension mean and standard deviation of p(z). Either 1-D (pooled over
/// the batch) or B x d_z (per sample).
struct MomentEstimate {
  torch::Tensor mu;
  torch::Tensor sigma;
};

inline constexpr double kMomentVarianceFloor = 1e-6;

/// Three fully connected layers refining the empirical moments of p(z). The
/// input rows are [mean, log-variance] summaries; the output adds a learned
/// correction to both (zero at initialization).
class MomentHeadImpl : public torch::nn::Module {
 public:
  MomentHeadImpl(int64_t latent_dim, int64_t hidden);
  /// Returns mu and sigma = exp(logvar / 2).
  MomentEstimate forward(const torch::Tensor& summary);

 private:
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr}, fc3_{nullptr};
};
TORCH_MODULE(MomentHead);

/// T(x, z): 4-layer MLP over [avgpool(E_M features of x), z] ending in a sigmoid.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  DiscriminatorImpl(int64_t feature_dim, int64_t latent_dim, int64_t hidden);
  torch::Tensor forward(const torch::Tensor& pooled_features, const torch::Tensor& z);
  torch::nn::Linear& final_layer() { return fc4_; }

 private:
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr}, fc3_{nullptr}, fc4_{nullptr};
};
TORCH_MODULE(Discriminator);

struct LatentCode {
  torch::Tensor z;  // d_z
};

/// Shuffled-batch negatives: x_tilde = x[permutation], z_tilde = mu + sigma * noise.
struct NegativeSamples {
  std::vector<int64_t> permutation;
  torch::Tensor noise;  // B x d_z standard normal
};

struct IeLossWeights {
  double lambda_kl = 1.0;
  double lambda_rec = 10.0;
  bool use_mi = true;
  KlMode kl_mode = KlMode::kPooled;
};

struct IeLossTerms {
  torch::Tensor mi;     // L_M^t
  torch::Tensor kl;     // KL(p(z) || N(0, I))
  torch::Tensor recon;  // L_M^d
  torch::Tensor total;  // L_M^t + lambda KL + lambda_1 L_M^d
};

class IENetImpl : public torch::nn::Module {
 public:
  explicit IENetImpl(const IeArchitecture& arch);

  const IeArchitecture& architecture() const { return arch_; }

  /// B x C x H x W -> B x d_z. Throws shape-error on size mismatch.
  torch::Tensor encode(const torch::Tensor& batch);
  LatentCode encode(const ImageTensor& image);
  MomentEstimate estimate_moments(const torch::Tensor& z_batch, KlMode mode = KlMode::kPooled);
  /// Probability that (image, z) is a positive pair.
  torch::Tensor discriminate(const torch::Tensor& batch, const torch::Tensor& z);
  torch::Tensor decode(const torch::Tensor& z);
  /// m = D_M(E_M(x)) on a batch, without gradient tracking.
  torch::Tensor impression(const torch::Tensor& batch);
  ImageTensor extract_impression(const ImageTensor& image);

  /// Every loss term of one batch under fixed negatives.
  IeLossTerms loss(const torch::Tensor& batch, const NegativeSamples& negatives, const IeLossWeights& weights);

  /// Parameters updated by the discriminator step (T only).
  std::vector<torch::Tensor> discriminator_parameters();
  /// Parameters updated by the encoder/decoder step (E_M, moment head, D_M).
  std::vector<torch::Tensor> generator_parameters();

  ImpressionEncoder encoder{nullptr};
  ImpressionDecoder decoder{nullptr};
  MomentHead moments{nullptr};
  Discriminator disc{nullptr};

 private:
  void check_input(const torch::Tensor& batch) const;
  IeArchitecture arch_;
};
TORCH_MODULE(IENet);

/// Uniform random permutation with no fixed points (rejection sampling).
/// Throws batch-too-small for n < 2.
std::vector<int64_t> random_derangement(int64_t n, std::mt19937_64& rng);
NegativeSamples sample_negatives(int64_t batch, int64_t latent_dim, std::mt19937_64& rng);

/// 1/2 sum(mu^2 + sigma^2 - 1 - ln sigma^2); rows are averaged for B x d inputs.
torch::Tensor kl_gaussian(const MomentEstimate& moments);

inline constexpr double kProbabilityClamp = 1e-7;
/// mean(-log T(x, z) - log(1 - T(x_tilde, z_tilde))) with probabilities clamped to [eps, 1-eps].
torch::Tensor mi_discriminator_loss(const torch::Tensor& positive_prob, const torch::Tensor& negative_prob);

/// Mean absolute error.
torch::Tensor l1_distance(const torch::Tensor& a, const torch::Tensor& b);

IeLossTerms combine_ie_loss(torch::Tensor mi, torch::Tensor kl, torch::Tensor recon, double lambda_kl,
                            double lambda_rec);

}  // namespace impress
