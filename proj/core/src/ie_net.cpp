#include "impress/ie_net.hpp"

#include <algorithm>
#include <numeric>

#include "impress/error.hpp"

namespace impress {

namespace F = torch::nn::functional;

IeArchitecture IeArchitecture::from_config(const ExperimentConfig& config) {
  IeArchitecture arch;
  arch.image_size = config.data.image_size;
  arch.channels = config.data.channels;
  arch.widths.assign(config.ie.widths.begin(), config.ie.widths.begin() + config.ie.blocks);
  arch.latent_dim = config.ie.latent_dim;
  arch.moment_hidden = config.ie.moment_hidden;
  arch.disc_hidden = config.ie.disc_hidden;
  return arch;
}

InceptionBlockImpl::InceptionBlockImpl(int64_t in_channels, int64_t out_channels) {
  const int64_t branch = out_channels / 4;
  using torch::nn::Conv2dOptions;
  branch1_ = register_module("branch1", torch::nn::Conv2d(Conv2dOptions(in_channels, branch, 1)));
  branch3_ = register_module("branch3", torch::nn::Conv2d(Conv2dOptions(in_channels, branch, 3).padding(1)));
  branch5_ = register_module("branch5", torch::nn::Conv2d(Conv2dOptions(in_channels, branch, 5).padding(2)));
  branch_pool_ = register_module("branch_pool", torch::nn::Conv2d(Conv2dOptions(in_channels, branch, 1)));
}

torch::Tensor InceptionBlockImpl::forward(const torch::Tensor& x) {
  auto pooled = F::max_pool2d(x, F::MaxPool2dFuncOptions(3).stride(1).padding(1));
  return torch::cat({torch::relu(branch1_(x)), torch::relu(branch3_(x)), torch::relu(branch5_(x)),
                     torch::relu(branch_pool_(pooled))},
                    1);
}

ImpressionEncoderImpl::ImpressionEncoderImpl(const IeArchitecture& arch) {
  int64_t in = arch.channels;
  for (int w : arch.widths) {
    blocks_->push_back(InceptionBlock(in, w));
    in = w;
  }
  register_module("blocks", blocks_);
  const int64_t s = arch.bottleneck_size();
  to_latent_ = register_module("to_latent", torch::nn::Linear(in * s * s, arch.latent_dim));
}

ImpressionEncoderImpl::Output ImpressionEncoderImpl::forward(const torch::Tensor& x) {
  torch::Tensor h = x;
  for (const auto& block : *blocks_) {
    h = block->as<InceptionBlock>()->forward(h);
    h = F::max_pool2d(h, F::MaxPool2dFuncOptions(2));
  }
  return {h, to_latent_(h.flatten(1))};
}

ImpressionDecoderImpl::ImpressionDecoderImpl(const IeArchitecture& arch) : arch_(arch) {
  const int64_t s = arch.bottleneck_size();
  const int n = arch.blocks();
  from_latent_ = register_module("from_latent", torch::nn::Linear(arch.latent_dim, arch.widths.back() * s * s));
  int64_t in = arch.widths.back();
  for (int i = n - 1; i >= 0; --i) {
    const int64_t out = arch.widths[std::max(i - 1, 0)];
    blocks_->push_back(InceptionBlock(in, out));
    in = out;
  }
  register_module("blocks", blocks_);
  to_image_ = register_module("to_image", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, arch.channels, 1)));
}

torch::Tensor ImpressionDecoderImpl::forward(const torch::Tensor& z) {
  const int64_t s = arch_.bottleneck_size();
  auto h = torch::relu(from_latent_(z)).view({z.size(0), arch_.widths.back(), s, s});
  for (const auto& block : *blocks_) {
    h = F::interpolate(h, F::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest));
    h = block->as<InceptionBlock>()->forward(h);
  }
  return torch::sigmoid(to_image_(h));
}

MomentHeadImpl::MomentHeadImpl(int64_t latent_dim, int64_t hidden) {
  fc1_ = register_module("fc1", torch::nn::Linear(2 * latent_dim, hidden));
  fc2_ = register_module("fc2", torch::nn::Linear(hidden, hidden));
  fc3_ = register_module("fc3", torch::nn::Linear(hidden, 2 * latent_dim));
  torch::NoGradGuard no_grad;
  fc3_->weight.zero_();
  fc3_->bias.zero_();
}

MomentEstimate MomentHeadImpl::forward(const torch::Tensor& summary) {
  auto correction = fc3_(torch::relu(fc2_(torch::relu(fc1_(summary))))).chunk(2, -1);
  auto empirical = summary.chunk(2, -1);
  return {empirical[0] + correction[0], torch::exp(0.5 * (empirical[1] + correction[1]))};
}

DiscriminatorImpl::DiscriminatorImpl(int64_t feature_dim, int64_t latent_dim, int64_t hidden) {
  fc1_ = register_module("fc1", torch::nn::Linear(feature_dim + latent_dim, hidden));
  fc2_ = register_module("fc2", torch::nn::Linear(hidden, hidden));
  fc3_ = register_module("fc3", torch::nn::Linear(hidden, hidden));
  fc4_ = register_module("fc4", torch::nn::Linear(hidden, 1));
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& pooled_features, const torch::Tensor& z) {
  auto h = torch::cat({pooled_features, z}, 1);
  h = torch::relu(fc1_(h));
  h = torch::relu(fc2_(h));
  h = torch::relu(fc3_(h));
  return torch::sigmoid(fc4_(h)).squeeze(1);
}

IENetImpl::IENetImpl(const IeArchitecture& arch) : arch_(arch) {
  encoder = register_module("encoder", ImpressionEncoder(arch));
  decoder = register_module("decoder", ImpressionDecoder(arch));
  moments = register_module("moments", MomentHead(arch.latent_dim, arch.moment_hidden));
  disc = register_module("disc", Discriminator(arch.widths.back(), arch.latent_dim, arch.disc_hidden));
}

void IENetImpl::check_input(const torch::Tensor& batch) const {
  if (batch.dim() != 4 || batch.size(1) != arch_.channels || batch.size(2) != arch_.image_size ||
      batch.size(3) != arch_.image_size) {
    fail(ErrorKind::kShapeError, "IE-Net expects B x " + std::to_string(arch_.channels) + " x " +
                                     std::to_string(arch_.image_size) + " x " + std::to_string(arch_.image_size) +
                                     " input");
  }
}

torch::Tensor IENetImpl::encode(const torch::Tensor& batch) {
  check_input(batch);
  return encoder->forward(batch).z;
}

LatentCode IENetImpl::encode(const ImageTensor& image) {
  torch::NoGradGuard guard;
  return {encode(image.tensor().unsqueeze(0)).squeeze(0)};
}

MomentEstimate IENetImpl::estimate_moments(const torch::Tensor& z_batch, KlMode mode) {
  if (z_batch.dim() != 2 || z_batch.size(0) == 0) fail(ErrorKind::kEmptyInput, "moment estimation needs a nonempty batch");
  auto mean = z_batch.mean(0, /*keepdim=*/true);
  auto log_var = torch::log((z_batch - mean).pow(2).mean(0, /*keepdim=*/true) + kMomentVarianceFloor);
  if (mode == KlMode::kPerSample) return moments->forward(torch::cat({z_batch, log_var.expand_as(z_batch)}, 1));
  auto est = moments->forward(torch::cat({mean, log_var}, 1));
  return {est.mu.squeeze(0), est.sigma.squeeze(0)};
}

torch::Tensor IENetImpl::discriminate(const torch::Tensor& batch, const torch::Tensor& z) {
  check_input(batch);
  if (z.dim() != 2 || z.size(0) != batch.size(0) || z.size(1) != arch_.latent_dim)
    fail(ErrorKind::kShapeError, "latent batch does not match the discriminator");
  auto features = encoder->forward(batch).features;
  return disc->forward(features.mean({2, 3}), z);
}

torch::Tensor IENetImpl::decode(const torch::Tensor& z) { return decoder->forward(z); }

torch::Tensor IENetImpl::impression(const torch::Tensor& batch) {
  torch::NoGradGuard guard;
  return decoder->forward(encode(batch));
}

ImageTensor IENetImpl::extract_impression(const ImageTensor& image) {
  return ImageTensor(impression(image.tensor().unsqueeze(0)).squeeze(0));
}

IeLossTerms IENetImpl::loss(const torch::Tensor& batch, const NegativeSamples& negatives, const IeLossWeights& w) {
  check_input(batch);
  auto enc = encoder->forward(batch);
  auto recon = l1_distance(decoder->forward(enc.z), batch);
  if (!w.use_mi) {
    auto zero = torch::zeros({}, batch.options());
    return combine_ie_loss(zero, zero, recon, 0.0, w.lambda_rec);
  }
  const int64_t b = batch.size(0);
  if (static_cast<int64_t>(negatives.permutation.size()) != b || negatives.noise.size(0) != b)
    fail(ErrorKind::kShapeError, "negative samples do not match the batch");
  auto est = estimate_moments(enc.z, w.kl_mode);
  auto pooled = enc.features.mean({2, 3});
  auto perm = torch::tensor(negatives.permutation, torch::kLong);
  auto z_tilde = est.mu + est.sigma * negatives.noise.to(batch.dtype());
  auto pos = disc->forward(pooled, enc.z);
  auto neg = disc->forward(pooled.index_select(0, perm), z_tilde);
  return combine_ie_loss(mi_discriminator_loss(pos, neg), kl_gaussian(est), recon, w.lambda_kl, w.lambda_rec);
}

std::vector<torch::Tensor> IENetImpl::discriminator_parameters() { return disc->parameters(); }

std::vector<torch::Tensor> IENetImpl::generator_parameters() {
  std::vector<torch::Tensor> out;
  for (auto* m : std::initializer_list<torch::nn::Module*>{encoder.get(), moments.get(), decoder.get()}) {
    auto p = m->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<int64_t> random_derangement(int64_t n, std::mt19937_64& rng) {
  if (n < 2) fail(ErrorKind::kBatchTooSmall, "batch shuffling needs at least 2 samples");
  std::vector<int64_t> perm(static_cast<std::size_t>(n));
  while (true) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int64_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int64_t> pick(0, i);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
    }
    bool fixed_point = false;
    for (int64_t i = 0; i < n; ++i) fixed_point |= perm[static_cast<std::size_t>(i)] == i;
    if (!fixed_point) return perm;
  }
}

NegativeSamples sample_negatives(int64_t batch, int64_t latent_dim, std::mt19937_64& rng) {
  NegativeSamples out;
  out.permutation = random_derangement(batch, rng);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  out.noise = torch::empty({batch, latent_dim}, torch::kFloat32);
  auto acc = out.noise.accessor<float, 2>();
  for (int64_t i = 0; i < batch; ++i)
    for (int64_t j = 0; j < latent_dim; ++j) acc[i][j] = normal(rng);
  return out;
}

torch::Tensor kl_gaussian(const MomentEstimate& m) {
  if (!m.mu.defined() || !m.sigma.defined() || m.mu.sizes() != m.sigma.sizes())
    fail(ErrorKind::kInvalidMoments, "mu and sigma must have matching shapes");
  if ((m.sigma <= 0).any().item<bool>() || !torch::isfinite(m.sigma).all().item<bool>())
    fail(ErrorKind::kInvalidMoments, "sigma must be positive and finite");
  auto var = m.sigma * m.sigma;
  auto per_dim = 0.5 * (m.mu * m.mu + var - 1.0 - torch::log(var));
  auto per_row = per_dim.sum(-1);
  return per_row.dim() == 0 ? per_row : per_row.mean();
}

torch::Tensor mi_discriminator_loss(const torch::Tensor& positive_prob, const torch::Tensor& negative_prob) {
  if (positive_prob.numel() < 2) fail(ErrorKind::kBatchTooSmall, "discriminator loss needs a batch of at least 2");
  if (positive_prob.sizes() != negative_prob.sizes())
    fail(ErrorKind::kShapeError, "positive and negative probabilities differ in shape");
  auto pos = positive_prob.clamp(kProbabilityClamp, 1.0 - kProbabilityClamp);
  auto neg = negative_prob.clamp(kProbabilityClamp, 1.0 - kProbabilityClamp);
  return (-torch::log(pos) - torch::log(1.0 - neg)).mean();
}

torch::Tensor l1_distance(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) fail(ErrorKind::kShapeError, "L1 operands differ in shape");
  return (a - b).abs().mean();
}

IeLossTerms combine_ie_loss(torch::Tensor mi, torch::Tensor kl, torch::Tensor recon, double lambda_kl,
                            double lambda_rec) {
  auto total = mi + lambda_kl * kl + lambda_rec * recon;
  return {std::move(mi), std::move(kl), std::move(recon), std::move(total)};
}

}  // namespace impress
