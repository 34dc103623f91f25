#include "impress/expert_net.hpp"

#include <random>

#include "impress/error.hpp"
#include "impress/ie_net.hpp"

namespace impress {

namespace F = torch::nn::functional;

std::pair<torch::Tensor, torch::Tensor> channel_moments(const torch::Tensor& k, double eps) {
  auto mean = k.mean({-2, -1});
  auto var = (k - mean.unsqueeze(-1).unsqueeze(-1)).pow(2).mean({-2, -1});
  return {mean, torch::sqrt(var + eps)};
}

torch::Tensor adain(const torch::Tensor& k, const torch::Tensor& gamma, const torch::Tensor& beta, double eps) {
  if (k.dim() != 3 && k.dim() != 4) fail(ErrorKind::kShapeError, "AdaIN input must be C x H x W or B x C x H x W");
  const int64_t channels = k.size(-3);
  if (gamma.size(-1) != channels || beta.size(-1) != channels)
    fail(ErrorKind::kShapeError, "AdaIN gamma/beta length must equal the channel count");
  auto [mean, std] = channel_moments(k, eps);
  auto expand = [](const torch::Tensor& t) { return t.unsqueeze(-1).unsqueeze(-1); };
  auto normalized = (k - expand(mean)) / expand(std);
  return expand(gamma) * normalized + expand(beta);
}

ExpertArchitecture ExpertArchitecture::from_config(const ExperimentConfig& config) {
  ExpertArchitecture arch;
  arch.image_size = config.data.image_size;
  arch.channels = config.data.channels;
  arch.base_width = config.expert.base_width;
  arch.res_blocks = config.expert.res_blocks;
  arch.detail_dim = config.expert.detail_dim;
  arch.detail_width = config.expert.detail_width;
  arch.mlp_hidden = config.expert.mlp_hidden;
  return arch;
}

namespace {

torch::Tensor instance_norm(const torch::Tensor& x) {
  return F::instance_norm(x, F::InstanceNormFuncOptions().eps(kAdaInEpsilon));
}

torch::nn::Conv2d conv(int64_t in, int64_t out, int64_t kernel, int64_t stride, int64_t padding) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding));
}

torch::nn::Functional norm_relu() {
  return torch::nn::Functional([](const torch::Tensor& x) { return torch::relu(instance_norm(x)); });
}

}  // namespace

ResidualBlockImpl::ResidualBlockImpl(int64_t channels) {
  conv1_ = register_module("conv1", conv(channels, channels, 3, 1, 1));
  conv2_ = register_module("conv2", conv(channels, channels, 3, 1, 1));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
  auto h = torch::relu(instance_norm(conv1_(x)));
  return x + instance_norm(conv2_(h));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& gamma,
                                         const torch::Tensor& beta) {
  auto g = gamma.chunk(2, 1);
  auto b = beta.chunk(2, 1);
  auto h = torch::relu(adain(conv1_(x), g[0], b[0]));
  return x + adain(conv2_(h), g[1], b[1]);
}

ContentEncoderImpl::ContentEncoderImpl(const ExpertArchitecture& arch) {
  const int64_t c = arch.base_width;
  convs_ = register_module("convs", torch::nn::Sequential(conv(arch.channels, c, 7, 1, 3),
                                                          norm_relu(),
                                                          conv(c, 2 * c, 4, 2, 1),
                                                          norm_relu(),
                                                          conv(2 * c, 4 * c, 4, 2, 1),
                                                          norm_relu(),
                                                          conv(4 * c, 4 * c, 3, 1, 1),
                                                          norm_relu()));
  for (int i = 0; i < arch.res_blocks; ++i) res_->push_back(ResidualBlock(4 * c));
  register_module("res", res_);
}

torch::Tensor ContentEncoderImpl::forward(const torch::Tensor& x) {
  auto h = convs_->forward(x);
  for (const auto& block : *res_) h = block->as<ResidualBlock>()->forward(h);
  return h;
}

ImageDecoderImpl::ImageDecoderImpl(const ExpertArchitecture& arch) {
  const int64_t c = arch.base_width;
  for (int i = 0; i < arch.res_blocks; ++i) res_->push_back(ResidualBlock(4 * c));
  register_module("res", res_);
  up1_ = register_module("up1", conv(4 * c, 2 * c, 3, 1, 1));
  up2_ = register_module("up2", conv(2 * c, c, 3, 1, 1));
  refine_ = register_module("refine", conv(c, c, 3, 1, 1));
  out_ = register_module("out", conv(c, arch.channels, 7, 1, 3));
}

torch::Tensor ImageDecoderImpl::upsample(const torch::Tensor& h) {
  return F::interpolate(h, F::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest));
}

torch::Tensor ImageDecoderImpl::forward(const torch::Tensor& content) {
  auto h = content;
  for (const auto& block : *res_) h = block->as<ResidualBlock>()->forward(h);
  h = torch::relu(up1_(upsample(h)));
  h = torch::relu(up2_(upsample(h)));
  h = torch::relu(refine_(h));
  return torch::sigmoid(out_(h));
}

torch::Tensor ImageDecoderImpl::forward(const torch::Tensor& content, const torch::Tensor& gamma,
                                        const torch::Tensor& beta) {
  auto h = content;
  const int64_t per_block = 2 * content.size(1);
  int64_t offset = 0;
  for (const auto& block : *res_) {
    h = block->as<ResidualBlock>()->forward(h, gamma.narrow(1, offset, per_block), beta.narrow(1, offset, per_block));
    offset += per_block;
  }
  h = torch::relu(up1_(upsample(h)));
  h = torch::relu(up2_(upsample(h)));
  h = torch::relu(refine_(h));
  return torch::sigmoid(out_(h));
}

DetailExtractorImpl::DetailExtractorImpl(const ExpertArchitecture& arch) {
  conv1_ = register_module("conv1", conv(arch.channels, arch.detail_width, 3, 1, 1));
  conv2_ = register_module("conv2", conv(arch.detail_width, arch.detail_width, 4, 2, 1));
  conv3_ = register_module("conv3", conv(arch.detail_width, arch.detail_dim, 4, 2, 1));
}

torch::Tensor DetailExtractorImpl::forward(const torch::Tensor& x, bool detach_parameters) {
  auto apply = [detach_parameters](torch::nn::Conv2d& layer, const torch::Tensor& in) {
    if (!detach_parameters) return layer(in);
    const auto& opts = layer->options;
    return F::conv2d(in, layer->weight.detach(),
                     F::Conv2dFuncOptions().bias(layer->bias.detach()).stride(opts.stride()).padding(
                         std::get<torch::ExpandingArray<2>>(opts.padding())));
  };
  auto h = torch::relu(apply(conv1_, x));
  h = torch::relu(apply(conv2_, h));
  h = apply(conv3_, h);
  return h.mean({2, 3});
}

AdaInMlpImpl::AdaInMlpImpl(const ExpertArchitecture& arch)
    : params_per_half_(static_cast<int64_t>(arch.adain_layers()) * arch.content_width()) {
  fc1_ = register_module("fc1", torch::nn::Linear(arch.detail_dim, arch.mlp_hidden));
  fc2_ = register_module("fc2", torch::nn::Linear(arch.mlp_hidden, arch.mlp_hidden));
  fc3_ = register_module("fc3", torch::nn::Linear(arch.mlp_hidden, 2 * params_per_half_));
}

std::pair<torch::Tensor, torch::Tensor> AdaInMlpImpl::forward(const torch::Tensor& s) {
  auto out = fc3_(torch::relu(fc2_(torch::relu(fc1_(s)))));
  return {1.0 + out.narrow(1, 0, params_per_half_), out.narrow(1, params_per_half_, params_per_half_)};
}

ExpertNetImpl::ExpertNetImpl(const ExpertArchitecture& arch) : arch_(arch) {
  if (arch.res_blocks < 1) fail(ErrorKind::kShapeError, "Expert-Net needs at least one residual block");
  encoder_a = register_module("encoder_a", ContentEncoder(arch));
  encoder_b = register_module("encoder_b", ContentEncoder(arch));
  decoder_a = register_module("decoder_a", ImageDecoder(arch));
  decoder_b = register_module("decoder_b", ImageDecoder(arch));
  details = register_module("details", DetailExtractor(arch));
  mlp = register_module("mlp", AdaInMlp(arch));
}

void ExpertNetImpl::check_input(const torch::Tensor& batch) const {
  if (batch.dim() != 4 || batch.size(1) != arch_.channels || batch.size(2) != arch_.image_size ||
      batch.size(3) != arch_.image_size)
    fail(ErrorKind::kShapeError, "Expert-Net expects B x " + std::to_string(arch_.channels) + " x " +
                                     std::to_string(arch_.image_size) + " x " + std::to_string(arch_.image_size) +
                                     " input");
}

torch::Tensor ExpertNetImpl::extract_details(const torch::Tensor& batch) {
  check_input(batch);
  return details->forward(batch);
}

torch::Tensor ExpertNetImpl::reconstruct(const torch::Tensor& impressions, const torch::Tensor& s) {
  check_input(impressions);
  if (s.dim() != 2 || s.size(0) != impressions.size(0) || s.size(1) != arch_.detail_dim)
    fail(ErrorKind::kShapeError, "detail codes must be B x d_s");
  auto [gamma, beta] = mlp->forward(s);
  return decoder_a->forward(encoder_a->forward(impressions), gamma, beta);
}

torch::Tensor ExpertNetImpl::naive_impression(const torch::Tensor& batch) {
  check_input(batch);
  return decoder_b->forward(encoder_b->forward(batch));
}

ExpertOutputs ExpertNetImpl::forward(const torch::Tensor& x, const torch::Tensor& m,
                                     const torch::Tensor& random_details, bool stop_grad_detail) {
  check_input(x);
  if (x.sizes() != m.sizes()) fail(ErrorKind::kPairingError, "image and impression batches differ in shape");
  ExpertOutputs out;
  const bool guided = !random_details.defined();
  out.s = guided ? details->forward(x) : random_details.to(x.dtype());
  out.x_hat = reconstruct(m, out.s);
  out.m_hat = naive_impression(x);
  if (guided) out.s_hat = details->forward(out.x_hat, stop_grad_detail);
  return out;
}

ExpertLossTerms ExpertNetImpl::loss(const torch::Tensor& x, const torch::Tensor& m, const ExpertLossWeights& weights,
                                    const torch::Tensor& random_details) {
  return expert_loss(x, m, forward(x, m, random_details, weights.stop_grad_detail), weights);
}

ExpertLossTerms expert_loss(const torch::Tensor& x, const torch::Tensor& m, const ExpertOutputs& out,
                            const ExpertLossWeights& w) {
  if (x.sizes() != m.sizes()) fail(ErrorKind::kPairingError, "image and impression batches differ in shape");
  ExpertLossTerms terms;
  terms.reconstruction = l1_distance(out.x_hat, x);
  terms.naive = l1_distance(out.m_hat, m);
  terms.detail = out.s_hat.defined() ? l1_distance(out.s_hat, out.s) : torch::zeros({}, x.options());
  terms.total = w.w_x * terms.reconstruction + w.w_m * terms.naive + w.w_s * terms.detail;
  return terms;
}

torch::Tensor gaussian_details(int64_t batch, int64_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  auto out = torch::empty({batch, dim}, torch::kFloat32);
  auto acc = out.accessor<float, 2>();
  for (int64_t i = 0; i < batch; ++i)
    for (int64_t j = 0; j < dim; ++j) acc[i][j] = normal(rng);
  return out;
}

}  // namespace impress
