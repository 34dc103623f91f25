#include "impress/perceptual.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "impress/error.hpp"

namespace impress {

namespace F = torch::nn::functional;
namespace fs = std::filesystem;

namespace {

struct ConvSpec {
  const char* name;
  int64_t in;
  int64_t out;
  bool pool_before;
};

// VGG-19 up to conv3_4; a 2x2 max-pool precedes conv2_1 and conv3_1.
constexpr ConvSpec kConvs[] = {
    {"conv1_1", 3, 64, false},    {"conv1_2", 64, 64, false},   {"conv2_1", 64, 128, true},
    {"conv2_2", 128, 128, false}, {"conv3_1", 128, 256, true},  {"conv3_2", 256, 256, false},
    {"conv3_3", 256, 256, false}, {"conv3_4", 256, 256, false},
};

int layer_index(const std::string& name) {
  for (int i = 0; i < static_cast<int>(std::size(kConvs)); ++i)
    if (name == kConvs[i].name) return i;
  fail(ErrorKind::kConfigParseError, "unknown backbone layer '" + name + "'");
}

}  // namespace

const torch::Tensor& FeatureStack::at(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return maps[i];
  fail(ErrorKind::kShapeError, "feature stack has no layer '" + name + "'");
}

const std::vector<std::string>& FeatureBackbone::layer_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& c : kConvs) out.emplace_back(c.name);
    return out;
  }();
  return names;
}

int FeatureBackbone::stride_of(const std::string& layer) {
  const int idx = layer_index(layer);
  int stride = 1;
  for (int i = 0; i <= idx; ++i)
    if (kConvs[i].pool_before) stride *= 2;
  return stride;
}

FeatureBackbone FeatureBackbone::from_weights_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) fail(ErrorKind::kBackboneUnavailable, "weights file not found: " + path.string());
  auto tensors = read_weights_file(path);
  FeatureBackbone out;
  out.pretrained_ = true;
  for (const auto& c : kConvs) {
    auto w = tensors.find(std::string(c.name) + ".weight");
    auto b = tensors.find(std::string(c.name) + ".bias");
    if (w == tensors.end() || b == tensors.end())
      fail(ErrorKind::kBackboneUnavailable, std::string("weights file lacks ") + c.name);
    if (w->second.sizes() != torch::IntArrayRef({c.out, c.in, 3, 3}) || b->second.sizes() != torch::IntArrayRef({c.out}))
      fail(ErrorKind::kBackboneUnavailable, std::string("unexpected tensor shape for ") + c.name);
    out.weights_.push_back(w->second.contiguous());
    out.biases_.push_back(b->second.contiguous());
  }
  return out;
}

FeatureBackbone FeatureBackbone::fallback(std::uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  FeatureBackbone out;
  for (const auto& c : kConvs) {
    const double std = std::sqrt(2.0 / static_cast<double>(c.in * 9));
    out.weights_.push_back(torch::randn({c.out, c.in, 3, 3}, gen, torch::kFloat32) * std);
    out.biases_.push_back(torch::zeros({c.out}, torch::kFloat32));
  }
  return out;
}

FeatureBackbone FeatureBackbone::from_config(const PmConfig& config, std::uint64_t seed) {
  if (config.backbone == BackboneMode::kFallback) return fallback(seed);
  std::string path = config.weights_path;
  if (const char* env = std::getenv(kBackboneWeightsEnv); env && *env) path = env;
  if (path.empty())
    fail(ErrorKind::kBackboneUnavailable,
         std::string("pretrained backbone requested but no weights path set (pm.weights_path or ") +
             kBackboneWeightsEnv + ")");
  return from_weights_file(path);
}

FeatureStack FeatureBackbone::features(const torch::Tensor& batch, const std::vector<std::string>& layers,
                                       const std::vector<double>& mean, const std::vector<double>& std) const {
  if (batch.dim() != 4 || (batch.size(1) != 1 && batch.size(1) != 3))
    fail(ErrorKind::kShapeError, "backbone expects B x {1,3} x H x W input");
  torch::NoGradGuard guard;
  auto x = batch.to(torch::kFloat32);
  if (x.size(1) == 1) x = x.expand({x.size(0), 3, x.size(2), x.size(3)});
  auto m = torch::tensor(std::vector<float>(mean.begin(), mean.end())).view({1, 3, 1, 1});
  auto s = torch::tensor(std::vector<float>(std.begin(), std.end())).view({1, 3, 1, 1});
  x = (x - m) / s;

  int deepest = -1;
  for (const auto& l : layers) deepest = std::max(deepest, layer_index(l));
  std::vector<torch::Tensor> activations(static_cast<std::size_t>(deepest + 1));
  for (int i = 0; i <= deepest; ++i) {
    if (kConvs[i].pool_before) x = F::max_pool2d(x, F::MaxPool2dFuncOptions(2));
    x = torch::relu(F::conv2d(x, weights_[static_cast<std::size_t>(i)],
                              F::Conv2dFuncOptions().bias(biases_[static_cast<std::size_t>(i)]).padding(1)));
    activations[static_cast<std::size_t>(i)] = x;
  }
  FeatureStack out;
  for (const auto& l : layers) {
    out.names.push_back(l);
    out.maps.push_back(activations[static_cast<std::size_t>(layer_index(l))]);
  }
  return out;
}

void write_weights_file(const fs::path& path, const std::map<std::string, torch::Tensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path.string());
  auto put32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  out.write("IMPRESSW", 8);
  put32(1);
  put32(static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    auto c = t.to(torch::kFloat32).contiguous();
    put32(static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put32(static_cast<uint32_t>(c.dim()));
    for (int64_t d : c.sizes()) out.write(reinterpret_cast<const char*>(&d), 8);
    out.write(reinterpret_cast<const char*>(c.data_ptr<float>()), static_cast<std::streamsize>(c.numel() * 4));
  }
}

std::map<std::string, torch::Tensor> read_weights_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kBackboneUnavailable, "cannot read " + path.string());
  auto get32 = [&] {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "IMPRESSW", 8) != 0 || get32() != 1)
    fail(ErrorKind::kBackboneUnavailable, "not an interchange weights file: " + path.string());
  const uint32_t count = get32();
  std::map<std::string, torch::Tensor> out;
  for (uint32_t i = 0; i < count && in; ++i) {
    std::string name(get32(), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    const uint32_t rank = get32();
    std::vector<int64_t> dims(rank);
    for (auto& d : dims) in.read(reinterpret_cast<char*>(&d), 8);
    auto t = torch::empty(dims, torch::kFloat32);
    in.read(reinterpret_cast<char*>(t.data_ptr<float>()), static_cast<std::streamsize>(t.numel() * 4));
    out.emplace(std::move(name), std::move(t));
  }
  if (!in) fail(ErrorKind::kBackboneUnavailable, "truncated weights file: " + path.string());
  return out;
}

torch::Tensor layer_distance(const torch::Tensor& a, const torch::Tensor& b, int64_t height, int64_t width) {
  if (a.sizes() != b.sizes() || a.dim() != 4) fail(ErrorKind::kShapeError, "layer_distance operands differ in shape");
  auto d = (a - b).abs().mean(1, /*keepdim=*/true);
  if (d.size(2) != height || d.size(3) != width) {
    d = F::interpolate(d, F::InterpolateFuncOptions()
                              .size(std::vector<int64_t>{height, width})
                              .mode(torch::kBilinear)
                              .align_corners(false));
  }
  return d.squeeze(1);
}

MeasurementTerms MeasurementTerms::from_ablation(const AblationConfig& ablation) {
  MeasurementTerms t;
  t.input_reconstruction = ablation.use_expert_net;
  t.impression_naive = ablation.use_expert_net && ablation.use_naive_impression_term;
  t.input_impression = true;
  return t;
}

AnomalyMap normalize_map(const torch::Tensor& raw, MapNormalization mode, double percentile_low,
                         double percentile_high) {
  if (raw.dim() != 2) fail(ErrorKind::kShapeError, "anomaly map must be H x W");
  AnomalyMap out;
  out.raw = raw.to(torch::kFloat32);
  double lo = 0.0, hi = 0.0;
  if (mode == MapNormalization::kMinMax) {
    lo = out.raw.min().item<double>();
    hi = out.raw.max().item<double>();
  } else {
    auto flat = std::get<0>(out.raw.flatten().sort());
    const int64_t n = flat.numel();
    auto pick = [&](double pct) {
      const double pos = pct / 100.0 * static_cast<double>(n - 1);
      const auto i0 = static_cast<int64_t>(std::floor(pos));
      const auto i1 = std::min(i0 + 1, n - 1);
      const double f = pos - static_cast<double>(i0);
      return (1.0 - f) * flat[i0].item<double>() + f * flat[i1].item<double>();
    };
    lo = pick(percentile_low);
    hi = pick(percentile_high);
  }
  out.norm_low = lo;
  out.norm_high = hi;
  out.normalized = hi > lo ? ((out.raw - lo) / (hi - lo)).clamp(0.0, 1.0) : torch::zeros_like(out.raw);
  return out;
}

SegmentationMask segment(const AnomalyMap& e, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorKind::kInvalidThreshold, "alpha must lie in [0,1]");
  return {BinaryMask((e.normalized > alpha).to(torch::kUInt8)), alpha};
}

double image_score(const torch::Tensor& raw, double top_k_fraction) {
  if (raw.numel() == 0) fail(ErrorKind::kEmptyInput, "empty anomaly map");
  const int64_t n = raw.numel();
  const auto k = std::clamp<int64_t>(static_cast<int64_t>(std::ceil(top_k_fraction * static_cast<double>(n) - 1e-9)),
                                     1, n);
  auto top = std::get<0>(raw.flatten().to(torch::kFloat64).topk(k));
  return top.mean().item<double>();
}

torch::Tensor combine_layer_distances(const FeatureStack* x, const FeatureStack* x_hat, const FeatureStack* m,
                                      const FeatureStack* m_hat, const std::vector<std::string>& layers,
                                      const std::vector<double>& weights, const MeasurementTerms& terms,
                                      int64_t height, int64_t width) {
  if (layers.size() != weights.size()) fail(ErrorKind::kShapeError, "one weight per layer is required");
  torch::Tensor total;
  auto add = [&](const torch::Tensor& t) { total = total.defined() ? total + t : t; };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& name = layers[l];
    torch::Tensor layer_sum;
    auto acc = [&](const FeatureStack* a, const FeatureStack* b) {
      if (!a || !b) fail(ErrorKind::kShapeError, "a measurement term is enabled but its images are missing");
      auto d = layer_distance(a->at(name), b->at(name), height, width);
      layer_sum = layer_sum.defined() ? layer_sum + d : d;
    };
    if (terms.input_reconstruction) acc(x, x_hat);
    if (terms.impression_naive) acc(m, m_hat);
    if (terms.input_impression) acc(x, m);
    if (layer_sum.defined()) add(weights[l] * layer_sum);
  }
  if (!total.defined()) fail(ErrorKind::kShapeError, "no measurement term is enabled");
  return total;
}

PerceptualMeasurement::PerceptualMeasurement(PmConfig config, FeatureBackbone backbone)
    : config_(std::move(config)), backbone_(std::move(backbone)) {
  if (config_.layers.size() != config_.layer_weights.size())
    fail(ErrorKind::kConfigParseError, "pm.layer_weights must match pm.layers");
  for (const auto& l : config_.layers) (void)FeatureBackbone::stride_of(l);
}

FeatureStack PerceptualMeasurement::features(const torch::Tensor& batch) const {
  return backbone_.features(batch, config_.layers, config_.mean, config_.std);
}

torch::Tensor PerceptualMeasurement::raw_maps(const torch::Tensor& x, const torch::Tensor& x_hat,
                                              const torch::Tensor& m, const torch::Tensor& m_hat,
                                              const MeasurementTerms& terms) const {
  torch::NoGradGuard guard;
  const int64_t h = x.size(2), w = x.size(3);
  auto check = [&](const torch::Tensor& t, bool needed) {
    if (needed && (!t.defined() || t.sizes() != x.sizes()))
      fail(ErrorKind::kShapeError, "measurement inputs must share one shape");
  };
  auto pixel = [](const torch::Tensor& a, const torch::Tensor& b) { return (a - b).abs().mean(1); };
  switch (config_.mode) {
    case MeasurementMode::kPixelInputReconstruction: check(x_hat, true); return pixel(x, x_hat);
    case MeasurementMode::kPixelInputImpression: check(m, true); return pixel(x, m);
    case MeasurementMode::kPixelImpressionNaive:
      check(m, true);
      check(m_hat, true);
      return pixel(m, m_hat);
    case MeasurementMode::kPerceptual: break;
  }
  check(x_hat, terms.input_reconstruction);
  check(m, terms.input_impression || terms.impression_naive);
  check(m_hat, terms.impression_naive);
  const FeatureStack fx = features(x);
  const FeatureStack fxh = terms.input_reconstruction ? features(x_hat) : FeatureStack{};
  const FeatureStack fm = (terms.impression_naive || terms.input_impression) ? features(m) : FeatureStack{};
  const FeatureStack fmh = terms.impression_naive ? features(m_hat) : FeatureStack{};
  return combine_layer_distances(&fx, terms.input_reconstruction ? &fxh : nullptr, fm.maps.empty() ? nullptr : &fm,
                                 terms.impression_naive ? &fmh : nullptr, config_.layers, config_.layer_weights,
                                 terms, h, w);
}

AnomalyMap PerceptualMeasurement::anomaly_map(const ImageTensor& x, const ImageTensor& x_hat, const ImageTensor& m,
                                              const ImageTensor& m_hat, const MeasurementTerms& terms) const {
  auto batch = [](const ImageTensor& t) { return t.defined() ? t.tensor().unsqueeze(0) : torch::Tensor(); };
  return normalize(raw_maps(batch(x), batch(x_hat), batch(m), batch(m_hat), terms).squeeze(0));
}

AnomalyMap PerceptualMeasurement::normalize(const torch::Tensor& raw) const {
  return normalize_map(raw, config_.normalization, config_.percentile_low, config_.percentile_high);
}

}  // namespace impress
