#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "impress/config.hpp"
#include "impress/image.hpp"

namespace impress {

/// Environment variable that overrides pm.weights_path.
inline constexpr const char* kBackboneWeightsEnv = "IMPRESS_BACKBONE_WEIGHTS";

/// Post-ReLU activations of named backbone layers, each B x C x h x w.
struct FeatureStack {
  std::vector<std::string> names;
  std::vector<torch::Tensor> maps;

  const torch::Tensor& at(const std::string& name) const;
};

/// The VGG-19 convolution stack up to conv3_4 (8 conv layers, 2 max-pools).
/// Stateless after construction, so concurrent feature extraction is safe.
class FeatureBackbone {
 public:
  /// Layer names in network order.
  static const std::vector<std::string>& layer_names();

  /// Loads `<layer>.weight` / `<layer>.bias` tensors from an interchange weights file.
  static FeatureBackbone from_weights_file(const std::filesystem::path& path);
  /// Same topology with frozen Kaiming-normal weights drawn from `seed`.
  static FeatureBackbone fallback(std::uint64_t seed);
  /// Resolves pm.backbone / pm.weights_path / IMPRESS_BACKBONE_WEIGHTS; throws
  /// backbone-unavailable when pretrained weights are requested but missing.
  static FeatureBackbone from_config(const PmConfig& config, std::uint64_t seed);

  bool pretrained() const { return pretrained_; }

  /// `batch` is B x C x H x W in [0,1]; single-channel input is replicated to RGB
  /// before per-channel normalization with `mean` / `std`.
  FeatureStack features(const torch::Tensor& batch, const std::vector<std::string>& layers,
                        const std::vector<double>& mean, const std::vector<double>& std) const;

  /// Spatial stride of a layer relative to the input (1, 2 or 4).
  static int stride_of(const std::string& layer);

 private:
  std::vector<torch::Tensor> weights_;
  std::vector<torch::Tensor> biases_;
  bool pretrained_ = false;
};

/// Interchange weights file: "IMPRESSW" magic, uint32 version (1), uint32 count,
/// then per tensor: uint32 name length, name bytes, uint32 rank, int64 dims,
/// little-endian float32 data.
void write_weights_file(const std::filesystem::path& path, const std::map<std::string, torch::Tensor>& tensors);
std::map<std::string, torch::Tensor> read_weights_file(const std::filesystem::path& path);

/// Channel mean of |a - b| (B x C x h x w), bilinearly resized to height x width. Returns B x H x W.
torch::Tensor layer_distance(const torch::Tensor& a, const torch::Tensor& b, int64_t height, int64_t width);

struct AnomalyMap {
  torch::Tensor raw;         // H x W, >= 0
  torch::Tensor normalized;  // H x W, in [0,1]
  double norm_low = 0.0;
  double norm_high = 0.0;
};

struct SegmentationMask {
  BinaryMask y;
  double alpha = 0.5;
};

/// Which pairwise distances enter the map.
struct MeasurementTerms {
  bool input_reconstruction = true;  // phi(x, x_hat)
  bool impression_naive = true;      // phi(m, m_hat)
  bool input_impression = true;      // phi(x, m)

  static MeasurementTerms from_ablation(const AblationConfig& ablation);
};

/// Per-image normalization of a raw H x W map to [0,1].
AnomalyMap normalize_map(const torch::Tensor& raw, MapNormalization mode, double percentile_low = 1.0,
                         double percentile_high = 99.0);

/// y(i,j) = 1 iff normalized e(i,j) > alpha; alpha outside [0,1] raises invalid-threshold.
SegmentationMask segment(const AnomalyMap& e, double alpha);

/// Mean of the top ceil(fraction * N) raw values.
double image_score(const torch::Tensor& raw, double top_k_fraction = 0.01);

class PerceptualMeasurement {
 public:
  PerceptualMeasurement(PmConfig config, FeatureBackbone backbone);

  const PmConfig& config() const { return config_; }
  const FeatureBackbone& backbone() const { return backbone_; }

  FeatureStack features(const torch::Tensor& batch) const;

  /// Raw maps (B x H x W) for batches of inputs, reconstructions, impressions and
  /// naive impressions. Tensors for disabled terms may be undefined.
  torch::Tensor raw_maps(const torch::Tensor& x, const torch::Tensor& x_hat, const torch::Tensor& m,
                         const torch::Tensor& m_hat, const MeasurementTerms& terms = {}) const;

  AnomalyMap anomaly_map(const ImageTensor& x, const ImageTensor& x_hat, const ImageTensor& m,
                         const ImageTensor& m_hat, const MeasurementTerms& terms = {}) const;
  AnomalyMap normalize(const torch::Tensor& raw) const;

 private:
  PmConfig config_;
  FeatureBackbone backbone_;
};

/// Sums weighted layer distances of precomputed stacks (the body of raw_maps in perceptual mode).
torch::Tensor combine_layer_distances(const FeatureStack* x, const FeatureStack* x_hat, const FeatureStack* m,
                                      const FeatureStack* m_hat, const std::vector<std::string>& layers,
                                      const std::vector<double>& weights, const MeasurementTerms& terms,
                                      int64_t height, int64_t width);

}  // namespace impress
