#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace impress {

enum class BackboneMode { kPretrained, kFallback };
enum class MeasurementMode { kPerceptual, kPixelInputReconstruction, kPixelInputImpression, kPixelImpressionNaive };
enum class MapNormalization { kMinMax, kPercentile };
enum class KlMode { kPooled, kPerSample };
enum class OptimizerKind { kSgd, kAdam };

struct DataConfig {
  int image_size = 256;
  int channels = 3;
};

struct IeConfig {
  int blocks = 4;
  std::vector<int> widths{64, 128, 256, 256};
  int latent_dim = 256;
  int moment_hidden = 256;
  int disc_hidden = 256;
  double lambda_kl = 1.0;
  double lambda_rec = 10.0;
  KlMode kl_mode = KlMode::kPooled;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  double lr = 1e-3;
  double momentum = 0.9;
  int epochs = 200;
  int batch_size = 4;
  /// Hard cap on optimization steps; 0 means epochs decide.
  int max_steps = 0;
  /// Global gradient-norm clip per step; 0 disables.
  double grad_clip = 5.0;
};

struct ExpertConfig {
  int base_width = 64;
  int res_blocks = 2;
  int detail_dim = 8;
  int detail_width = 32;
  int mlp_hidden = 256;
  double w_x = 1.0;
  double w_m = 1.0;
  double w_s = 1.0;
  bool stop_grad_detail = false;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double lr = 1e-3;
  double momentum = 0.9;
  int epochs = 200;
  int batch_size = 4;
  int max_steps = 0;
};

struct PmConfig {
  BackboneMode backbone = BackboneMode::kPretrained;
  std::string weights_path;
  std::vector<std::string> layers{"conv1_2", "conv2_2", "conv3_4"};
  std::vector<double> layer_weights{1.0, 1.0, 1.0};
  double alpha = 0.5;
  MeasurementMode mode = MeasurementMode::kPerceptual;
  MapNormalization normalization = MapNormalization::kMinMax;
  double percentile_low = 1.0;
  double percentile_high = 99.0;
  double top_k_fraction = 0.01;
  std::vector<double> mean{0.485, 0.456, 0.406};
  std::vector<double> std{0.229, 0.224, 0.225};
};

struct AblationConfig {
  bool use_mi_loss = true;
  bool use_expert_net = true;
  bool use_detail_guidance = true;
  bool use_naive_impression_term = true;
};

struct ExperimentConfig {
  DataConfig data;
  IeConfig ie;
  ExpertConfig expert;
  PmConfig pm;
  AblationConfig ablation;
  std::uint64_t seed = 0;
  int threads = 0;
};

/// MVTec-scale defaults: 256 px, 4 inception blocks, 2 residual blocks.
ExperimentConfig mvtec_defaults();
/// 64 px one-class datasets: 3 inception blocks, 1 residual block, 20 epochs.
ExperimentConfig small_dataset_defaults();

/// One entry of the configuration schema. Parsing, serialization and the
/// generated help text all come from this table.
struct ConfigKey {
  std::string name;
  std::string type;
  std::string doc;
  std::function<void(ExperimentConfig&, std::string_view)> parse;
  std::function<std::string(const ExperimentConfig&)> format;
};

const std::vector<ConfigKey>& config_schema();

/// Applies `key=value`; unknown keys and ill-typed values raise config-parse-error.
void apply_override(ExperimentConfig& config, std::string_view key, std::string_view value);
void apply_override(ExperimentConfig& config, std::string_view assignment);

/// Reads a hierarchical YAML file on top of `base`.
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = mvtec_defaults());
ExperimentConfig parse_config(std::string_view yaml_text, ExperimentConfig base = mvtec_defaults());
std::string to_yaml(const ExperimentConfig& config);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

/// Checks value ranges (positive rates, list lengths, ...).
void validate(const ExperimentConfig& config);

/// Help text listing every key, its type, default and description.
std::string schema_help(const ExperimentConfig& defaults = mvtec_defaults());

/// Hash over the keys that determine IE-Net / Expert-Net tensor shapes.
std::uint64_t ie_fingerprint(const ExperimentConfig& config);
std::uint64_t expert_fingerprint(const ExperimentConfig& config);
/// Hash over the complete serialized configuration.
std::uint64_t config_fingerprint(const ExperimentConfig& config);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);
std::string hex64(std::uint64_t value);

}  // namespace impress
