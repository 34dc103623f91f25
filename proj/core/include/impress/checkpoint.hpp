#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>

namespace impress {

inline constexpr int64_t kCheckpointVersion = 1;

struct CheckpointMeta {
  /// "ie-net" or "expert-net".
  std::string kind;
  int64_t version = kCheckpointVersion;
  /// Hash of the shape-determining config keys.
  std::string arch_fingerprint;
  std::string config_fingerprint;
  int64_t image_size = 0;
  int64_t step = 0;
  int64_t epoch = 0;
  double loss = 0.0;
  /// Full configuration the model was trained with.
  std::string config_yaml;
};

/// Writes parameters and metadata; the file is replaced atomically.
void save_checkpoint(const std::filesystem::path& path, const torch::nn::Module& module, const CheckpointMeta& meta);

/// Throws model-not-ready when the file is missing or unreadable.
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

/// Loads parameters into `module` after checking kind, version, image size and
/// architecture fingerprint (fingerprint-mismatch on any difference).
CheckpointMeta load_checkpoint(const std::filesystem::path& path, torch::nn::Module& module,
                               const std::string& expected_kind, const std::string& expected_arch_fingerprint,
                               int64_t expected_image_size);

/// Hash over the names and bytes of every parameter.
std::string weights_digest(const torch::nn::Module& module);

}  // namespace impress
