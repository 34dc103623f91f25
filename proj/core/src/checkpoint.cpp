#include "impress/checkpoint.hpp"

#include "impress/config.hpp"
#include "impress/error.hpp"

namespace impress {
namespace fs = std::filesystem;

namespace {

void write_meta(torch::serialize::OutputArchive& archive, const CheckpointMeta& meta) {
  archive.write("meta.kind", c10::IValue(meta.kind));
  archive.write("meta.version", c10::IValue(meta.version));
  archive.write("meta.arch_fingerprint", c10::IValue(meta.arch_fingerprint));
  archive.write("meta.config_fingerprint", c10::IValue(meta.config_fingerprint));
  archive.write("meta.image_size", c10::IValue(meta.image_size));
  archive.write("meta.step", c10::IValue(meta.step));
  archive.write("meta.epoch", c10::IValue(meta.epoch));
  archive.write("meta.loss", c10::IValue(meta.loss));
  archive.write("meta.config_yaml", c10::IValue(meta.config_yaml));
}

CheckpointMeta read_meta(torch::serialize::InputArchive& archive) {
  CheckpointMeta meta;
  c10::IValue v;
  auto get = [&](const char* key) -> const c10::IValue& {
    if (!archive.try_read(key, v)) fail(ErrorKind::kModelNotReady, std::string("checkpoint lacks ") + key);
    return v;
  };
  meta.kind = get("meta.kind").toStringRef();
  meta.version = get("meta.version").toInt();
  meta.arch_fingerprint = get("meta.arch_fingerprint").toStringRef();
  meta.config_fingerprint = get("meta.config_fingerprint").toStringRef();
  meta.image_size = get("meta.image_size").toInt();
  meta.step = get("meta.step").toInt();
  meta.epoch = get("meta.epoch").toInt();
  meta.loss = get("meta.loss").toDouble();
  meta.config_yaml = get("meta.config_yaml").toStringRef();
  return meta;
}

torch::serialize::InputArchive open_archive(const fs::path& path) {
  if (!fs::is_regular_file(path)) fail(ErrorKind::kModelNotReady, "checkpoint not found: " + path.string());
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    fail(ErrorKind::kModelNotReady, "unreadable checkpoint " + path.string());
  }
  return archive;
}

}  // namespace

void save_checkpoint(const fs::path& path, const torch::nn::Module& module, const CheckpointMeta& meta) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  torch::serialize::OutputArchive archive;
  module.save(archive);
  write_meta(archive, meta);
  const fs::path tmp = path.string() + ".tmp";
  archive.save_to(tmp.string());
  fs::rename(tmp, path);
}

CheckpointMeta read_checkpoint_meta(const fs::path& path) {
  auto archive = open_archive(path);
  return read_meta(archive);
}

CheckpointMeta load_checkpoint(const fs::path& path, torch::nn::Module& module, const std::string& expected_kind,
                               const std::string& expected_arch_fingerprint, int64_t expected_image_size) {
  auto archive = open_archive(path);
  auto meta = read_meta(archive);
  if (meta.kind != expected_kind)
    fail(ErrorKind::kFingerprintMismatch, path.string() + " holds a " + meta.kind + " model, not " + expected_kind);
  if (meta.version != kCheckpointVersion)
    fail(ErrorKind::kFingerprintMismatch, "unsupported checkpoint version " + std::to_string(meta.version));
  if (meta.image_size != expected_image_size)
    fail(ErrorKind::kFingerprintMismatch, "checkpoint was trained at " + std::to_string(meta.image_size) +
                                              " px, configuration asks for " + std::to_string(expected_image_size));
  if (meta.arch_fingerprint != expected_arch_fingerprint)
    fail(ErrorKind::kFingerprintMismatch, "checkpoint architecture fingerprint " + meta.arch_fingerprint +
                                              " differs from configuration " + expected_arch_fingerprint);
  module.load(archive);
  return meta;
}

std::string weights_digest(const torch::nn::Module& module) {
  std::uint64_t h = fnv1a("");
  for (const auto& item : module.named_parameters(/*recurse=*/true)) {
    h = fnv1a(item.key(), h);
    auto t = item.value().detach().to(torch::kFloat32).contiguous();
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(t.data_ptr<float>()), t.numel() * sizeof(float)), h);
  }
  return hex64(h);
}

}  // namespace impress
