#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "impress/checkpoint.hpp"
#include "impress/config.hpp"
#include "impress/dataset.hpp"
#include "impress/expert_net.hpp"
#include "impress/ie_net.hpp"
#include "impress/metrics.hpp"
#include "impress/perceptual.hpp"

namespace impress {

inline constexpr const char* kIeKind = "ie-net";
inline constexpr const char* kExpertKind = "expert-net";

/// Output directory owned by one run: checkpoints/, impressions/, maps/,
/// masks/, report.json and log.txt. Holds an advisory lock on `.lock` for its
/// lifetime; a second owner gets output-locked.
class RunDirectory {
 public:
  explicit RunDirectory(std::filesystem::path root, bool echo = false);
  ~RunDirectory();
  RunDirectory(const RunDirectory&) = delete;
  RunDirectory& operator=(const RunDirectory&) = delete;

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path checkpoints() const { return root_ / "checkpoints"; }
  std::filesystem::path impressions() const { return root_ / "impressions"; }
  std::filesystem::path maps() const { return root_ / "maps"; }
  std::filesystem::path masks() const { return root_ / "masks"; }
  std::filesystem::path report_path() const { return root_ / "report.json"; }
  std::filesystem::path log_path() const { return root_ / "log.txt"; }

  std::filesystem::path ie_checkpoint(const std::string& tag = "final") const;
  std::filesystem::path expert_checkpoint(const std::string& tag = "final") const;

  void log(const std::string& line);

 private:
  std::filesystem::path root_;
  int lock_fd_ = -1;
  std::ofstream log_;
  bool echo_ = false;
};

/// Seeds libtorch and applies the thread setting.
void apply_runtime(const ExperimentConfig& config);

/// Decodes every item into one N x C x H x W tensor.
torch::Tensor load_images(const DatasetHandle& data, int image_size, int channels);

/// Independent 64-bit seed for a named purpose.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0);

struct TrainingCurve {
  /// One entry per optimization step.
  std::vector<double> total;
  std::vector<std::vector<double>> terms;
  std::vector<std::string> term_names;
  int64_t steps = 0;
  int64_t epochs = 0;
};

struct IeTrainResult {
  IENet net{nullptr};
  TrainingCurve curve;
};

struct ExpertTrainResult {
  ExpertNet net{nullptr};
  TrainingCurve curve;
};

/// Optimizes IE-Net on anomaly-free images (N x C x H x W). With a run
/// directory, writes checkpoints/ie_{latest,best,final}.pt and log lines.
/// A non-finite loss raises training-diverged; the latest checkpoint stays.
IeTrainResult train_ie_net(const ExperimentConfig& config, const torch::Tensor& images, RunDirectory* run = nullptr);

struct ImpressionEntry {
  std::string source;
  std::filesystem::path impression;
};

/// The set M paired with D, tagged with the digest of the producing IE-Net.
struct ImpressionDataset {
  std::string fingerprint;
  std::vector<ImpressionEntry> entries;
  /// N x C x H x W impressions in item order.
  torch::Tensor impressions;
};

/// Writes impressions/<index>.npy and impressions/index.json. Reruns with the
/// same IE-Net rewrite identical bytes; an existing index from a different
/// IE-Net raises stale-impressions unless `force`.
ImpressionDataset generate_impression_set(IENet& net, const DatasetHandle& train, const torch::Tensor& images,
                                          const std::filesystem::path& dir, bool force = false);
/// Reads an impression set; `expected_fingerprint` (when not empty) must match.
ImpressionDataset load_impression_set(const std::filesystem::path& dir, const std::string& expected_fingerprint = {});

/// Supervised training on (x, m) pairs. With use_detail_guidance off, each step
/// draws seeded N(0,1) detail codes instead of E_S(x).
ExpertTrainResult train_expert_net(const ExperimentConfig& config, const torch::Tensor& images,
                                   const torch::Tensor& impressions, RunDirectory* run = nullptr);

/// Per-item results of the full inference chain.
struct Detection {
  torch::Tensor x, m, x_hat, m_hat;  // C x H x W; x_hat / m_hat undefined without Expert-Net
  AnomalyMap map;
  SegmentationMask mask;
  double score = 0.0;
};

/// x -> m -> (x_hat, m_hat) -> e -> y for a batch; `expert` may be empty when
/// use_expert_net is off. `item_offset` keys the seeded detail codes.
std::vector<Detection> detect_batch(const ExperimentConfig& config, IENet& ie, ExpertNet* expert,
                                    const PerceptualMeasurement& pm, const torch::Tensor& batch,
                                    int64_t item_offset = 0);

/// Scores every test item, writes maps/<id>.npy and masks/<id>.png when a run
/// directory is given, and aggregates the report. Throws empty-input on an empty set.
EvaluationReport evaluate(const ExperimentConfig& config, IENet& ie, ExpertNet* expert,
                          const PerceptualMeasurement& pm, const DatasetHandle& test, RunDirectory* run = nullptr);

void write_report(const EvaluationReport& report, const std::filesystem::path& path);

/// Loads a checkpoint, checking it against the configuration.
IENet load_ie_net(const ExperimentConfig& config, const std::filesystem::path& path);
ExpertNet load_expert_net(const ExperimentConfig& config, const std::filesystem::path& path);

struct AblationRow {
  std::string name;
  AblationConfig toggles;
  EvaluationReport report;
};

/// The seven toggle rows: baseline, +MI, +EN, +MI+EN, +EN+Guide, +MI+EN+Guide, full.
std::vector<std::pair<std::string, AblationConfig>> ablation_rows();
/// Full model plus one variant per disabled toggle.
std::vector<std::pair<std::string, AblationConfig>> single_toggle_rows();

/// Trains each distinct model once (IE-Net per MI setting, Expert-Net per MI and
/// guidance setting) and evaluates every requested row on the test set.
class AblationRunner {
 public:
  AblationRunner(ExperimentConfig config, torch::Tensor train_images, DatasetHandle test,
                 std::filesystem::path root, bool echo = false);

  AblationRow run(const std::string& name, const AblationConfig& toggles);
  std::vector<AblationRow> run_all(const std::vector<std::pair<std::string, AblationConfig>>& rows);

 private:
  IENet& ie(bool use_mi);
  ExpertNet& expert(bool use_mi, bool guidance);

  ExperimentConfig config_;
  torch::Tensor train_images_;
  DatasetHandle test_;
  std::filesystem::path root_;
  bool echo_;
  std::map<bool, IENet> ie_;
  std::map<std::pair<bool, bool>, ExpertNet> expert_;
  std::optional<PerceptualMeasurement> pm_;
};

nlohmann::json ablation_json(const std::vector<AblationRow>& rows);
std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace impress
