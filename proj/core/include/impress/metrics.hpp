#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "impress/image.hpp"

namespace impress {

/// |pred & gt| / |pred | gt|; 1.0 when both masks are empty.
double iou(const BinaryMask& pred, const BinaryMask& gt);

/// Pools intersection and union counts over many masks.
class IouAccumulator {
 public:
  void add(const BinaryMask& pred, const BinaryMask& gt);
  double value() const;
  int64_t intersection() const { return intersection_; }
  int64_t union_count() const { return union_; }

 private:
  int64_t intersection_ = 0;
  int64_t union_ = 0;
};

/// Mann-Whitney AuROC: P(score of a random positive > score of a random
/// negative), ties counting 1/2. Throws degenerate-labels unless both classes occur.
double auroc(std::span<const double> scores, std::span<const int> labels);
double auroc(std::span<const float> scores, std::span<const uint8_t> labels);

struct CategoryRecord {
  std::string category;
  /// Pooled pixel IoU over items that carry a ground-truth mask.
  std::optional<double> iou;
  /// Pooled pixel AuROC over the normalized maps of masked items.
  std::optional<double> pixel_auroc;
  /// AuROC of image scores; needs clean and anomalous items.
  std::optional<double> image_auroc;
  int64_t items = 0;
};

struct EvaluationReport {
  std::vector<CategoryRecord> categories;
  std::optional<double> mean_iou;
  std::optional<double> mean_pixel_auroc;
  std::optional<double> mean_image_auroc;
  std::string config_fingerprint;
  std::vector<std::string> notes;
};

/// Per-image outcome fed to the aggregator.
struct ItemResult {
  std::string category;
  bool anomalous = false;
  double score = 0.0;
  torch::Tensor normalized;  // H x W in [0,1]
  BinaryMask prediction;
  std::optional<BinaryMask> ground_truth;
};

/// Streams item results of one category.
class CategoryAccumulator {
 public:
  explicit CategoryAccumulator(std::string category) : category_(std::move(category)) {}
  void add(const ItemResult& item);
  CategoryRecord finish() const;

 private:
  std::string category_;
  IouAccumulator iou_;
  bool any_mask_ = false;
  std::vector<float> pixel_scores_;
  std::vector<uint8_t> pixel_labels_;
  std::vector<double> image_scores_;
  std::vector<int> image_labels_;
  int64_t items_ = 0;
};

/// Unweighted means over categories; throws empty-input on no records.
EvaluationReport aggregate_report(std::vector<CategoryRecord> records, std::string config_fingerprint = {});
/// Groups items by category (sorted), then aggregates.
EvaluationReport aggregate_items(const std::vector<ItemResult>& items, std::string config_fingerprint = {});

nlohmann::json to_json(const EvaluationReport& report);
std::string to_table(const EvaluationReport& report);
std::string to_csv(const EvaluationReport& report);

}  // namespace impress
