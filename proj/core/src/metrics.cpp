#include "impress/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "impress/error.hpp"

namespace impress {

double iou(const BinaryMask& pred, const BinaryMask& gt) {
  IouAccumulator acc;
  acc.add(pred, gt);
  return acc.value();
}

void IouAccumulator::add(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.tensor().sizes() != gt.tensor().sizes()) fail(ErrorKind::kShapeError, "IoU masks differ in shape");
  const auto p = pred.tensor().to(torch::kBool);
  const auto g = gt.tensor().to(torch::kBool);
  intersection_ += (p & g).sum().item<int64_t>();
  union_ += (p | g).sum().item<int64_t>();
}

double IouAccumulator::value() const {
  if (union_ == 0) return 1.0;
  return static_cast<double>(intersection_) / static_cast<double>(union_);
}

namespace {

template <typename Score, typename Label>
double auroc_impl(std::span<const Score> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) fail(ErrorKind::kShapeError, "scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positives = 0.0, rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    double group_pos = 0.0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] != 0) group_pos += 1.0;
      ++j;
    }
    // Average 1-based rank of the tie group.
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    rank_sum += group_pos * avg_rank;
    positives += group_pos;
    i = j;
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0)
    fail(ErrorKind::kDegenerateLabels, "AuROC needs both positive and negative labels");
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) { return auroc_impl(scores, labels); }

double auroc(std::span<const float> scores, std::span<const uint8_t> labels) { return auroc_impl(scores, labels); }

void CategoryAccumulator::add(const ItemResult& item) {
  ++items_;
  image_scores_.push_back(item.score);
  image_labels_.push_back(item.anomalous ? 1 : 0);
  if (!item.ground_truth) return;
  any_mask_ = true;
  iou_.add(item.prediction, *item.ground_truth);
  auto scores = item.normalized.to(torch::kFloat32).contiguous().flatten();
  auto labels = item.ground_truth->tensor().contiguous().flatten();
  const float* s = scores.data_ptr<float>();
  const uint8_t* l = labels.data_ptr<uint8_t>();
  pixel_scores_.insert(pixel_scores_.end(), s, s + scores.numel());
  pixel_labels_.insert(pixel_labels_.end(), l, l + labels.numel());
}

CategoryRecord CategoryAccumulator::finish() const {
  CategoryRecord r;
  r.category = category_;
  r.items = items_;
  if (any_mask_) {
    r.iou = iou_.value();
    const bool both = std::any_of(pixel_labels_.begin(), pixel_labels_.end(), [](uint8_t v) { return v != 0; }) &&
                      std::any_of(pixel_labels_.begin(), pixel_labels_.end(), [](uint8_t v) { return v == 0; });
    if (both) r.pixel_auroc = auroc(std::span<const float>(pixel_scores_), std::span<const uint8_t>(pixel_labels_));
  }
  const bool both_images = std::find(image_labels_.begin(), image_labels_.end(), 0) != image_labels_.end() &&
                           std::find(image_labels_.begin(), image_labels_.end(), 1) != image_labels_.end();
  if (both_images) r.image_auroc = auroc(std::span<const double>(image_scores_), std::span<const int>(image_labels_));
  return r;
}

EvaluationReport aggregate_report(std::vector<CategoryRecord> records, std::string config_fingerprint) {
  if (records.empty()) fail(ErrorKind::kEmptyInput, "no results to aggregate");
  EvaluationReport report;
  report.config_fingerprint = std::move(config_fingerprint);
  auto mean_of = [&](auto member) -> std::optional<double> {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : records) {
      if (const auto& v = r.*member) {
        sum += *v;
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
  };
  report.mean_iou = mean_of(&CategoryRecord::iou);
  report.mean_pixel_auroc = mean_of(&CategoryRecord::pixel_auroc);
  report.mean_image_auroc = mean_of(&CategoryRecord::image_auroc);
  report.categories = std::move(records);
  return report;
}

EvaluationReport aggregate_items(const std::vector<ItemResult>& items, std::string config_fingerprint) {
  if (items.empty()) fail(ErrorKind::kEmptyInput, "no results to aggregate");
  std::map<std::string, CategoryAccumulator> groups;
  for (const auto& item : items) groups.try_emplace(item.category, item.category).first->second.add(item);
  std::vector<CategoryRecord> records;
  for (const auto& [name, acc] : groups) records.push_back(acc.finish());
  return aggregate_report(std::move(records), std::move(config_fingerprint));
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string cell(const std::optional<double>& v) {
  if (!v) return "   -  ";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

}  // namespace

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json j;
  j["config_fingerprint"] = report.config_fingerprint;
  j["categories"] = nlohmann::json::array();
  for (const auto& r : report.categories) {
    j["categories"].push_back({{"category", r.category},
                               {"iou", opt(r.iou)},
                               {"pixel_auroc", opt(r.pixel_auroc)},
                               {"image_auroc", opt(r.image_auroc)},
                               {"items", r.items}});
  }
  j["mean"] = {{"iou", opt(report.mean_iou)},
               {"pixel_auroc", opt(report.mean_pixel_auroc)},
               {"image_auroc", opt(report.mean_image_auroc)}};
  j["notes"] = report.notes;
  return j;
}

std::string to_table(const EvaluationReport& report) {
  std::string out = "category              IoU     pixAUC  imgAUC  items\n";
  char line[160];
  for (const auto& r : report.categories) {
    std::snprintf(line, sizeof(line), "%-20s  %s  %s  %s  %lld\n", r.category.c_str(), cell(r.iou).c_str(),
                  cell(r.pixel_auroc).c_str(), cell(r.image_auroc).c_str(), static_cast<long long>(r.items));
    out += line;
  }
  std::snprintf(line, sizeof(line), "%-20s  %s  %s  %s\n", "mean", cell(report.mean_iou).c_str(),
                cell(report.mean_pixel_auroc).c_str(), cell(report.mean_image_auroc).c_str());
  out += line;
  return out;
}

std::string to_csv(const EvaluationReport& report) {
  std::string out = "category,iou,pixel_auroc,image_auroc,items\n";
  auto field = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return std::string(buf);
  };
  for (const auto& r : report.categories)
    out += r.category + "," + field(r.iou) + "," + field(r.pixel_auroc) + "," + field(r.image_auroc) + "," +
           std::to_string(r.items) + "\n";
  return out;
}

}  // namespace impress
