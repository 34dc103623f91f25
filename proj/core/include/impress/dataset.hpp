#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "impress/image.hpp"

namespace impress {

enum class Split { kTrain, kTest };

/// Label given to anomaly-free items in folder datasets.
inline constexpr const char* kGoodLabel = "good";

struct DatasetItem {
  /// File path, or a stable identifier for in-memory items.
  std::string path;
  /// Category the item belongs to (e.g. "bottle"); the class name for one-class sets.
  std::string category;
  /// Defect type for folder datasets ("good" when clean), class name for gridded sets.
  std::string label;
  std::optional<std::string> mask_path;
  bool anomalous = false;
  /// In-memory payloads for generated or IDX datasets; file-backed items leave them empty.
  cv::Mat raw_image;
  cv::Mat raw_mask;
  /// Pixel tally recorded by the synthetic defect painter.
  std::int64_t defect_pixels = 0;

  bool has_mask() const { return mask_path.has_value() || !raw_mask.empty(); }
};

struct DatasetHandle {
  std::filesystem::path root;
  Split split = Split::kTrain;
  std::vector<DatasetItem> items;
  int image_size = 256;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

struct SplitDataset {
  DatasetHandle train;
  DatasetHandle test;
};

/// MVTec-style layout: <category>/train/good/*, <category>/test/<defect>/*,
/// <category>/ground_truth/<defect>/<stem>[_mask].png. `root` may be one
/// category directory or a directory of categories. Items are ordered by path.
DatasetHandle load_folder_dataset(const std::filesystem::path& root, Split split, int image_size = 256);

/// Gridded class-folder layout: <root>/<train|test>/<class>/*.
SplitDataset load_class_folder_dataset(const std::filesystem::path& root, int image_size = 64);

/// MNIST-style IDX files (optionally gzip-compressed) in `dir`:
/// train-images-idx3-ubyte, train-labels-idx1-ubyte, t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte.
SplitDataset load_idx_dataset(const std::filesystem::path& dir, int image_size = 64);

/// One class is normal: train keeps that class from the train split, test keeps
/// every test item labeled anomalous when its class differs.
SplitDataset build_one_class_protocol(const SplitDataset& dataset, const std::string& normal_class);

/// Sorted distinct labels across both splits.
std::vector<std::string> class_labels(const SplitDataset& dataset);

/// Deterministic textured images. Train holds n_clean clean images; test holds
/// n_defect defect images (rectangles or 3-pixel strokes with exact masks) and
/// n_defect held-out clean images.
SplitDataset synth_defect_dataset(int n_clean, int n_defect, int image_size, std::uint64_t seed);

ImageTensor load_image(const DatasetItem& item, int image_size, int channels);
/// Ground-truth mask; an all-zero mask for clean items.
BinaryMask load_mask(const DatasetItem& item, int image_size);

/// Line-delimited index: `path<TAB>label<TAB>mask-path` ("-" when absent).
std::string manifest_text(const DatasetHandle& handle);
void write_manifest(const DatasetHandle& handle, const std::filesystem::path& path);

/// Exports in-memory datasets in the MVTec folder layout under root/<category>.
void write_folder_dataset(const SplitDataset& dataset, const std::filesystem::path& root,
                          const std::string& category = "synthetic");

}  // namespace impress
