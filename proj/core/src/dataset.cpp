#include "impress/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include <opencv2/imgproc.hpp>

#include "impress/error.hpp"

namespace impress {
namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".tif" || ext == ".tiff";
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : (e.is_regular_file() && is_image_file(e.path()))) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<fs::path> find_mask(const fs::path& category_dir, const std::string& defect, const fs::path& image) {
  const fs::path gt = category_dir / "ground_truth" / defect;
  const std::string stem = image.stem().string();
  for (const auto& candidate : {gt / (stem + "_mask.png"), gt / (stem + ".png")}) {
    if (fs::is_regular_file(candidate)) return candidate;
  }
  return std::nullopt;
}

void load_category(const fs::path& category_dir, Split split, DatasetHandle& out) {
  const std::string category = category_dir.filename().string();
  if (split == Split::kTrain) {
    for (const auto& img : sorted_entries(category_dir / "train" / kGoodLabel, false)) {
      DatasetItem item;
      item.path = img.string();
      item.category = category;
      item.label = kGoodLabel;
      out.items.push_back(std::move(item));
    }
    return;
  }
  for (const auto& defect_dir : sorted_entries(category_dir / "test", true)) {
    const std::string label = defect_dir.filename().string();
    for (const auto& img : sorted_entries(defect_dir, false)) {
      DatasetItem item;
      item.path = img.string();
      item.category = category;
      item.label = label;
      item.anomalous = label != kGoodLabel;
      if (item.anomalous) {
        auto mask = find_mask(category_dir, label, img);
        if (!mask) fail(ErrorKind::kLayoutViolation, "anomalous test image lacks a mask: " + img.string());
        item.mask_path = mask->string();
      }
      out.items.push_back(std::move(item));
    }
  }
}

bool looks_like_category(const fs::path& dir) {
  return fs::is_directory(dir / "train") || fs::is_directory(dir / "test");
}

}  // namespace

DatasetHandle load_folder_dataset(const fs::path& root, Split split, int image_size) {
  if (!fs::is_directory(root)) fail(ErrorKind::kDatasetNotFound, "dataset root not found: " + root.string());
  DatasetHandle handle;
  handle.root = root;
  handle.split = split;
  handle.image_size = image_size;
  if (looks_like_category(root)) {
    load_category(root, split, handle);
  } else {
    bool any = false;
    for (const auto& dir : sorted_entries(root, true)) {
      if (!looks_like_category(dir)) continue;
      any = true;
      load_category(dir, split, handle);
    }
    if (!any) fail(ErrorKind::kLayoutViolation, "no <category>/train or <category>/test under " + root.string());
  }
  std::stable_sort(handle.items.begin(), handle.items.end(),
                   [](const DatasetItem& a, const DatasetItem& b) { return a.path < b.path; });
  return handle;
}

SplitDataset load_class_folder_dataset(const fs::path& root, int image_size) {
  if (!fs::is_directory(root)) fail(ErrorKind::kDatasetNotFound, "dataset root not found: " + root.string());
  SplitDataset out;
  for (auto [split, name] : {std::pair{Split::kTrain, "train"}, std::pair{Split::kTest, "test"}}) {
    DatasetHandle& h = split == Split::kTrain ? out.train : out.test;
    h.root = root;
    h.split = split;
    h.image_size = image_size;
    if (!fs::is_directory(root / name)) fail(ErrorKind::kLayoutViolation, "missing " + (root / name).string());
    for (const auto& class_dir : sorted_entries(root / name, true)) {
      for (const auto& img : sorted_entries(class_dir, false)) {
        DatasetItem item;
        item.path = img.string();
        item.label = class_dir.filename().string();
        item.category = item.label;
        h.items.push_back(std::move(item));
      }
    }
  }
  return out;
}

namespace {

std::vector<unsigned char> read_gz(const fs::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) fail(ErrorKind::kDatasetNotFound, "cannot open " + path.string());
  std::vector<unsigned char> data;
  unsigned char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) data.insert(data.end(), buf, buf + n);
  gzclose(f);
  if (n < 0) fail(ErrorKind::kDecodeError, "corrupt archive " + path.string());
  return data;
}

uint32_t be32(const std::vector<unsigned char>& d, std::size_t off) {
  return (uint32_t{d[off]} << 24) | (uint32_t{d[off + 1]} << 16) | (uint32_t{d[off + 2]} << 8) | d[off + 3];
}

fs::path find_idx(const fs::path& dir, const std::string& stem) {
  for (const auto& candidate : {dir / stem, dir / (stem + ".gz"), dir / [&] {
                                  std::string s = stem;
                                  auto pos = s.find("-idx");
                                  if (pos != std::string::npos) s[pos] = '.';
                                  return s;
                                }()}) {
    if (fs::is_regular_file(candidate)) return candidate;
  }
  fail(ErrorKind::kDatasetNotFound, "missing IDX file " + (dir / stem).string());
}

void load_idx_split(const fs::path& images_path, const fs::path& labels_path, DatasetHandle& out) {
  const auto images = read_gz(images_path);
  const auto labels = read_gz(labels_path);
  if (images.size() < 16 || be32(images, 0) != 0x00000803 || labels.size() < 8 || be32(labels, 0) != 0x00000801)
    fail(ErrorKind::kDecodeError, "bad IDX magic in " + images_path.string());
  const uint32_t count = be32(images, 4), rows = be32(images, 8), cols = be32(images, 12);
  if (be32(labels, 4) != count || images.size() < 16 + std::size_t{count} * rows * cols || labels.size() < 8 + count)
    fail(ErrorKind::kDecodeError, "inconsistent IDX sizes in " + images_path.string());
  out.items.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    DatasetItem item;
    item.label = std::to_string(labels[8 + i]);
    item.category = item.label;
    char id[32];
    std::snprintf(id, sizeof(id), "#%06u", i);
    item.path = images_path.filename().string() + id;
    item.raw_image = cv::Mat(static_cast<int>(rows), static_cast<int>(cols), CV_8U,
                             const_cast<unsigned char*>(images.data() + 16 + std::size_t{i} * rows * cols))
                         .clone();
    out.items.push_back(std::move(item));
  }
}

}  // namespace

SplitDataset load_idx_dataset(const fs::path& dir, int image_size) {
  if (!fs::is_directory(dir)) fail(ErrorKind::kDatasetNotFound, "dataset directory not found: " + dir.string());
  SplitDataset out;
  out.train.root = out.test.root = dir;
  out.train.split = Split::kTrain;
  out.test.split = Split::kTest;
  out.train.image_size = out.test.image_size = image_size;
  load_idx_split(find_idx(dir, "train-images-idx3-ubyte"), find_idx(dir, "train-labels-idx1-ubyte"), out.train);
  load_idx_split(find_idx(dir, "t10k-images-idx3-ubyte"), find_idx(dir, "t10k-labels-idx1-ubyte"), out.test);
  return out;
}

std::vector<std::string> class_labels(const SplitDataset& dataset) {
  std::set<std::string> labels;
  for (const auto* h : {&dataset.train, &dataset.test})
    for (const auto& item : h->items) labels.insert(item.label);
  return {labels.begin(), labels.end()};
}

SplitDataset build_one_class_protocol(const SplitDataset& dataset, const std::string& normal_class) {
  const auto labels = class_labels(dataset);
  if (std::find(labels.begin(), labels.end(), normal_class) == labels.end())
    fail(ErrorKind::kUnknownClass, "class '" + normal_class + "' is not in the label set");
  SplitDataset out;
  out.train = dataset.train;
  out.train.items.clear();
  out.test = dataset.test;
  out.test.items.clear();
  for (const auto& item : dataset.train.items) {
    if (item.label != normal_class) continue;
    DatasetItem copy = item;
    copy.category = normal_class;
    copy.anomalous = false;
    out.train.items.push_back(std::move(copy));
  }
  for (const auto& item : dataset.test.items) {
    DatasetItem copy = item;
    copy.category = normal_class;
    copy.anomalous = item.label != normal_class;
    out.test.items.push_back(std::move(copy));
  }
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct TexturePainter {
  int size;

  // BGR float image of the base texture under a small random rigid jitter.
  cv::Mat paint(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> shift(-3.0, 3.0), angle(-4.0, 4.0), scale(0.97, 1.03);
    std::normal_distribution<double> noise(0.0, 0.005);
    const double tx = shift(rng), ty = shift(rng);
    const double theta = angle(rng) * std::numbers::pi / 180.0;
    const double s = scale(rng);
    const double c = size / 2.0;
    const double p1 = size / 4.0, p2 = size / 10.0;
    cv::Mat img(size, size, CV_32FC3);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double dx = (x - c) * s, dy = (y - c) * s;
        const double u = std::cos(theta) * dx - std::sin(theta) * dy + c + tx;
        const double v = std::sin(theta) * dx + std::cos(theta) * dy + c + ty;
        const double g = 0.5 + 0.15 * std::sin(2 * std::numbers::pi * u / p1) * std::sin(2 * std::numbers::pi * v / p1) +
                         0.08 * std::sin(2 * std::numbers::pi * (u + v) / p2);
        const double r = g + noise(rng), gr = 0.8 * g + 0.1 + noise(rng), b = 0.6 * g + 0.2 + noise(rng);
        img.at<cv::Vec3f>(y, x) = cv::Vec3f(static_cast<float>(std::clamp(b, 0.0, 1.0)),
                                            static_cast<float>(std::clamp(gr, 0.0, 1.0)),
                                            static_cast<float>(std::clamp(r, 0.0, 1.0)));
      }
    }
    return img;
  }
};

// Paints one defect in place; returns the defect type. `mask` receives 1 on painted pixels.
std::string paint_defect(cv::Mat& img, cv::Mat& mask, std::mt19937_64& rng) {
  const int size = img.rows;
  std::bernoulli_distribution coin(0.5);
  const bool dark = coin(rng);
  const cv::Vec3f color = dark ? cv::Vec3f(0.05f, 0.05f, 0.05f) : cv::Vec3f(0.95f, 0.95f, 0.95f);
  mask = cv::Mat::zeros(size, size, CV_8U);
  std::string type;
  if (coin(rng)) {
    type = "rectangle";
    std::uniform_int_distribution<int> extent(std::max(2, size / 10), std::max(3, size / 4));
    const int w = extent(rng), h = extent(rng);
    std::uniform_int_distribution<int> px(0, size - w), py(0, size - h);
    const int x0 = px(rng), y0 = py(rng);
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) mask.at<uint8_t>(y, x) = 1;
  } else {
    type = "stroke";
    std::uniform_real_distribution<double> pos(size * 0.15, size * 0.85), len(size / 4.0, size / 2.0),
        ang(0.0, std::numbers::pi);
    const double x0 = pos(rng), y0 = pos(rng), l = len(rng), a = ang(rng);
    const double x1 = std::clamp(x0 + l * std::cos(a), 0.0, size - 1.0);
    const double y1 = std::clamp(y0 + l * std::sin(a), 0.0, size - 1.0);
    const double vx = x1 - x0, vy = y1 - y0, vv = vx * vx + vy * vy;
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double t = vv > 0 ? std::clamp(((x - x0) * vx + (y - y0) * vy) / vv, 0.0, 1.0) : 0.0;
        const double ex = x - (x0 + t * vx), ey = y - (y0 + t * vy);
        // Distance <= 1 from the center line gives a 3-pixel-wide stroke.
        if (ex * ex + ey * ey <= 1.0) mask.at<uint8_t>(y, x) = 1;
      }
    }
  }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if (mask.at<uint8_t>(y, x)) img.at<cv::Vec3f>(y, x) = color;
  return type;
}

}  // namespace

SplitDataset synth_defect_dataset(int n_clean, int n_defect, int image_size, std::uint64_t seed) {
  if (n_clean < 1) fail(ErrorKind::kInvalidCount, "n_clean must be >= 1");
  if (n_defect < 0) fail(ErrorKind::kInvalidCount, "n_defect must be >= 0");
  if (image_size < 8) fail(ErrorKind::kInvalidCount, "image_size must be >= 8");
  const TexturePainter painter{image_size};
  SplitDataset out;
  out.train.root = out.test.root = "synthetic";
  out.train.split = Split::kTrain;
  out.test.split = Split::kTest;
  out.train.image_size = out.test.image_size = image_size;

  auto stream = [seed](std::uint64_t role, std::uint64_t index) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(role * 0x100000000ULL + index)));
  };
  char name[64];
  for (int i = 0; i < n_clean; ++i) {
    auto rng = stream(1, i);
    DatasetItem item;
    std::snprintf(name, sizeof(name), "synthetic/train/good/%04d.png", i);
    item.path = name;
    item.category = "synthetic";
    item.label = kGoodLabel;
    item.raw_image = painter.paint(rng);
    out.train.items.push_back(std::move(item));
  }
  for (int i = 0; i < n_defect; ++i) {
    auto rng = stream(2, i);
    DatasetItem item;
    item.raw_image = painter.paint(rng);
    item.label = paint_defect(item.raw_image, item.raw_mask, rng);
    item.defect_pixels = cv::countNonZero(item.raw_mask);
    std::snprintf(name, sizeof(name), "synthetic/test/%s/%04d.png", item.label.c_str(), i);
    item.path = name;
    std::snprintf(name, sizeof(name), "synthetic/ground_truth/%s/%04d_mask.png", item.label.c_str(), i);
    item.mask_path = name;
    item.category = "synthetic";
    item.anomalous = true;
    out.test.items.push_back(std::move(item));
  }
  for (int i = 0; i < n_defect; ++i) {
    auto rng = stream(3, i);
    DatasetItem item;
    std::snprintf(name, sizeof(name), "synthetic/test/good/%04d.png", i);
    item.path = name;
    item.category = "synthetic";
    item.label = kGoodLabel;
    item.raw_image = painter.paint(rng);
    out.test.items.push_back(std::move(item));
  }
  std::stable_sort(out.test.items.begin(), out.test.items.end(),
                   [](const DatasetItem& a, const DatasetItem& b) { return a.path < b.path; });
  return out;
}

ImageTensor load_image(const DatasetItem& item, int image_size, int channels) {
  if (!item.raw_image.empty()) return preprocess(item.raw_image, image_size, channels);
  return preprocess(read_image(item.path), image_size, channels);
}

BinaryMask load_mask(const DatasetItem& item, int image_size) {
  if (!item.raw_mask.empty()) {
    cv::Mat scaled = item.raw_mask * 255;
    return preprocess_mask(scaled, image_size);
  }
  if (item.mask_path) return preprocess_mask(read_image(*item.mask_path), image_size);
  return BinaryMask(torch::zeros({image_size, image_size}, torch::kUInt8));
}

std::string manifest_text(const DatasetHandle& handle) {
  std::string out;
  for (const auto& item : handle.items) {
    out += item.path + "\t" + item.label + "\t" + (item.mask_path ? *item.mask_path : std::string("-")) + "\n";
  }
  return out;
}

void write_manifest(const DatasetHandle& handle, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path.string());
  out << manifest_text(handle);
}

void write_folder_dataset(const SplitDataset& dataset, const fs::path& root, const std::string& category) {
  const fs::path base = root / category;
  char name[64];
  for (const auto& item : dataset.train.items) {
    const fs::path file = base / "train" / kGoodLabel / fs::path(item.path).filename();
    save_png(load_image(item, dataset.train.image_size, 3), file);
  }
  for (const auto& item : dataset.test.items) {
    const fs::path stem = fs::path(item.path).stem();
    save_png(load_image(item, dataset.test.image_size, 3), base / "test" / item.label / (stem.string() + ".png"));
    if (item.anomalous) {
      std::snprintf(name, sizeof(name), "%s_mask.png", stem.string().c_str());
      save_mask_png(load_mask(item, dataset.test.image_size), base / "ground_truth" / item.label / name);
    }
  }
}

}  // namespace impress
