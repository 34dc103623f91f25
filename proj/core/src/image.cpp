#include "impress/image.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "impress/error.hpp"

namespace impress {

ImageTensor::ImageTensor(torch::Tensor chw) : data_(std::move(chw)) {
  if (data_.dim() != 3) fail(ErrorKind::kShapeError, "image tensor must be C x H x W");
  if (data_.scalar_type() != torch::kFloat32) data_ = data_.to(torch::kFloat32);
  if (data_.numel() > 0) {
    const auto lo = data_.min().item<float>();
    const auto hi = data_.max().item<float>();
    if (!(lo >= 0.0f && hi <= 1.0f)) fail(ErrorKind::kShapeError, "image values must be finite and within [0,1]");
  }
}

BinaryMask::BinaryMask(torch::Tensor hw) : data_(std::move(hw)) {
  if (data_.dim() != 2) fail(ErrorKind::kShapeError, "mask must be H x W");
  data_ = data_.to(torch::kUInt8);
  if (data_.numel() > 0 && data_.max().item<int>() > 1) fail(ErrorKind::kShapeError, "mask values must be 0 or 1");
}

cv::Mat read_image(const std::filesystem::path& path) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) fail(ErrorKind::kDecodeError, "cannot decode image " + path.string());
  return img;
}

namespace {

cv::Mat to_unit_float(const cv::Mat& raw) {
  cv::Mat out;
  switch (raw.depth()) {
    case CV_8U: raw.convertTo(out, CV_32F, 1.0 / 255.0); break;
    case CV_16U: raw.convertTo(out, CV_32F, 1.0 / 65535.0); break;
    case CV_32F: out = raw.clone(); break;
    case CV_64F: raw.convertTo(out, CV_32F); break;
    default: fail(ErrorKind::kDecodeError, "unsupported image depth");
  }
  return out;
}

}  // namespace

ImageTensor preprocess(const cv::Mat& raw, int target_size, int channels) {
  if (target_size <= 0) fail(ErrorKind::kShapeError, "target size must be positive");
  if (raw.empty()) fail(ErrorKind::kDecodeError, "empty image");
  cv::Mat img = to_unit_float(raw);
  if (img.channels() == 4) cv::cvtColor(img, img, cv::COLOR_BGRA2BGR);
  if (channels == 3 && img.channels() == 1) {
    cv::cvtColor(img, img, cv::COLOR_GRAY2BGR);
  } else if (channels == 1 && img.channels() == 3) {
    cv::cvtColor(img, img, cv::COLOR_BGR2GRAY);
  } else if (img.channels() != channels) {
    fail(ErrorKind::kDecodeError, "unsupported channel layout");
  }
  if (img.rows != target_size || img.cols != target_size) {
    cv::Mat resized;
    cv::resize(img, resized, cv::Size(target_size, target_size), 0, 0, cv::INTER_LINEAR);
    img = resized;
  }
  if (channels == 3) cv::cvtColor(img, img, cv::COLOR_BGR2RGB);
  cv::min(img, 1.0, img);
  cv::max(img, 0.0, img);
  img = img.isContinuous() ? img : img.clone();
  auto hwc = torch::from_blob(img.data, {target_size, target_size, channels}, torch::kFloat32).clone();
  return ImageTensor(hwc.permute({2, 0, 1}).contiguous());
}

BinaryMask preprocess_mask(const cv::Mat& raw, int target_size) {
  if (raw.empty()) fail(ErrorKind::kDecodeError, "empty mask");
  cv::Mat gray = raw;
  if (gray.channels() == 3) cv::cvtColor(gray, gray, cv::COLOR_BGR2GRAY);
  if (gray.channels() == 4) cv::cvtColor(gray, gray, cv::COLOR_BGRA2GRAY);
  if (gray.depth() == CV_16U) gray.convertTo(gray, CV_8U, 1.0 / 257.0);
  if (gray.depth() != CV_8U) gray.convertTo(gray, CV_8U, 255.0);
  if (gray.rows != target_size || gray.cols != target_size) {
    cv::Mat resized;
    cv::resize(gray, resized, cv::Size(target_size, target_size), 0, 0, cv::INTER_LINEAR);
    gray = resized;
  }
  cv::Mat bin = gray > 127;
  bin = bin / 255;
  bin = bin.isContinuous() ? bin : bin.clone();
  return BinaryMask(torch::from_blob(bin.data, {target_size, target_size}, torch::kUInt8).clone());
}

cv::Mat to_mat(const ImageTensor& image) {
  auto hwc = image.tensor().permute({1, 2, 0}).contiguous();
  const int c = static_cast<int>(image.channels());
  cv::Mat mat(static_cast<int>(image.height()), static_cast<int>(image.width()), CV_32FC(c));
  std::memcpy(mat.data, hwc.data_ptr<float>(), hwc.numel() * sizeof(float));
  if (c == 3) cv::cvtColor(mat, mat, cv::COLOR_RGB2BGR);
  return mat;
}

namespace {

void write_or_throw(const std::filesystem::path& path, const cv::Mat& mat) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), mat)) fail(ErrorKind::kIoError, "cannot write " + path.string());
}

}  // namespace

void save_png(const ImageTensor& image, const std::filesystem::path& path) {
  cv::Mat out;
  to_mat(image).convertTo(out, CV_8U, 255.0);
  write_or_throw(path, out);
}

void save_mask_png(const BinaryMask& mask, const std::filesystem::path& path) {
  auto t = (mask.tensor() * 255).to(torch::kUInt8).contiguous();
  cv::Mat mat(static_cast<int>(mask.height()), static_cast<int>(mask.width()), CV_8U);
  std::memcpy(mat.data, t.data_ptr<uint8_t>(), t.numel());
  write_or_throw(path, mat);
}

void save_gray_png(const torch::Tensor& map01, const std::filesystem::path& path) {
  if (map01.dim() != 2) fail(ErrorKind::kShapeError, "gray image must be H x W");
  auto t = (map01.to(torch::kFloat32).clamp(0, 1) * 255.0f).round().to(torch::kUInt8).contiguous();
  cv::Mat mat(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), CV_8U);
  std::memcpy(mat.data, t.data_ptr<uint8_t>(), t.numel());
  write_or_throw(path, mat);
}

void save_rgb_png(const torch::Tensor& chw_uint8, const std::filesystem::path& path) {
  if (chw_uint8.dim() != 3 || chw_uint8.size(0) != 3) fail(ErrorKind::kShapeError, "expected 3 x H x W");
  auto hwc = chw_uint8.to(torch::kUInt8).permute({1, 2, 0}).contiguous();
  cv::Mat mat(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)), CV_8UC3);
  std::memcpy(mat.data, hwc.data_ptr<uint8_t>(), hwc.numel());
  cv::cvtColor(mat, mat, cv::COLOR_RGB2BGR);
  write_or_throw(path, mat);
}

void write_npy(const std::filesystem::path& path, const torch::Tensor& values) {
  auto t = values.to(torch::kFloat32).contiguous();
  std::string shape = "(";
  for (int64_t i = 0; i < t.dim(); ++i) shape += std::to_string(t.size(i)) + (t.dim() == 1 || i + 1 < t.dim() ? "," : "");
  shape += ")";
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape + ", }";
  // Magic (6) + version (2) + length (2) + header must be a multiple of 64 bytes.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header += '\n';
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path.string());
  const char magic[] = "\x93NUMPY\x01\x00";
  out.write(magic, 8);
  const auto len = static_cast<uint16_t>(header.size());
  const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  out.write(len_bytes, 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(t.data_ptr<float>()), static_cast<std::streamsize>(t.numel() * 4));
}

torch::Tensor read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIoError, "cannot read " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0 || magic[6] != 1)
    fail(ErrorKind::kDecodeError, "not a version-1 .npy file: " + path.string());
  unsigned char len_bytes[2];
  in.read(reinterpret_cast<char*>(len_bytes), 2);
  const std::size_t len = len_bytes[0] | (len_bytes[1] << 8);
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (header.find("'<f4'") == std::string::npos || header.find("'fortran_order': False") == std::string::npos)
    fail(ErrorKind::kDecodeError, "only little-endian C-order float32 .npy is supported");
  const auto open = header.find('(', header.find("'shape'"));
  const auto close = header.find(')', open);
  std::vector<int64_t> dims;
  std::stringstream ss(header.substr(open + 1, close - open - 1));
  std::string item;
  while (std::getline(ss, item, ','))
    if (item.find_first_not_of(' ') != std::string::npos) dims.push_back(std::stoll(item));
  auto out = torch::empty(dims, torch::kFloat32);
  in.read(reinterpret_cast<char*>(out.data_ptr<float>()), static_cast<std::streamsize>(out.numel() * 4));
  if (!in) fail(ErrorKind::kDecodeError, "truncated .npy file: " + path.string());
  return out;
}

}  // namespace impress
