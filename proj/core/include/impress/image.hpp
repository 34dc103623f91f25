#pragma once

#include <torch/torch.h>

#include <filesystem>

#include <opencv2/core.hpp>

namespace impress {

/// Channel-first float32 image (C x H x W) with values in [0,1].
class ImageTensor {
 public:
  ImageTensor() = default;
  /// Validates rank, dtype and value range; throws shape-error otherwise.
  explicit ImageTensor(torch::Tensor chw);

  const torch::Tensor& tensor() const { return data_; }
  int64_t channels() const { return data_.size(0); }
  int64_t height() const { return data_.size(1); }
  int64_t width() const { return data_.size(2); }
  bool defined() const { return data_.defined(); }

 private:
  torch::Tensor data_;
};

/// H x W uint8 mask with values in {0,1}.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(torch::Tensor hw);

  const torch::Tensor& tensor() const { return data_; }
  int64_t height() const { return data_.size(0); }
  int64_t width() const { return data_.size(1); }
  int64_t count() const { return data_.sum().item<int64_t>(); }
  bool defined() const { return data_.defined(); }

 private:
  torch::Tensor data_;
};

/// Decodes an image file (PNG, JPEG, BMP); throws decode-error when unreadable.
cv::Mat read_image(const std::filesystem::path& path);

/// Bilinear resize to target_size x target_size and scale intensities to [0,1].
/// 8-bit data is divided by 255, 16-bit by 65535, float data is taken as is.
/// Grayscale inputs are replicated when `channels` is 3; color inputs are
/// converted to luminance when `channels` is 1. Input Mats are BGR (OpenCV order);
/// the result is RGB.
ImageTensor preprocess(const cv::Mat& raw, int target_size, int channels = 3);

/// Resizes a mask (bilinear on 8-bit values) and binarizes it at 127/255.
BinaryMask preprocess_mask(const cv::Mat& raw, int target_size);

/// Converts back to an OpenCV BGR (or gray) CV_32F image in [0,1].
cv::Mat to_mat(const ImageTensor& image);

void save_png(const ImageTensor& image, const std::filesystem::path& path);
void save_mask_png(const BinaryMask& mask, const std::filesystem::path& path);
/// Writes an H x W map in [0,1] as 8-bit grayscale.
void save_gray_png(const torch::Tensor& map01, const std::filesystem::path& path);
void save_rgb_png(const torch::Tensor& chw_uint8, const std::filesystem::path& path);

/// Little-endian float32 NumPy (.npy, format 1.0) array I/O.
void write_npy(const std::filesystem::path& path, const torch::Tensor& values);
torch::Tensor read_npy(const std::filesystem::path& path);

}  // namespace impress
