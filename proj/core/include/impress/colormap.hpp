#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>

namespace impress {

using Rgb = std::array<std::uint8_t, 3>;

/// 256-entry heatmap palette. Entries interpolate linearly (integer
/// arithmetic, round half up) between the anchors
///   0: (0,0,128)  64: (0,0,255)  112: (0,255,255)  144: (255,255,0)  192: (255,0,0)  255: (128,0,0)
/// so rendered heatmaps are identical on every platform.
const std::array<Rgb, 256>& heatmap_palette();

/// H x W map in [0,1] -> 3 x H x W uint8 RGB, index = floor(v * 255 + 0.5).
torch::Tensor apply_heatmap(const torch::Tensor& map01);

/// Blends the heatmap over a C x H x W image in [0,1]; weight is the heatmap share.
torch::Tensor overlay_heatmap(const torch::Tensor& image, const torch::Tensor& map01, double weight = 0.5);

}  // namespace impress
