#include "impress/colormap.hpp"

#include "impress/error.hpp"

namespace impress {

namespace {

struct Anchor {
  int index;
  int r, g, b;
};

constexpr std::array<Anchor, 6> kAnchors{{
    {0, 0, 0, 128},
    {64, 0, 0, 255},
    {112, 0, 255, 255},
    {144, 255, 255, 0},
    {192, 255, 0, 0},
    {255, 128, 0, 0},
}};

std::uint8_t lerp(int a, int b, int t, int span) {
  // round half up on non-negative numerators
  const int num = a * (span - t) + b * t;
  return static_cast<std::uint8_t>((2 * num + span) / (2 * span));
}

std::array<Rgb, 256> build_palette() {
  std::array<Rgb, 256> lut{};
  for (std::size_t k = 0; k + 1 < kAnchors.size(); ++k) {
    const auto& lo = kAnchors[k];
    const auto& hi = kAnchors[k + 1];
    const int span = hi.index - lo.index;
    for (int i = lo.index; i <= hi.index; ++i) {
      const int t = i - lo.index;
      lut[static_cast<std::size_t>(i)] = {lerp(lo.r, hi.r, t, span), lerp(lo.g, hi.g, t, span),
                                          lerp(lo.b, hi.b, t, span)};
    }
  }
  return lut;
}

}  // namespace

const std::array<Rgb, 256>& heatmap_palette() {
  static const auto lut = build_palette();
  return lut;
}

torch::Tensor apply_heatmap(const torch::Tensor& map01) {
  if (map01.dim() != 2) fail(ErrorKind::kShapeError, "heatmap input must be H x W");
  auto idx = (map01.detach().to(torch::kFloat64).clamp(0.0, 1.0) * 255.0 + 0.5).floor().to(torch::kLong).contiguous();
  const auto& lut = heatmap_palette();
  auto out = torch::empty({3, map01.size(0), map01.size(1)}, torch::kUInt8);
  auto in = idx.accessor<int64_t, 2>();
  auto acc = out.accessor<std::uint8_t, 3>();
  for (int64_t y = 0; y < idx.size(0); ++y)
    for (int64_t x = 0; x < idx.size(1); ++x) {
      const auto& c = lut[static_cast<std::size_t>(in[y][x])];
      for (int ch = 0; ch < 3; ++ch) acc[ch][y][x] = c[static_cast<std::size_t>(ch)];
    }
  return out;
}

torch::Tensor overlay_heatmap(const torch::Tensor& image, const torch::Tensor& map01, double weight) {
  if (image.dim() != 3 || image.size(1) != map01.size(0) || image.size(2) != map01.size(1))
    fail(ErrorKind::kShapeError, "overlay image and map differ in size");
  auto rgb = image.size(0) == 1 ? image.expand({3, -1, -1}) : image;
  auto heat = apply_heatmap(map01).to(torch::kFloat32) / 255.0;
  auto mixed = (1.0 - weight) * rgb.to(torch::kFloat32) + weight * heat;
  return (mixed.clamp(0.0, 1.0) * 255.0 + 0.5).floor().to(torch::kUInt8);
}

}  // namespace impress
