#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dic/tensor.hpp"

namespace dic {

/// Side length of the non-overlapping tiles the codec consumes.
inline constexpr int kPatchSize = 32;

/// An RGB image with values in [0, 1], stored channel-major (CHW).
/// Pixel-domain currency of the whole pipeline.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // size 3 * height * width

  Image() = default;
  Image(int h, int w, double fill = 0.0)
      : height(h), width(w), values(static_cast<std::size_t>(3) * h * w, fill) {}

  static constexpr int channels = 3;

  double& at(int c, int y, int x) {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width;
  }
};

/// Throws ShapeError unless the image is non-empty and all values are within
/// [0,1] (up to `tol` of slack for accumulated rounding).
void check_unit_range(const Image& img, double tol = 1e-9);

/// Clamp all values into [0, 1] in place.
void clamp01(Image& img);

/// True when height and width are positive multiples of kPatchSize.
bool tile_aligned(const Image& img);

/// Reflect-pad on the bottom/right edges up to the next multiple of `stride`.
/// Already-aligned images are returned unchanged.
Image pad_to_stride(const Image& img, int stride = kPatchSize);

/// Top-left crop back to true dimensions (inverse of pad_to_stride).
Image crop(const Image& img, int h, int w);

/// Split a tile-aligned image into kPatchSize tiles, row-major.
std::vector<Image> split_tiles(const Image& img);

/// Reassemble row-major tiles into an image of the given padded dimensions.
Image join_tiles(const std::vector<Image>& tiles, int padded_h, int padded_w);

/// Stack same-shape images into an NCHW batch.
Tensor to_batch(std::span<const Image> images);
Tensor to_batch(const std::vector<Image>& images);

/// Extract sample `i` of a batch as an Image (values copied verbatim).
Image from_batch(const Tensor& batch, int i);

/// Binary PPM (P6) round trip with 8-bit quantization. The only external
/// image format the CLI speaks; values map via round(v * 255).
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& img);

}  // namespace dic
