#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dic/image.hpp"
#include "dic/rng.hpp"

namespace dic {

inline constexpr int kTextureClasses = 10;

struct LabeledImage {
  Image image;
  int label = 0;
};

/// Procedural 10-class texture dataset: parametric patterns (stripes at
/// several orientations, checkerboards, dots, rings, blobs, grids, triangles,
/// gradients) with randomized colors, geometry and pixel noise. Fine-grained
/// classes lose detail under aggressive compression, which is exactly the
/// regime the downstream-consistency experiment needs. Fully deterministic
/// given the spec.
struct DatasetSpec {
  int images_per_class = 150;
  int image_size = 32;  // multiple of 32 keeps the codec path trivial
  double noise_sigma = 0.03;
  std::uint64_t seed = 7;
};

std::vector<LabeledImage> make_texture_dataset(const DatasetSpec& spec);

/// Human-readable class name for tables and debugging.
const char* texture_class_name(int label);

/// Split helper: the first `train_per_class` images of every class form the
/// training split, the remainder the held-out split.
struct DatasetSplit {
  std::vector<LabeledImage> train;
  std::vector<LabeledImage> held_out;
};
DatasetSplit split_dataset(const std::vector<LabeledImage>& all, int train_per_class);

/// Unlabeled image views for codec training.
std::vector<Image> images_of(const std::vector<LabeledImage>& labeled);

/// Per-channel mean/std over a set of images (used as extractor input
/// normalization).
struct ChannelStats {
  std::array<double, 3> mean{};
  std::array<double, 3> std{};
};
ChannelStats compute_channel_stats(const std::vector<Image>& images);

}  // namespace dic
