#pragma once

#include <cstdint>
#include <vector>

#include "dic/error.hpp"

namespace dic {

/// The binarized bottleneck for one 32x32 tile. Values are bipolar (-1/+1)
/// in tensor form; they map to 0/1 bits on disk. Bit order is step-major,
/// then channel, then row-major spatial — the same order the bitstream uses.
struct LatentCode {
  int grid_h = 0;
  int grid_w = 0;
  int channels_per_step = 0;
  int steps = 0;
  std::vector<std::int8_t> bits;  // each element exactly -1 or +1

  std::size_t bit_count() const { return bits.size(); }

  std::size_t expected_bit_count() const {
    return static_cast<std::size_t>(grid_h) * grid_w * channels_per_step * steps;
  }

  bool same_geometry(const LatentCode& o) const {
    return grid_h == o.grid_h && grid_w == o.grid_w &&
           channels_per_step == o.channels_per_step && steps == o.steps;
  }

  void validate() const {
    if (grid_h <= 0 || grid_w <= 0 || channels_per_step <= 0 || steps <= 0)
      throw FormatError("latent code has non-positive geometry");
    if (bits.size() != expected_bit_count())
      throw FormatError("latent bit count does not match geometry");
    for (std::int8_t b : bits)
      if (b != -1 && b != 1) throw FormatError("latent bits must be -1 or +1");
  }
};

}  // namespace dic
