#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dic/latent.hpp"

namespace dic {

/// Parsed .dic container header plus payload codes. Byte layout (normative,
/// see docs/format.md):
///   magic "DIC1" | version u8 | true_h u16 | true_w u16 | padded_h u16 |
///   padded_w u16 | steps u8 | channels_per_step u8 | grid_h u8 | grid_w u8 |
///   payload (packed bits, MSB-first, zero-padded final byte)
/// Multi-byte integers are big-endian. Payload bits run over row-major tiles;
/// within a tile step-major, then channel, then row-major spatial. Bipolar
/// -1/+1 maps to bit 0/1.
struct CompressedFile {
  std::vector<LatentCode> codes;
  int true_h = 0;
  int true_w = 0;
  int padded_h = 0;
  int padded_w = 0;
};

inline constexpr char kMagic[4] = {'D', 'I', 'C', '1'};
inline constexpr std::uint8_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 17;

/// Serialize codes (row-major tile order) into the .dic byte layout.
/// All codes must share geometry and the tile count must match the padded
/// dimensions; otherwise FormatError.
std::vector<std::uint8_t> pack(const std::vector<LatentCode>& codes,
                               int true_h, int true_w, int padded_h,
                               int padded_w);

/// Exact inverse of pack. FormatError on bad magic/version or header
/// inconsistencies; CorruptionError (naming expected vs actual length) on a
/// truncated payload.
CompressedFile unpack(const std::vector<std::uint8_t>& bytes);

/// File-level wrappers.
void write_dic(const std::filesystem::path& path, const CompressedFile& f);
void write_dic(const std::filesystem::path& path,
               const std::vector<LatentCode>& codes, int true_h, int true_w,
               int padded_h, int padded_w);
CompressedFile read_dic(const std::filesystem::path& path);

}  // namespace dic
