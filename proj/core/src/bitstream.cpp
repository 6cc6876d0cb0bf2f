#include "dic/bitstream.hpp"

#include <fstream>
#include <string>

#include "dic/image.hpp"

namespace dic {

namespace {

void put_u16(std::vector<std::uint8_t>& out, int v) {
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

int get_u16(const std::vector<std::uint8_t>& in, std::size_t off) {
  return (static_cast<int>(in[off]) << 8) | in[off + 1];
}

void check_u16_range(int v, const char* field) {
  if (v < 0 || v > 0xffff)
    throw FormatError(std::string(field) + " does not fit in u16");
}

void check_u8_range(int v, const char* field) {
  if (v < 0 || v > 0xff)
    throw FormatError(std::string(field) + " does not fit in u8");
}

}  // namespace

std::vector<std::uint8_t> pack(const std::vector<LatentCode>& codes,
                               int true_h, int true_w, int padded_h,
                               int padded_w) {
  if (codes.empty()) throw FormatError("pack needs at least one code");
  const LatentCode& first = codes.front();
  first.validate();
  for (const LatentCode& c : codes) {
    c.validate();
    if (!c.same_geometry(first))
      throw FormatError("codes disagree on latent geometry");
  }
  if (true_h <= 0 || true_w <= 0 || padded_h < true_h || padded_w < true_w)
    throw FormatError("inconsistent image dimensions");
  if (padded_h % kPatchSize != 0 || padded_w % kPatchSize != 0)
    throw FormatError("padded dims must be multiples of 32");
  const std::size_t tiles =
      static_cast<std::size_t>(padded_h / kPatchSize) * (padded_w / kPatchSize);
  if (codes.size() != tiles)
    throw FormatError("tile count does not match padded dims");
  check_u16_range(true_h, "true_h");
  check_u16_range(true_w, "true_w");
  check_u16_range(padded_h, "padded_h");
  check_u16_range(padded_w, "padded_w");
  check_u8_range(first.steps, "steps");
  check_u8_range(first.channels_per_step, "channels_per_step");
  check_u8_range(first.grid_h, "grid_h");
  check_u8_range(first.grid_w, "grid_w");

  std::vector<std::uint8_t> out;
  const std::size_t total_bits = codes.size() * first.expected_bit_count();
  out.reserve(kHeaderBytes + (total_bits + 7) / 8);
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kFormatVersion);
  put_u16(out, true_h);
  put_u16(out, true_w);
  put_u16(out, padded_h);
  put_u16(out, padded_w);
  out.push_back(static_cast<std::uint8_t>(first.steps));
  out.push_back(static_cast<std::uint8_t>(first.channels_per_step));
  out.push_back(static_cast<std::uint8_t>(first.grid_h));
  out.push_back(static_cast<std::uint8_t>(first.grid_w));

  std::uint8_t acc = 0;
  int nbits = 0;
  for (const LatentCode& c : codes) {
    for (std::int8_t b : c.bits) {
      acc = static_cast<std::uint8_t>((acc << 1) | (b > 0 ? 1 : 0));
      if (++nbits == 8) {
        out.push_back(acc);
        acc = 0;
        nbits = 0;
      }
    }
  }
  if (nbits > 0) out.push_back(static_cast<std::uint8_t>(acc << (8 - nbits)));
  return out;
}

CompressedFile unpack(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("header too short");
  for (int i = 0; i < 4; ++i)
    if (bytes[i] != static_cast<std::uint8_t>(kMagic[i]))
      throw FormatError("bad magic; not a DIC1 stream");
  if (bytes[4] != kFormatVersion)
    throw FormatError("unsupported format version " + std::to_string(bytes[4]));

  CompressedFile f;
  f.true_h = get_u16(bytes, 5);
  f.true_w = get_u16(bytes, 7);
  f.padded_h = get_u16(bytes, 9);
  f.padded_w = get_u16(bytes, 11);
  const int steps = bytes[13];
  const int channels_per_step = bytes[14];
  const int grid_h = bytes[15];
  const int grid_w = bytes[16];

  if (f.true_h <= 0 || f.true_w <= 0 || f.padded_h < f.true_h ||
      f.padded_w < f.true_w || f.padded_h % kPatchSize != 0 ||
      f.padded_w % kPatchSize != 0)
    throw FormatError("inconsistent dimensions in header");
  if (steps <= 0 || channels_per_step <= 0 || grid_h <= 0 || grid_w <= 0)
    throw FormatError("non-positive latent geometry in header");

  const std::size_t tiles =
      static_cast<std::size_t>(f.padded_h / kPatchSize) * (f.padded_w / kPatchSize);
  const std::size_t bits_per_tile =
      static_cast<std::size_t>(grid_h) * grid_w * channels_per_step * steps;
  const std::size_t total_bits = tiles * bits_per_tile;
  const std::size_t expected = kHeaderBytes + (total_bits + 7) / 8;
  if (bytes.size() != expected)
    throw CorruptionError("payload length mismatch: expected " +
                          std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()));

  f.codes.reserve(tiles);
  std::size_t bit = 0;
  for (std::size_t t = 0; t < tiles; ++t) {
    LatentCode c;
    c.grid_h = grid_h;
    c.grid_w = grid_w;
    c.channels_per_step = channels_per_step;
    c.steps = steps;
    c.bits.resize(bits_per_tile);
    for (std::size_t i = 0; i < bits_per_tile; ++i, ++bit) {
      std::uint8_t byte = bytes[kHeaderBytes + bit / 8];
      int b = (byte >> (7 - bit % 8)) & 1;
      c.bits[i] = b ? 1 : -1;
    }
    f.codes.push_back(std::move(c));
  }
  return f;
}

void write_dic(const std::filesystem::path& path, const CompressedFile& f) {
  write_dic(path, f.codes, f.true_h, f.true_w, f.padded_h, f.padded_w);
}

void write_dic(const std::filesystem::path& path,
               const std::vector<LatentCode>& codes, int true_h, int true_w,
               int padded_h, int padded_w) {
  std::vector<std::uint8_t> bytes = pack(codes, true_h, true_w, padded_h, padded_w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

CompressedFile read_dic(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return unpack(bytes);
}

}  // namespace dic
