#include "dic/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace dic {

void check_unit_range(const Image& img, double tol) {
  if (img.height <= 0 || img.width <= 0 || img.values.empty())
    throw ShapeError("empty image");
  for (double v : img.values) {
    if (!(v >= -tol && v <= 1.0 + tol))
      throw ShapeError("image values outside [0,1]");
  }
}

void clamp01(Image& img) {
  for (double& v : img.values) v = std::clamp(v, 0.0, 1.0);
}

bool tile_aligned(const Image& img) {
  return img.height > 0 && img.width > 0 && img.height % kPatchSize == 0 &&
         img.width % kPatchSize == 0;
}

namespace {

// Reflect index into [0, n) without repeating the edge sample.
int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

}  // namespace

Image pad_to_stride(const Image& img, int stride) {
  if (img.height <= 0 || img.width <= 0) throw ShapeError("empty image");
  int ph = (img.height + stride - 1) / stride * stride;
  int pw = (img.width + stride - 1) / stride * stride;
  if (ph == img.height && pw == img.width) return img;
  Image out(ph, pw);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x)
        out.at(c, y, x) = img.at(c, reflect(y, img.height), reflect(x, img.width));
  return out;
}

Image crop(const Image& img, int h, int w) {
  if (h <= 0 || w <= 0 || h > img.height || w > img.width)
    throw ShapeError("crop dims exceed image");
  if (h == img.height && w == img.width) return img;
  Image out(h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y, x);
  return out;
}

std::vector<Image> split_tiles(const Image& img) {
  if (!tile_aligned(img))
    throw ShapeError("image dims must be positive multiples of 32");
  int ty = img.height / kPatchSize;
  int tx = img.width / kPatchSize;
  std::vector<Image> tiles;
  tiles.reserve(static_cast<std::size_t>(ty) * tx);
  for (int i = 0; i < ty; ++i) {
    for (int j = 0; j < tx; ++j) {
      Image t(kPatchSize, kPatchSize);
      for (int c = 0; c < 3; ++c)
        for (int y = 0; y < kPatchSize; ++y)
          for (int x = 0; x < kPatchSize; ++x)
            t.at(c, y, x) = img.at(c, i * kPatchSize + y, j * kPatchSize + x);
      tiles.push_back(std::move(t));
    }
  }
  return tiles;
}

Image join_tiles(const std::vector<Image>& tiles, int padded_h, int padded_w) {
  if (padded_h % kPatchSize != 0 || padded_w % kPatchSize != 0)
    throw ShapeError("padded dims must be multiples of 32");
  int ty = padded_h / kPatchSize;
  int tx = padded_w / kPatchSize;
  if (tiles.size() != static_cast<std::size_t>(ty) * tx)
    throw ShapeError("tile count does not match padded dims");
  Image out(padded_h, padded_w);
  for (int i = 0; i < ty; ++i) {
    for (int j = 0; j < tx; ++j) {
      const Image& t = tiles[static_cast<std::size_t>(i) * tx + j];
      if (t.height != kPatchSize || t.width != kPatchSize)
        throw ShapeError("tile is not 32x32");
      for (int c = 0; c < 3; ++c)
        for (int y = 0; y < kPatchSize; ++y)
          for (int x = 0; x < kPatchSize; ++x)
            out.at(c, i * kPatchSize + y, j * kPatchSize + x) = t.at(c, y, x);
    }
  }
  return out;
}

Tensor to_batch(std::span<const Image> images) {
  if (images.empty()) throw ShapeError("empty batch");
  int h = images[0].height, w = images[0].width;
  Tensor out(static_cast<int>(images.size()), 3, h, w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(images[0]))
      throw ShapeError("batch images must share dimensions");
    std::copy(images[i].values.begin(), images[i].values.end(),
              out.sample(static_cast<int>(i)));
  }
  return out;
}

Tensor to_batch(const std::vector<Image>& images) {
  return to_batch(std::span<const Image>(images.data(), images.size()));
}

Image from_batch(const Tensor& batch, int i) {
  if (batch.c() != 3) throw ShapeError("batch is not 3-channel");
  if (i < 0 || i >= batch.n()) throw ShapeError("batch index out of range");
  Image img(batch.h(), batch.w());
  std::copy(batch.sample(i), batch.sample(i) + img.values.size(),
            img.values.begin());
  return img;
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P6") throw FormatError(path.string() + ": not a binary PPM (P6)");
  auto next_int = [&in, &path]() {
    // skip whitespace and '#' comment lines
    int ch = in.peek();
    while (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '#') {
      if (ch == '#') in.ignore(1 << 20, '\n');
      else in.get();
      ch = in.peek();
    }
    long v = -1;
    in >> v;
    if (!in || v < 0) throw FormatError(path.string() + ": bad PPM header");
    return v;
  };
  long w = next_int();
  long h = next_int();
  long maxval = next_int();
  if (maxval != 255) throw FormatError(path.string() + ": only maxval 255 supported");
  if (w <= 0 || h <= 0 || w > 65535 || h > 65535)
    throw FormatError(path.string() + ": unsupported dimensions");
  in.get();  // single whitespace after header
  std::vector<unsigned char> buf(static_cast<std::size_t>(3) * w * h);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw CorruptionError(path.string() + ": truncated pixel data");
  Image img(static_cast<int>(h), static_cast<int>(w));
  std::size_t k = 0;
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(c, static_cast<int>(y), static_cast<int>(x)) = buf[k++] / 255.0;
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  check_unit_range(img, 1e-9);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> buf;
  buf.reserve(img.values.size());
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        buf.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

}  // namespace dic
