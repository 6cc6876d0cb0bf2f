#include "dic/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dic {

namespace {

using std::numbers::pi;

struct Rgb {
  double r, g, b;
};

Rgb random_color(Rng& rng) {
  return {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
}

// Two colors far enough apart that patterns survive 8-bit quantization.
std::pair<Rgb, Rgb> contrasting_pair(Rng& rng) {
  Rgb a = random_color(rng);
  for (int tries = 0; tries < 64; ++tries) {
    Rgb b = random_color(rng);
    double d = std::abs(a.r - b.r) + std::abs(a.g - b.g) + std::abs(a.b - b.b);
    if (d > 0.8) return {a, b};
  }
  return {{0.1, 0.1, 0.1}, {0.9, 0.9, 0.9}};
}

void set_px(Image& img, int y, int x, const Rgb& c) {
  img.at(0, y, x) = c.r;
  img.at(1, y, x) = c.g;
  img.at(2, y, x) = c.b;
}

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

// Soft square wave in [0,1]; sharpness controls edge width.
double soft_square(double cycles, double sharpness) {
  return 0.5 * (1.0 + std::tanh(sharpness * std::sin(2.0 * pi * cycles)));
}

Image stripes(int size, Rng& rng, double base_angle, double angle_jitter) {
  auto [ca, cb] = contrasting_pair(rng);
  double theta = base_angle + rng.uniform(-angle_jitter, angle_jitter);
  double period = rng.uniform(3.5, 9.0);
  double phase = rng.uniform(0.0, 1.0);
  double sharp = rng.uniform(2.0, 6.0);
  double cs = std::cos(theta), sn = std::sin(theta);
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double t = (x * cs + y * sn) / period + phase;
      set_px(img, y, x, mix(ca, cb, soft_square(t, sharp)));
    }
  return img;
}

Image checkerboard(int size, Rng& rng) {
  auto [ca, cb] = contrasting_pair(rng);
  int cell = 3 + rng.uniform_int(5);  // 3..7
  int ox = rng.uniform_int(cell), oy = rng.uniform_int(cell);
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      int parity = ((x + ox) / cell + (y + oy) / cell) & 1;
      set_px(img, y, x, parity ? ca : cb);
    }
  return img;
}

Image dots(int size, Rng& rng) {
  auto [bg, fg] = contrasting_pair(rng);
  double spacing = rng.uniform(6.5, 12.0);
  double radius = rng.uniform(1.8, 0.42 * spacing);
  double ox = rng.uniform(0.0, spacing), oy = rng.uniform(0.0, spacing);
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double gx = std::fmod(x + ox, spacing) - spacing / 2.0;
      double gy = std::fmod(y + oy, spacing) - spacing / 2.0;
      double dist = std::sqrt(gx * gx + gy * gy);
      double t = std::clamp(radius - dist + 0.5, 0.0, 1.0);
      set_px(img, y, x, mix(bg, fg, t));
    }
  return img;
}

Image rings(int size, Rng& rng) {
  auto [ca, cb] = contrasting_pair(rng);
  double cx = rng.uniform(-0.2 * size, 1.2 * size);
  double cy = rng.uniform(-0.2 * size, 1.2 * size);
  double period = rng.uniform(3.5, 9.0);
  double phase = rng.uniform(0.0, 1.0);
  double sharp = rng.uniform(2.0, 6.0);
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double d = std::hypot(x - cx, y - cy);
      set_px(img, y, x, mix(ca, cb, soft_square(d / period + phase, sharp)));
    }
  return img;
}

Image blobs(int size, Rng& rng) {
  auto [ca, cb] = contrasting_pair(rng);
  struct Wave {
    double kx, ky, amp, phase;
  };
  Wave waves[4];
  for (Wave& w : waves) {
    double wavelength = rng.uniform(7.0, 20.0);
    double dir = rng.uniform(0.0, 2.0 * pi);
    w.kx = 2.0 * pi / wavelength * std::cos(dir);
    w.ky = 2.0 * pi / wavelength * std::sin(dir);
    w.amp = rng.uniform(0.4, 1.0);
    w.phase = rng.uniform(0.0, 2.0 * pi);
  }
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double f = 0.0;
      for (const Wave& w : waves) f += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
      double t = 0.5 * (1.0 + std::tanh(2.5 * f));
      set_px(img, y, x, mix(ca, cb, t));
    }
  return img;
}

Image grid_lines(int size, Rng& rng) {
  auto [bg, fg] = contrasting_pair(rng);
  int gx = 6 + rng.uniform_int(6);  // 6..11
  int gy = 6 + rng.uniform_int(6);
  int tx = 1 + rng.uniform_int(2);  // 1..2
  int ty = 1 + rng.uniform_int(2);
  int ox = rng.uniform_int(gx), oy = rng.uniform_int(gy);
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      bool on = ((x + ox) % gx) < tx || ((y + oy) % gy) < ty;
      set_px(img, y, x, on ? fg : bg);
    }
  return img;
}

Image triangles(int size, Rng& rng) {
  Rgb bg = random_color(rng);
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) set_px(img, y, x, bg);
  int count = 2 + rng.uniform_int(2);  // 2..3
  for (int t = 0; t < count; ++t) {
    Rgb fg = random_color(rng);
    double x0 = rng.uniform(0, size), y0 = rng.uniform(0, size);
    double x1 = rng.uniform(0, size), y1 = rng.uniform(0, size);
    double x2 = rng.uniform(0, size), y2 = rng.uniform(0, size);
    auto edge = [](double ax, double ay, double bx, double by, double px, double py) {
      return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
    };
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        double e0 = edge(x0, y0, x1, y1, x, y);
        double e1 = edge(x1, y1, x2, y2, x, y);
        double e2 = edge(x2, y2, x0, y0, x, y);
        bool inside = (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
        if (inside) set_px(img, y, x, fg);
      }
  }
  return img;
}

Image gradient(int size, Rng& rng) {
  auto [ca, cb] = contrasting_pair(rng);
  double theta = rng.uniform(0.0, 2.0 * pi);
  double cs = std::cos(theta), sn = std::sin(theta);
  double lo = 0.0, hi = 0.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double p = x * cs + y * sn;
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double t = (x * cs + y * sn - lo) / std::max(hi - lo, 1e-9);
      set_px(img, y, x, mix(ca, cb, t));
    }
  return img;
}

Image make_class_image(int label, int size, Rng& rng) {
  switch (label) {
    case 0: return stripes(size, rng, 0.0, 0.15);              // vertical bands
    case 1: return stripes(size, rng, pi / 2.0, 0.15);         // horizontal bands
    case 2: return stripes(size, rng, pi / 4.0, 0.2);          // diagonal bands
    case 3: return checkerboard(size, rng);
    case 4: return dots(size, rng);
    case 5: return rings(size, rng);
    case 6: return blobs(size, rng);
    case 7: return grid_lines(size, rng);
    case 8: return triangles(size, rng);
    case 9: return gradient(size, rng);
    default: throw ConfigError("texture class out of range");
  }
}

}  // namespace

const char* texture_class_name(int label) {
  static const char* names[kTextureClasses] = {
      "stripes_v", "stripes_h", "stripes_diag", "checker", "dots",
      "rings",     "blobs",     "grid",         "triangle", "gradient"};
  if (label < 0 || label >= kTextureClasses)
    throw ConfigError("texture class out of range");
  return names[label];
}

std::vector<LabeledImage> make_texture_dataset(const DatasetSpec& spec) {
  if (spec.images_per_class <= 0) throw ConfigError("images_per_class must be positive");
  if (spec.image_size < 16) throw ConfigError("image_size too small for textures");
  if (spec.noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");

  std::vector<LabeledImage> out;
  out.reserve(static_cast<std::size_t>(spec.images_per_class) * kTextureClasses);
  // Class-major generation keeps every class's stream independent of the
  // other classes' parameter draws.
  for (int label = 0; label < kTextureClasses; ++label) {
    Rng rng = Rng::with_salt(spec.seed, 0xD5 + static_cast<std::uint64_t>(label));
    for (int i = 0; i < spec.images_per_class; ++i) {
      Image img = make_class_image(label, spec.image_size, rng);
      if (spec.noise_sigma > 0.0)
        for (double& v : img.values) v += spec.noise_sigma * rng.normal();
      clamp01(img);
      out.push_back({std::move(img), label});
    }
  }
  return out;
}

DatasetSplit split_dataset(const std::vector<LabeledImage>& all, int train_per_class) {
  if (train_per_class < 0) throw ConfigError("train_per_class must be non-negative");
  DatasetSplit split;
  std::vector<int> seen(kTextureClasses, 0);
  for (const LabeledImage& li : all) {
    if (li.label < 0 || li.label >= kTextureClasses)
      throw ConfigError("label out of range in dataset");
    if (seen[li.label]++ < train_per_class) split.train.push_back(li);
    else split.held_out.push_back(li);
  }
  return split;
}

std::vector<Image> images_of(const std::vector<LabeledImage>& labeled) {
  std::vector<Image> out;
  out.reserve(labeled.size());
  for (const LabeledImage& li : labeled) out.push_back(li.image);
  return out;
}

ChannelStats compute_channel_stats(const std::vector<Image>& images) {
  if (images.empty()) throw ConfigError("cannot compute stats of an empty set");
  ChannelStats stats;
  std::array<double, 3> sum{}, sumsq{};
  std::size_t count = 0;
  for (const Image& img : images) {
    const std::size_t plane = img.pixel_count();
    for (int c = 0; c < 3; ++c) {
      const double* p = img.values.data() + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum[c] += p[i];
        sumsq[c] += p[i] * p[i];
      }
    }
    count += plane;
  }
  for (int c = 0; c < 3; ++c) {
    double mean = sum[c] / count;
    double var = std::max(sumsq[c] / count - mean * mean, 0.0);
    stats.mean[c] = mean;
    stats.std[c] = std::max(std::sqrt(var), 1e-6);
  }
  return stats;
}

}  // namespace dic
