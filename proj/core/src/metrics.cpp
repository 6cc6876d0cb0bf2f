#include "dic/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "dic/numfmt.hpp"

namespace dic {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // unit dynamic range
constexpr double kC2 = 0.03 * 0.03;
constexpr int kMaxScales = 5;
constexpr std::array<double, kMaxScales> kScaleWeights = {0.0448, 0.2856, 0.3001,
                                                          0.2363, 0.1333};

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    double d = i - (kWindow - 1) / 2.0;
    w[i] = std::exp(-d * d / (2.0 * kWindowSigma * kWindowSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// One channel plane, row-major.
struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
  Plane() = default;
  Plane(int hh, int ww) : h(hh), w(ww), v(static_cast<std::size_t>(hh) * ww) {}
  double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane channel_plane(const Image& img, int c) {
  Plane p(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) p.at(y, x) = img.at(c, y, x);
  return p;
}

// Separable valid-region Gaussian filter; output is (h-10) x (w-10).
Plane filter_valid(const Plane& in) {
  static const std::array<double, kWindow> win = gaussian_window();
  Plane tmp(in.h, in.w - kWindow + 1);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < tmp.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += win[k] * in.at(y, x + k);
      tmp.at(y, x) = s;
    }
  Plane out(in.h - kWindow + 1, tmp.w);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += win[k] * tmp.at(y + k, x);
      out.at(y, x) = s;
    }
  return out;
}

Plane multiply(const Plane& a, const Plane& b) {
  Plane out(a.h, a.w);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

// 2x2 mean downsampling, floor dims (odd last row/col dropped).
Plane downsample2(const Plane& in) {
  Plane out(in.h / 2, in.w / 2);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x)
      out.at(y, x) = 0.25 * (in.at(2 * y, 2 * x) + in.at(2 * y, 2 * x + 1) +
                             in.at(2 * y + 1, 2 * x) + in.at(2 * y + 1, 2 * x + 1));
  return out;
}

struct CsLum {
  double cs = 0.0;   // mean contrast-structure term
  double lum = 0.0;  // mean luminance term
  double ssim = 0.0; // mean of the full per-pixel product
};

// Mean SSIM terms of one channel pair at one scale.
CsLum ssim_terms(const Plane& x, const Plane& y) {
  Plane mx = filter_valid(x);
  Plane my = filter_valid(y);
  Plane mxx = filter_valid(multiply(x, x));
  Plane myy = filter_valid(multiply(y, y));
  Plane mxy = filter_valid(multiply(x, y));

  double cs_sum = 0.0, lum_sum = 0.0, ssim_sum = 0.0;
  const std::size_t n = mx.v.size();
  for (std::size_t i = 0; i < n; ++i) {
    double mux = mx.v[i], muy = my.v[i];
    double sx = mxx.v[i] - mux * mux;
    double sy = myy.v[i] - muy * muy;
    double sxy = mxy.v[i] - mux * muy;
    double cs = (2.0 * sxy + kC2) / (sx + sy + kC2);
    double lum = (2.0 * mux * muy + kC1) / (mux * mux + muy * muy + kC1);
    cs_sum += cs;
    lum_sum += lum;
    ssim_sum += lum * cs;
  }
  return {cs_sum / n, lum_sum / n, ssim_sum / n};
}

void check_same_unit_images(const Image& x, const Image& y) {
  if (!x.same_shape(y)) throw ShapeError("image shapes differ");
  check_unit_range(x, 1e-9);
  check_unit_range(y, 1e-9);
}

}  // namespace

double mse(const Image& x, const Image& y) {
  if (!x.same_shape(y)) throw ShapeError("image shapes differ");
  if (x.values.empty()) throw ShapeError("empty image");
  double s = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    double d = x.values[i] - y.values[i];
    s += d * d;
  }
  return s / x.values.size();
}

double psnr(const Image& x, const Image& y) {
  double e = mse(x, y);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / e);
}

double ssim(const Image& x, const Image& y) {
  check_same_unit_images(x, y);
  if (x.height < kWindow || x.width < kWindow)
    throw ConfigError("ssim needs images of at least 11x11");
  double acc = 0.0;
  for (int c = 0; c < 3; ++c)
    acc += ssim_terms(channel_plane(x, c), channel_plane(y, c)).ssim;
  return acc / 3.0;
}

int max_msssim_scales(int h, int w) {
  int s = 0;
  while (s < kMaxScales && std::min(h, w) >= (1 << s) * kWindow) ++s;
  return s;
}

double ms_ssim(const Image& x, const Image& y, int scales) {
  check_same_unit_images(x, y);
  if (scales < 1 || scales > kMaxScales)
    throw ConfigError("ms_ssim supports 1..5 scales");
  const int min_side = (1 << (scales - 1)) * kWindow;
  if (std::min(x.height, x.width) < min_side)
    throw ConfigError("image too small for " + std::to_string(scales) +
                      "-scale MS-SSIM; needs min(H,W) >= " + std::to_string(min_side));

  // Published weights at 5 scales; renormalized prefix otherwise.
  std::vector<double> weights(kScaleWeights.begin(), kScaleWeights.begin() + scales);
  if (scales < kMaxScales) {
    double sum = 0.0;
    for (double w : weights) sum += w;
    for (double& w : weights) w /= sum;
  }

  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    Plane px = channel_plane(x, c);
    Plane py = channel_plane(y, c);
    double channel = 1.0;
    for (int s = 0; s < scales; ++s) {
      CsLum t = ssim_terms(px, py);
      double cs = std::max(t.cs, 0.0);
      if (s == scales - 1) {
        double lum = std::max(t.lum, 0.0);
        channel *= std::pow(lum, weights[s]) * std::pow(cs, weights[s]);
      } else {
        channel *= std::pow(cs, weights[s]);
        px = downsample2(px);
        py = downsample2(py);
      }
    }
    acc += channel;
  }
  return std::clamp(acc / 3.0, 0.0, 1.0);
}

double bpp(const std::vector<LatentCode>& codes, int image_h, int image_w) {
  if (codes.empty()) throw ConfigError("bpp needs at least one code");
  if (image_h <= 0 || image_w <= 0) throw ConfigError("bpp needs a positive image area");
  std::size_t bits = 0;
  for (const LatentCode& c : codes) bits += c.bit_count();
  return static_cast<double>(bits) / (static_cast<double>(image_h) * image_w);
}

std::string quality_csv_header() { return "path,bpp,psnr_db,ssim,ms_ssim"; }

std::string quality_csv_row(const QualityReport& r) {
  return r.path + "," + fmt_double(r.bpp) + "," + fmt_double(r.psnr_db) + "," +
         fmt_double(r.ssim) + "," + fmt_double(r.ms_ssim);
}

}  // namespace dic
