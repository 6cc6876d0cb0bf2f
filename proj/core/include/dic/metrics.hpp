#pragma once

#include <string>
#include <vector>

#include "dic/image.hpp"
#include "dic/latent.hpp"

namespace dic {

/// Quality figures for one original/decoded pair. Serializes to one CSV row:
/// path, bpp, psnr_db, ssim, ms_ssim.
struct QualityReport {
  std::string path;
  double bpp = 0.0;      // 0 means "no code available"
  double psnr_db = 0.0;  // +inf when images are identical
  double ssim = 0.0;
  double ms_ssim = 0.0;
};

/// Mean squared error over all channels and pixels.
double mse(const Image& x, const Image& y);

/// 10 * log10(1 / MSE) for unit dynamic range; +inf sentinel at MSE = 0.
double psnr(const Image& x, const Image& y);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2,
/// C2 = 0.03^2, computed per RGB channel and averaged. Range [-1, 1].
double ssim(const Image& x, const Image& y);

/// Multi-scale SSIM per RGB channel, averaged over the 3 channels, clamped to
/// [0, 1]. Standard Wang parameterization: scale weights
/// 0.0448/0.2856/0.3001/0.2363/0.1333 (renormalized when fewer scales are
/// used), contrast-structure terms at every scale, luminance only at the
/// coarsest, 2x2 mean downsampling between scales. Negative per-channel terms
/// clamp to 0 before entering the product. Requires
/// min(H, W) >= 2^(scales-1) * 11; throws ConfigError naming the minimum
/// otherwise.
double ms_ssim(const Image& x, const Image& y, int scales = 5);

/// Largest scale count in [1, 5] whose window pyramid fits min(h, w).
int max_msssim_scales(int h, int w);

/// Total bit count of `codes` divided by true (pre-padding) pixel count.
double bpp(const std::vector<LatentCode>& codes, int image_h, int image_w);

/// CSV helpers for QualityReport rows.
std::string quality_csv_header();
std::string quality_csv_row(const QualityReport& r);

}  // namespace dic
