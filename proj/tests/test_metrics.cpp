#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "dic/metrics.hpp"
#include "support/reference_msssim.hpp"
#include "support/testutil.hpp"

using namespace dic;
using test::random_image;

TEST_CASE("psnr of identical images is the +inf sentinel") {
  Rng rng(1);
  Image x = random_image(32, 32, rng);
  CHECK(std::isinf(psnr(x, x)));
  CHECK(psnr(x, x) > 0);
}

TEST_CASE("psnr closed form on a constructed uniform offset") {
  // Pixels on a 1/256 lattice keep the +0.1 offset's MSE at 0.01 up to
  // rounding in the 15th digit.
  Image x(32, 32);
  Rng rng(2);
  for (double& v : x.values) v = rng.uniform_int(200) / 256.0;
  Image y = x;
  for (double& v : y.values) v += 0.1;
  CHECK(std::abs(psnr(x, y) - 20.0) < 1e-9);

  // Dyadic offset: exact MSE of (1/8)^2.
  Image z = x;
  for (double& v : z.values) v += 0.125;
  double expected = 10.0 * std::log10(1.0 / 0.015625);
  CHECK(std::abs(psnr(x, z) - expected) < 1e-9);
}

TEST_CASE("psnr is symmetric") {
  Rng rng(3);
  Image x = random_image(64, 32, rng);
  Image y = random_image(64, 32, rng);
  CHECK(psnr(x, y) == psnr(y, x));
}

TEST_CASE("psnr strictly decreases along a noise-variance ladder") {
  Rng rng(4);
  Image x = random_image(64, 64, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double sigma : {0.01, 0.03, 0.09, 0.27}) {
    Image y = x;
    Rng noise(77);
    for (double& v : y.values) v = std::clamp(v + sigma * noise.normal(), 0.0, 1.0);
    double p = psnr(x, y);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("psnr rejects shape mismatch") {
  Image x(32, 32), y(32, 64);
  CHECK_THROWS_AS(psnr(x, y), ShapeError);
}

TEST_CASE("ms_ssim of an image with itself is exactly 1") {
  Rng rng(5);
  for (int size : {32, 64, 176}) {
    Image x = random_image(size, size, rng);
    int scales = max_msssim_scales(size, size);
    CHECK(ms_ssim(x, x, scales) == 1.0);
  }
}

TEST_CASE("ssim of an image with itself is 1") {
  Rng rng(6);
  Image x = random_image(48, 48, rng);
  CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("inverted image scores below 0.5") {
  Rng rng(7);
  Image x = random_image(160, 160, rng);
  Image y = x;
  for (double& v : y.values) v = 1.0 - v;
  double value = ms_ssim(x, y, 4);
  double reference = test::reference_ms_ssim(x, y, 4);
  CHECK(value < 0.5);
  CHECK(std::abs(value - reference) < 1e-6);
}

TEST_CASE("ms_ssim matches the independent reference on random 160x160 pairs") {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    Image x = random_image(160, 160, rng);
    Image y = random_image(160, 160, rng);
    double got = ms_ssim(x, y, 4);
    double expected = test::reference_ms_ssim(x, y, 4);
    CHECK(std::abs(got - expected) < 1e-6);
  }
}

TEST_CASE("ms_ssim matches the reference at the full 5-scale default") {
  Rng rng(9);
  Image x = random_image(176, 176, rng);
  Image y = x;
  Rng noise(10);
  for (double& v : y.values) v = std::clamp(v + 0.05 * noise.normal(), 0.0, 1.0);
  CHECK(std::abs(ms_ssim(x, y) - test::reference_ms_ssim(x, y, 5)) < 1e-6);
}

TEST_CASE("ms_ssim stays within [0,1] on adversarial pairs") {
  Rng rng(11);
  Image x(64, 64, 0.0);
  Image y(64, 64, 1.0);
  double v = ms_ssim(x, y, 2);
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Image a = random_image(64, 64, rng);
    Image b = random_image(64, 64, rng);
    double m = ms_ssim(a, b, 2);
    CHECK(m >= 0.0);
    CHECK(m <= 1.0);
  }
}

TEST_CASE("ms_ssim names the minimum size when the pyramid does not fit") {
  Image x(64, 64), y(64, 64);
  CHECK_THROWS_WITH_AS(ms_ssim(x, y, 5), doctest::Contains("176"), ConfigError);
  CHECK(max_msssim_scales(64, 64) == 3);
  CHECK(max_msssim_scales(160, 160) == 4);
  CHECK(max_msssim_scales(176, 176) == 5);
  CHECK(max_msssim_scales(32, 32) == 2);
}

TEST_CASE("bpp accounting") {
  LatentCode code;
  code.grid_h = 4;
  code.grid_w = 4;
  code.channels_per_step = 32;
  code.steps = 1;
  code.bits.assign(512, 1);

  SUBCASE("512 bits over a 32x32 tile is exactly 0.5 bpp") {
    CHECK(bpp({code}, 32, 32) == 0.5);
    // Raw 8-bit RGB is 24 bpp; 0.5 bpp is a 48x compression rate.
    CHECK(24.0 / bpp({code}, 32, 32) == 48.0);
  }

  SUBCASE("tiling preserves the rate") {
    std::vector<LatentCode> four(4, code);
    CHECK(bpp(four, 64, 64) == 0.5);
  }

  SUBCASE("two steps double the rate") {
    LatentCode two = code;
    two.steps = 2;
    two.bits.assign(1024, -1);
    CHECK(bpp({two}, 32, 32) == 1.0);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(bpp({}, 32, 32), ConfigError);
    CHECK_THROWS_AS(bpp({code}, 0, 32), ConfigError);
  }
}

TEST_CASE("quality report CSV row shape") {
  QualityReport r{"img_0001.ppm", 0.5, 31.25, 0.95, 0.97};
  CHECK(quality_csv_header() == "path,bpp,psnr_db,ssim,ms_ssim");
  CHECK(quality_csv_row(r) == "img_0001.ppm,0.5,31.25,0.95,0.97");
  QualityReport inf_row{"same.ppm", 0.5, std::numeric_limits<double>::infinity(), 1.0, 1.0};
  CHECK(quality_csv_row(inf_row) == "same.ppm,0.5,inf,1,1");
}
