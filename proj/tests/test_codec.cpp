#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "dic/codec.hpp"
#include "dic/metrics.hpp"
#include "dic/trainer.hpp"
#include "support/testutil.hpp"

using namespace dic;
using test::random_image;

namespace {

CodecModel make_model(std::uint64_t seed = 5, CodecArchitecture arch = {}) {
  Rng rng(seed);
  return CodecModel(arch, rng);
}

}  // namespace

TEST_CASE("encode emits the advertised bit budget") {
  CodecModel model = make_model();
  Rng rng(1);
  Image patch = random_image(32, 32, rng);

  LatentCode one = encode(model, patch, 1);
  CHECK(one.bit_count() == 512);  // 4*4*32: the 0.5 bpp operating point
  CHECK(bpp({one}, 32, 32) == 0.5);

  LatentCode two = encode(model, patch, 2);
  CHECK(two.bit_count() == 1024);
  CHECK(bpp({two}, 32, 32) == 1.0);
  CHECK(two.steps == 2);
}

TEST_CASE("inference encoding is deterministic, including on an all-zero patch") {
  CodecModel model = make_model();
  Image zero(32, 32, 0.0);
  LatentCode a = encode(model, zero, 2);
  LatentCode b = encode(model, zero, 2);
  CHECK(a.bits == b.bits);

  Rng rng(2);
  Image patch = random_image(32, 32, rng);
  CHECK(encode(model, patch, 1).bits == encode(model, patch, 1).bits);
}

TEST_CASE("encode validates its inputs") {
  CodecModel model = make_model();
  Rng rng(3);
  CHECK_THROWS_AS(encode(model, random_image(16, 32, rng), 1), ShapeError);
  Image patch = random_image(32, 32, rng);
  CHECK_THROWS_AS(encode(model, patch, 0), ConfigError);
  CHECK_THROWS_AS(encode(model, patch, model.arch().max_steps + 1), ConfigError);
}

TEST_CASE("decode round-trips shape and stays in [0,1]") {
  CodecModel model = make_model();
  Rng rng(4);
  for (int steps : {1, 2, 4}) {
    Image patch = random_image(32, 32, rng);
    Image out = decode(model, encode(model, patch, steps));
    CHECK(out.height == 32);
    CHECK(out.width == 32);
    for (double v : out.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("random codes decode into [0,1] for random models") {
  Rng rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    CodecModel model = make_model(100 + trial);
    LatentCode code;
    code.grid_h = code.grid_w = 4;
    code.channels_per_step = model.arch().code_channels;
    code.steps = 1 + trial;
    code.bits.resize(code.expected_bit_count());
    for (auto& b : code.bits) b = rng.bernoulli(0.5) ? 1 : -1;
    Image out = decode(model, code);
    for (double v : out.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("multi-step decode equals the clamped sum of per-step decoder outputs") {
  CodecModel model = make_model();
  Rng rng(6);
  Image patch = random_image(32, 32, rng);
  LatentCode code = encode(model, patch, 2);

  // split the two steps by hand and decode each separately
  const int per_step = model.arch().bits_per_step();
  LatentCode s1 = code, s2 = code;
  s1.steps = 1;
  s1.bits.assign(code.bits.begin(), code.bits.begin() + per_step);
  s2.steps = 1;
  s2.bits.assign(code.bits.begin() + per_step, code.bits.end());

  // per-step decoder outputs, un-clamped, via the training-path forward
  Tensor b1(1, 32, 4, 4), b2(1, 32, 4, 4);
  for (int i = 0; i < per_step; ++i) {
    b1.data()[i] = s1.bits[i];
    b2.data()[i] = s2.bits[i];
  }
  Tensor d1 = model.decoder().infer(b1);
  Tensor d2 = model.decoder().infer(b2);

  Image expected(32, 32);
  for (std::size_t i = 0; i < expected.values.size(); ++i)
    expected.values[i] = std::clamp(d1.raw()[i] + d2.raw()[i], 0.0, 1.0);

  Image got = decode(model, code);
  for (std::size_t i = 0; i < got.values.size(); ++i)
    CHECK(got.values[i] == doctest::Approx(expected.values[i]).epsilon(1e-12));
}

TEST_CASE("decode rejects geometry that does not match the model") {
  CodecModel model = make_model();
  LatentCode code;
  code.grid_h = code.grid_w = 4;
  code.channels_per_step = model.arch().code_channels + 1;
  code.steps = 1;
  code.bits.assign(code.expected_bit_count(), 1);
  CHECK_THROWS_AS(decode(model, code), FormatError);

  LatentCode truncated;
  truncated.grid_h = truncated.grid_w = 4;
  truncated.channels_per_step = model.arch().code_channels;
  truncated.steps = 1;
  truncated.bits.assign(10, 1);
  CHECK_THROWS_AS(decode(model, truncated), FormatError);
}

TEST_CASE("compress_image tiles row-major and reassembles in place") {
  CodecModel model = make_model();
  Rng rng(7);

  SUBCASE("64x64 gives 4 codes") {
    Image img = random_image(64, 64, rng);
    CHECK(compress_image(model, img).size() == 4);
  }

  SUBCASE("a 32x32 image equals the single-tile encode") {
    Image img = random_image(32, 32, rng);
    auto codes = compress_image(model, img, 2);
    REQUIRE(codes.size() == 1);
    CHECK(codes[0].bits == encode(model, img, 2).bits);
  }

  SUBCASE("96x64 gives 6 codes whose decodes land on their tiles") {
    Image img = random_image(96, 64, rng);
    auto codes = compress_image(model, img);
    REQUIRE(codes.size() == 6);
    Image joined = decompress_image(model, codes, 96, 64);
    // each reassembled tile must equal its own single-tile decode
    auto tiles = split_tiles(img);
    for (int t = 0; t < 6; ++t) {
      Image expected = decode(model, codes[t]);
      int ty = t / 2, tx = t % 2;
      for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 32; ++y)
          for (int x = 0; x < 32; ++x)
            CHECK(joined.at(c, ty * 32 + y, tx * 32 + x) == expected.at(c, y, x));
      // and the codes must be the row-major tile encodes
      CHECK(codes[t].bits == encode(model, tiles[t], 1).bits);
    }
  }

  SUBCASE("empty image is a shape error") {
    Image empty;
    CHECK_THROWS_AS(compress_image(model, empty), ShapeError);
  }
}

TEST_CASE("inference-mode pipeline is bit-deterministic end to end") {
  CodecModel model = make_model();
  Rng rng(8);
  Image img = random_image(64, 96, rng);
  auto c1 = compress_image(model, img);
  auto c2 = compress_image(model, img);
  REQUIRE(c1.size() == c2.size());
  for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i].bits == c2[i].bits);
  Image d1 = decompress_image(model, c1, 64, 96);
  Image d2 = decompress_image(model, c2, 64, 96);
  CHECK(d1.values == d2.values);
}

TEST_CASE("codec checkpoint round-trips bit-exactly") {
  CodecArchitecture arch;
  arch.enc_ch1 = 8;
  arch.enc_ch2 = 12;
  arch.code_channels = 16;
  CodecModel model = make_model(42, arch);
  auto dir = std::filesystem::temp_directory_path() / "dic_test_codec";
  std::filesystem::create_directories(dir);
  auto path = dir / "model.ckpt";
  save_codec(path, model);
  CodecModel back = load_codec(path);
  CHECK(back.arch() == model.arch());
  auto a = model.params();
  auto b = back.params();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->name == b[i]->name);
    CHECK(a[i]->value == b[i]->value);
  }
  // round-trip again: the serialized bytes must be identical
  auto path2 = dir / "model2.ckpt";
  save_codec(path2, back);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("concurrent inference on a shared model is consistent") {
  CodecModel model = make_model();
  Rng rng(9);
  std::vector<Image> images;
  for (int i = 0; i < 8; ++i) images.push_back(random_image(32, 32, rng));
  std::vector<LatentCode> serial;
  for (const Image& img : images) serial.push_back(encode(model, img, 1));

  std::vector<LatentCode> parallel(images.size());
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&, t]() {
      for (std::size_t i = t; i < images.size(); i += 4)
        parallel[i] = encode(model, images[i], 1);
    });
  for (auto& th : pool) th.join();
  for (std::size_t i = 0; i < images.size(); ++i)
    CHECK(parallel[i].bits == serial[i].bits);
}
