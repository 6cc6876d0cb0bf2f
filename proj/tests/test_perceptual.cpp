#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <memory>

#include "dic/classifier.hpp"
#include "dic/perceptual.hpp"
#include "support/testutil.hpp"

using namespace dic;
using test::close_rel;
using test::random_image;

namespace {

FeatureExtractor make_fx(std::uint64_t seed = 21) {
  Rng rng(seed);
  Classifier clf("convnet_a", 10, rng);
  return truncate_to_extractor(clf);
}

/// Stub extractor with a known linear map: d = 2, f(x) = (sum of channel 0,
/// sum of channel 1) after GAP-style averaging. Built from a 1x1 conv with
/// identity-ish weights so feature distances are hand-computable.
FeatureExtractor make_stub_fx() {
  Rng rng(1);
  nn::Sequential trunk;
  auto conv = std::make_unique<nn::Conv2d>("trunk.stub", 3, 2, 1, 1, 0, rng);
  auto params = conv->params();
  std::fill(params[0]->value.begin(), params[0]->value.end(), 0.0);
  // feature 0 = mean of channel 0, feature 1 = 3 * mean of channel 1
  params[0]->value[0] = 1.0;  // w[0][0]
  params[0]->value[4] = 3.0;  // w[1][1]
  std::fill(params[1]->value.begin(), params[1]->value.end(), 0.0);
  trunk.add(std::move(conv));
  trunk.add(std::make_unique<nn::GlobalAvgPool>());
  return FeatureExtractor("stub", std::move(trunk), {0, 0, 0}, {1, 1, 1}, 2);
}

}  // namespace

TEST_CASE("extract is deterministic and sized as advertised") {
  FeatureExtractor fx = make_fx();
  Rng rng(2);
  Image patch = random_image(32, 32, rng);
  FeatureVector a = fx.extract(patch);
  FeatureVector b = fx.extract(patch);
  CHECK(a.size() == static_cast<std::size_t>(fx.output_dim()));
  CHECK(a == b);
}

TEST_CASE("extract rejects wrong patch sizes") {
  FeatureExtractor fx = make_fx();
  Rng rng(3);
  CHECK_THROWS_AS(fx.extract(random_image(64, 64, rng)), ShapeError);
}

TEST_CASE("identical inputs have zero perceptual distance") {
  FeatureExtractor fx = make_fx();
  Rng rng(4);
  std::vector<Image> batch = {random_image(32, 32, rng), random_image(32, 32, rng)};
  CHECK(perceptual_loss(fx, batch, batch) == 0.0);
}

TEST_CASE("stub extractor reproduces a hand-computed squared distance of 2.5") {
  FeatureExtractor fx = make_stub_fx();
  // x embeds to (0.2, 3*0.1) and y to (0.7, 3*0.6):
  // squared distance = 0.5^2 + 1.5^2 = 2.5.
  Image x(32, 32, 0.0), y(32, 32, 0.0);
  for (int i = 0; i < 32 * 32; ++i) {
    x.values[i] = 0.2;            // channel 0
    x.values[32 * 32 + i] = 0.1;  // channel 1
    y.values[i] = 0.7;
    y.values[32 * 32 + i] = 0.6;
  }
  FeatureVector fx_x = fx.extract(x);
  CHECK(fx_x[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(fx_x[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(perceptual_loss(fx, {x}, {y}) == doctest::Approx(2.5).epsilon(1e-9));

  // duplicating the pair leaves the mean unchanged
  CHECK(perceptual_loss(fx, {x, x}, {y, y}) == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("perceptual loss is symmetric under swapping the batches") {
  FeatureExtractor fx = make_fx();
  Rng rng(5);
  std::vector<Image> a = {random_image(32, 32, rng), random_image(32, 32, rng)};
  std::vector<Image> b = {random_image(32, 32, rng), random_image(32, 32, rng)};
  CHECK(perceptual_loss(fx, a, b) == doctest::Approx(perceptual_loss(fx, b, a)).epsilon(1e-15));
}

TEST_CASE("perceptual loss rejects mismatched batch sizes") {
  FeatureExtractor fx = make_fx();
  Rng rng(6);
  std::vector<Image> a = {random_image(32, 32, rng)};
  std::vector<Image> b = {random_image(32, 32, rng), random_image(32, 32, rng)};
  CHECK_THROWS_AS(perceptual_loss(fx, a, b), ShapeError);
}

TEST_CASE("feature gradients w.r.t. the input match finite differences") {
  FeatureExtractor fx = make_fx();
  Rng rng(7);
  Image x = random_image(32, 32, rng);
  Image y = random_image(32, 32, rng);

  Tensor ty(1, 3, 32, 32);
  std::copy(y.values.begin(), y.values.end(), ty.data());

  // loss = ||F(y) - F(x)||^2, gradient via the extractor's backward
  FeatureVector fxv = fx.extract(x);
  nn::Tape tape;
  Tensor feat = fx.features(ty, &tape);
  Tensor gfeat(1, fx.output_dim(), 1, 1);
  for (int j = 0; j < fx.output_dim(); ++j)
    gfeat.raw()[j] = 2.0 * (feat.raw()[j] - fxv[j]);
  Tensor gy = fx.backward_to_input(gfeat, tape);

  auto loss_at = [&](const Tensor& t) {
    nn::Tape scratch;
    Tensor f = fx.features(t, nullptr);
    double s = 0.0;
    for (int j = 0; j < fx.output_dim(); ++j) {
      double d = f.raw()[j] - fxv[j];
      s += d * d;
    }
    return s;
  };

  Rng pick(8);
  for (int probe = 0; probe < 5; ++probe) {
    std::size_t i = static_cast<std::size_t>(pick.uniform_int(static_cast<int>(ty.size())));
    const double h = 1e-6;
    double save = ty.raw()[i];
    ty.raw()[i] = save + h;
    double up = loss_at(ty);
    ty.raw()[i] = save - h;
    double dn = loss_at(ty);
    ty.raw()[i] = save;
    double fd = (up - dn) / (2.0 * h);
    CHECK(close_rel(gy.raw()[i], fd, 1e-3, 1e-9));
  }
}

TEST_CASE("backward_to_input leaves the frozen parameters untouched") {
  FeatureExtractor fx = make_fx();
  std::uint64_t before = fx.checksum();
  Rng rng(9);
  Image y = random_image(32, 32, rng);
  Tensor ty(1, 3, 32, 32);
  std::copy(y.values.begin(), y.values.end(), ty.data());
  nn::Tape tape;
  Tensor feat = fx.features(ty, &tape);
  Tensor gfeat(1, fx.output_dim(), 1, 1);
  gfeat.fill(1.0);
  fx.backward_to_input(gfeat, tape);
  CHECK(fx.checksum() == before);
  for (const nn::ParamTensor* p : fx.params())
    for (double g : p->grad) CHECK(g == 0.0);
}

TEST_CASE("extractor checkpoint round-trips") {
  FeatureExtractor fx = make_fx(33);
  auto dir = std::filesystem::temp_directory_path() / "dic_test_perceptual";
  std::filesystem::create_directories(dir);
  auto path = dir / "fx.ckpt";
  save_extractor(path, fx);
  FeatureExtractor back = load_extractor(path);
  CHECK(back.output_dim() == fx.output_dim());
  CHECK(back.arch_id() == fx.arch_id());
  CHECK(back.checksum() == fx.checksum());
  Rng rng(10);
  Image patch = random_image(32, 32, rng);
  CHECK(back.extract(patch) == fx.extract(patch));
}
