#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "dic/nn.hpp"
#include "support/testutil.hpp"

using namespace dic;
using namespace dic::nn;
using test::close_rel;
using test::random_tensor;

namespace {

// Naive direct convolution used as the conv-layer oracle.
Tensor naive_conv(const Tensor& x, const ParamTensor& w, const ParamTensor& b,
                  int k, int stride, int pad) {
  const int out_ch = w.dims[0];
  const int oh = (x.h() + 2 * pad - k) / stride + 1;
  const int ow = (x.w() + 2 * pad - k) / stride + 1;
  Tensor y(x.n(), out_ch, oh, ow);
  for (int n = 0; n < x.n(); ++n)
    for (int oc = 0; oc < out_ch; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = b.value[oc];
          for (int ic = 0; ic < x.c(); ++ic)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                int iy = oy * stride + ky - pad;
                int ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                double wv = w.value[((oc * x.c() + ic) * k + ky) * k + kx];
                acc += wv * x(n, ic, iy, ix);
              }
          y(n, oc, oy, ox) = acc;
        }
  return y;
}

double scalar_loss(const Tensor& y) {
  // sum of squares / 2, gradient is y itself
  double s = 0.0;
  for (double v : y.raw()) s += v * v;
  return 0.5 * s;
}

// Central finite differences through a sequential's parameters.
void check_param_gradients(Sequential& seq, const Tensor& x, double tol) {
  Tape tape;
  Tensor y = seq.forward(x, tape, Mode::Surrogate, nullptr);
  Tensor gy = y;  // d(loss)/dy for the sum-of-squares/2 loss
  for (ParamTensor* p : seq.params()) p->zero_grad();
  seq.backward(gy, tape);

  Rng pick(123);
  for (ParamTensor* p : seq.params()) {
    for (int probe = 0; probe < 6; ++probe) {
      std::size_t i = static_cast<std::size_t>(pick.uniform_int(static_cast<int>(p->size())));
      const double h = 1e-6;
      double save = p->value[i];
      p->value[i] = save + h;
      Tape t1;
      double up = scalar_loss(seq.forward(x, t1, Mode::Surrogate, nullptr));
      p->value[i] = save - h;
      Tape t2;
      double dn = scalar_loss(seq.forward(x, t2, Mode::Surrogate, nullptr));
      p->value[i] = save;
      double fd = (up - dn) / (2.0 * h);
      CHECK(close_rel(p->grad[i], fd, tol, 1e-8));
    }
  }
}

}  // namespace

TEST_CASE("conv forward matches the naive direct convolution") {
  Rng rng(9);
  for (auto [stride, pad] : {std::pair{1, 1}, std::pair{2, 1}}) {
    Conv2d conv("t", 3, 5, 3, stride, pad, rng);
    Tensor x = random_tensor(2, 3, 8, 8, rng);
    Tape tape;
    Tensor got = conv.forward(x, tape, Mode::Infer, nullptr);
    Tensor expected = naive_conv(x, *conv.params()[0], *conv.params()[1], 3, stride, pad);
    REQUIRE(got.same_shape(expected));
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(got.raw()[i] == doctest::Approx(expected.raw()[i]).epsilon(1e-12));
  }
}

TEST_CASE("layer gradients match finite differences") {
  Rng rng(11);
  Sequential seq;
  seq.add(std::make_unique<Conv2d>("c0", 2, 4, 3, 2, 1, rng));
  seq.add(std::make_unique<ReLU>());
  seq.add(std::make_unique<Conv2d>("c1", 4, 3, 3, 1, 1, rng));
  seq.add(std::make_unique<Tanh>());
  Tensor x = random_tensor(2, 2, 8, 8, rng);
  check_param_gradients(seq, x, 1e-5);
}

TEST_CASE("upsample/gap/linear gradients match finite differences") {
  Rng rng(13);
  Sequential seq;
  seq.add(std::make_unique<Conv2d>("c0", 2, 3, 3, 2, 1, rng));
  seq.add(std::make_unique<Upsample2x>());
  seq.add(std::make_unique<ReLU>());
  seq.add(std::make_unique<GlobalAvgPool>());
  seq.add(std::make_unique<Linear>("fc", 3, 4, rng));
  Tensor x = random_tensor(3, 2, 8, 8, rng);
  check_param_gradients(seq, x, 1e-5);
}

TEST_CASE("input gradients flow through a frozen sequential") {
  Rng rng(15);
  Sequential seq;
  seq.add(std::make_unique<Conv2d>("c0", 2, 4, 3, 1, 1, rng));
  seq.add(std::make_unique<ReLU>());
  seq.add(std::make_unique<GlobalAvgPool>());
  Tensor x = random_tensor(1, 2, 6, 6, rng);

  Tape tape;
  Tensor y = seq.forward(x, tape, Mode::Surrogate, nullptr);
  for (ParamTensor* p : seq.params()) p->zero_grad();
  Tensor gx = seq.backward(y, tape, /*accumulate_param_grads=*/false);

  // param grads untouched
  for (ParamTensor* p : seq.params())
    for (double g : p->grad) CHECK(g == 0.0);

  // input grads match finite differences
  Rng pick(5);
  for (int probe = 0; probe < 8; ++probe) {
    std::size_t i = static_cast<std::size_t>(pick.uniform_int(static_cast<int>(x.size())));
    const double h = 1e-6;
    double save = x.raw()[i];
    x.raw()[i] = save + h;
    Tape t1;
    double up = scalar_loss(seq.forward(x, t1, Mode::Surrogate, nullptr));
    x.raw()[i] = save - h;
    Tape t2;
    double dn = scalar_loss(seq.forward(x, t2, Mode::Surrogate, nullptr));
    x.raw()[i] = save;
    CHECK(close_rel(gx.raw()[i], (up - dn) / (2.0 * h), 1e-5, 1e-8));
  }
}

TEST_CASE("binarize obeys the declared modes") {
  Tensor x(1, 1, 1, 4);
  x.raw() = {0.7, 0.0, -0.3, -1.0};

  SUBCASE("infer is sign with sign(0) = +1") {
    Tensor y = binarize(x, Mode::Infer, nullptr);
    CHECK(y.raw() == std::vector<double>{1.0, 1.0, -1.0, -1.0});
  }

  SUBCASE("surrogate is the identity") {
    Tensor y = binarize(x, Mode::Surrogate, nullptr);
    CHECK(y.raw() == x.raw());
  }

  SUBCASE("train samples +1 with probability (1+a)/2") {
    Rng rng(71);
    Tensor probe(1, 1, 1, 1);
    probe.raw() = {0.7};
    int plus = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
      if (binarize(probe, Mode::Train, &rng).raw()[0] > 0) ++plus;
    double freq = static_cast<double>(plus) / draws;
    CHECK(freq == doctest::Approx(0.85).epsilon(0.025));
  }

  SUBCASE("out-of-range input is a numeric error") {
    Tensor bad(1, 1, 1, 1);
    bad.raw() = {1.1};
    CHECK_THROWS_AS(binarize(bad, Mode::Infer, nullptr), NumericError);
  }

  SUBCASE("straight-through backward is the identity jacobian") {
    Binarize layer;
    Tape tape;
    Rng rng(3);
    layer.forward(x, tape, Mode::Train, &rng);
    Tensor g(1, 1, 1, 4);
    g.raw() = {0.5, -2.0, 3.25, 0.0};
    Tensor gx = layer.backward(g, tape, true);
    CHECK(gx.raw() == g.raw());
  }
}

TEST_CASE("softmax cross entropy loss and gradient") {
  Tensor logits(2, 3, 1, 1);
  logits.raw() = {2.0, 1.0, 0.0, 0.0, 0.0, 0.0};
  std::vector<int> labels = {0, 2};
  Tensor grad;
  double loss = softmax_cross_entropy(logits, labels, &grad);

  // hand-computed: -log softmax values
  double l0 = -std::log(std::exp(2.0) / (std::exp(2.0) + std::exp(1.0) + 1.0));
  double l1 = -std::log(1.0 / 3.0);
  CHECK(loss == doctest::Approx(0.5 * (l0 + l1)).epsilon(1e-12));

  // gradient rows sum to zero
  for (int i = 0; i < 2; ++i) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s += grad(i, j, 0, 0);
    CHECK(s == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("adam reduces a quadratic") {
  ParamTensor p;
  p.name = "w";
  p.dims = {4};
  p.value = {5.0, -3.0, 2.0, 10.0};
  p.grad.assign(4, 0.0);
  Adam opt({&p}, 0.05);
  for (int it = 0; it < 400; ++it) {
    for (int i = 0; i < 4; ++i) p.grad[i] = 2.0 * p.value[i];
    opt.step();
  }
  for (double v : p.value) CHECK(std::abs(v) < 1e-2);
}

TEST_CASE("params_checksum changes with any parameter bit") {
  Rng rng(1);
  Conv2d conv("c", 2, 2, 3, 1, 1, rng);
  std::vector<const ParamTensor*> ps(conv.params().begin(), conv.params().end());
  std::uint64_t before = params_checksum(ps);
  conv.params()[0]->value[3] += 1e-15;
  std::uint64_t after = params_checksum(ps);
  CHECK(before != after);
}
