#include "dic/nn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace dic::nn {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

Tensor shape_record(std::initializer_list<int> vals) {
  Tensor t(1, 1, 1, static_cast<int>(vals.size()));
  int i = 0;
  for (int v : vals) t.raw()[i++] = static_cast<double>(v);
  return t;
}

Tensor pop(Tape& tape) {
  Tensor t = std::move(tape.back());
  tape.pop_back();
  return t;
}

int out_extent(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// cols has one row per output position (n, oy, ox) and one column per
// (ic, ky, kx) kernel tap.
Tensor im2col(const Tensor& x, int k, int stride, int pad) {
  const int oh = out_extent(x.h(), k, stride, pad);
  const int ow = out_extent(x.w(), k, stride, pad);
  const int rows = x.n() * oh * ow;
  const int taps = x.c() * k * k;
  Tensor cols(1, 1, rows, taps);
  double* out = cols.data();
  for (int n = 0; n < x.n(); ++n) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double* row = out + (static_cast<std::size_t>((n * oh + oy) * ow + ox)) * taps;
        for (int ic = 0; ic < x.c(); ++ic) {
          for (int ky = 0; ky < k; ++ky) {
            int iy = oy * stride + ky - pad;
            for (int kx = 0; kx < k; ++kx) {
              int ix = ox * stride + kx - pad;
              double v = 0.0;
              if (iy >= 0 && iy < x.h() && ix >= 0 && ix < x.w())
                v = x(n, ic, iy, ix);
              row[(ic * k + ky) * k + kx] = v;
            }
          }
        }
      }
    }
  }
  return cols;
}

void col2im_add(const Tensor& gcols, Tensor& gx, int k, int stride, int pad) {
  const int oh = out_extent(gx.h(), k, stride, pad);
  const int ow = out_extent(gx.w(), k, stride, pad);
  const int taps = gx.c() * k * k;
  const double* in = gcols.data();
  for (int n = 0; n < gx.n(); ++n) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const double* row = in + (static_cast<std::size_t>((n * oh + oy) * ow + ox)) * taps;
        for (int ic = 0; ic < gx.c(); ++ic) {
          for (int ky = 0; ky < k; ++ky) {
            int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= gx.h()) continue;
            for (int kx = 0; kx < k; ++kx) {
              int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= gx.w()) continue;
              gx(n, ic, iy, ix) += row[(ic * k + ky) * k + kx];
            }
          }
        }
      }
    }
  }
}

void init_uniform_fan_in(ParamTensor& p, int fan_in, Rng& rng) {
  double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : p.value) v = rng.uniform(-limit, limit);
}

ParamTensor make_param(std::string name, std::vector<int> dims) {
  ParamTensor p;
  p.name = std::move(name);
  p.dims = std::move(dims);
  std::size_t n = 1;
  for (int d : p.dims) n *= static_cast<std::size_t>(d);
  p.value.assign(n, 0.0);
  p.grad.assign(n, 0.0);
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride,
               int pad, Rng& init)
    : in_ch_(in_ch), out_ch_(out_ch), ksize_(ksize), stride_(stride), pad_(pad),
      w_(make_param(name + ".weight", {out_ch, in_ch, ksize, ksize})),
      b_(make_param(name + ".bias", {out_ch})) {
  init_uniform_fan_in(w_, in_ch * ksize * ksize, init);
}

Tensor Conv2d::forward(const Tensor& x, Tape& tape, Mode, Rng*) const {
  if (x.c() != in_ch_) throw ShapeError("conv input channel mismatch");
  const int oh = out_extent(x.h(), ksize_, stride_, pad_);
  const int ow = out_extent(x.w(), ksize_, stride_, pad_);
  const int rows = x.n() * oh * ow;
  const int taps = in_ch_ * ksize_ * ksize_;

  Tensor cols = im2col(x, ksize_, stride_, pad_);
  Tensor out_mat(1, 1, rows, out_ch_);
  {
    CMapRM c(cols.data(), rows, taps);
    CMapRM w(w_.value.data(), out_ch_, taps);
    MapRM o(out_mat.data(), rows, out_ch_);
    o.noalias() = c * w.transpose();
    o.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b_.value.data(), out_ch_);
  }

  Tensor y(x.n(), out_ch_, oh, ow);
  const double* om = out_mat.data();
  for (int n = 0; n < x.n(); ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const double* row = om + (static_cast<std::size_t>((n * oh + oy) * ow + ox)) * out_ch_;
        for (int oc = 0; oc < out_ch_; ++oc) y(n, oc, oy, ox) = row[oc];
      }

  tape.push_back(shape_record({x.n(), x.c(), x.h(), x.w()}));
  tape.push_back(std::move(cols));
  return y;
}

Tensor Conv2d::backward(const Tensor& gy, Tape& tape, bool accumulate_param_grads) {
  Tensor cols = pop(tape);
  Tensor xs = pop(tape);
  const int xn = static_cast<int>(xs.raw()[0]);
  const int xc = static_cast<int>(xs.raw()[1]);
  const int xh = static_cast<int>(xs.raw()[2]);
  const int xw = static_cast<int>(xs.raw()[3]);
  const int oh = gy.h(), ow = gy.w();
  const int rows = xn * oh * ow;
  const int taps = xc * ksize_ * ksize_;

  Tensor gy_mat(1, 1, rows, out_ch_);
  double* gm = gy_mat.data();
  for (int n = 0; n < xn; ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double* row = gm + (static_cast<std::size_t>((n * oh + oy) * ow + ox)) * out_ch_;
        for (int oc = 0; oc < out_ch_; ++oc) row[oc] = gy(n, oc, oy, ox);
      }

  CMapRM g(gy_mat.data(), rows, out_ch_);
  CMapRM c(cols.data(), rows, taps);
  if (accumulate_param_grads) {
    MapRM gw(w_.grad.data(), out_ch_, taps);
    gw.noalias() += g.transpose() * c;
    Eigen::Map<Eigen::RowVectorXd> gb(b_.grad.data(), out_ch_);
    gb += g.colwise().sum();
  }

  Tensor gcols(1, 1, rows, taps);
  {
    CMapRM w(w_.value.data(), out_ch_, taps);
    MapRM gc(gcols.data(), rows, taps);
    gc.noalias() = g * w;
  }
  Tensor gx(xn, xc, xh, xw);
  col2im_add(gcols, gx, ksize_, stride_, pad_);
  return gx;
}

// ---------------------------------------------------------------------------
// Activations

Tensor ReLU::forward(const Tensor& x, Tape& tape, Mode, Rng*) const {
  Tensor y = x;
  for (double& v : y.raw()) v = v > 0.0 ? v : 0.0;
  tape.push_back(x);
  return y;
}

Tensor ReLU::backward(const Tensor& gy, Tape& tape, bool) {
  Tensor x = pop(tape);
  Tensor gx = gy;
  const double* xv = x.data();
  double* gv = gx.data();
  for (std::size_t i = 0; i < gx.size(); ++i)
    if (xv[i] <= 0.0) gv[i] = 0.0;
  return gx;
}

Tensor Tanh::forward(const Tensor& x, Tape& tape, Mode, Rng*) const {
  Tensor y = x;
  for (double& v : y.raw()) v = std::tanh(v);
  tape.push_back(y);
  return y;
}

Tensor Tanh::backward(const Tensor& gy, Tape& tape, bool) {
  Tensor y = pop(tape);
  Tensor gx = gy;
  const double* yv = y.data();
  double* gv = gx.data();
  for (std::size_t i = 0; i < gx.size(); ++i) gv[i] *= 1.0 - yv[i] * yv[i];
  return gx;
}

// ---------------------------------------------------------------------------
// Upsample / pooling

Tensor Upsample2x::forward(const Tensor& x, Tape&, Mode, Rng*) const {
  Tensor y(x.n(), x.c(), x.h() * 2, x.w() * 2);
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int iy = 0; iy < x.h(); ++iy)
        for (int ix = 0; ix < x.w(); ++ix) {
          double v = x(n, c, iy, ix);
          y(n, c, 2 * iy, 2 * ix) = v;
          y(n, c, 2 * iy, 2 * ix + 1) = v;
          y(n, c, 2 * iy + 1, 2 * ix) = v;
          y(n, c, 2 * iy + 1, 2 * ix + 1) = v;
        }
  return y;
}

Tensor Upsample2x::backward(const Tensor& gy, Tape&, bool) {
  if (gy.h() % 2 != 0 || gy.w() % 2 != 0)
    throw ShapeError("upsample backward expects even dims");
  Tensor gx(gy.n(), gy.c(), gy.h() / 2, gy.w() / 2);
  for (int n = 0; n < gx.n(); ++n)
    for (int c = 0; c < gx.c(); ++c)
      for (int iy = 0; iy < gx.h(); ++iy)
        for (int ix = 0; ix < gx.w(); ++ix)
          gx(n, c, iy, ix) = gy(n, c, 2 * iy, 2 * ix) + gy(n, c, 2 * iy, 2 * ix + 1) +
                             gy(n, c, 2 * iy + 1, 2 * ix) + gy(n, c, 2 * iy + 1, 2 * ix + 1);
  return gx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, Tape& tape, Mode, Rng*) const {
  Tensor y(x.n(), x.c(), 1, 1);
  const double inv = 1.0 / (static_cast<double>(x.h()) * x.w());
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c) {
      double s = 0.0;
      for (int iy = 0; iy < x.h(); ++iy)
        for (int ix = 0; ix < x.w(); ++ix) s += x(n, c, iy, ix);
      y(n, c, 0, 0) = s * inv;
    }
  tape.push_back(shape_record({x.h(), x.w()}));
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& gy, Tape& tape, bool) {
  Tensor hs = pop(tape);
  const int h = static_cast<int>(hs.raw()[0]);
  const int w = static_cast<int>(hs.raw()[1]);
  Tensor gx(gy.n(), gy.c(), h, w);
  const double inv = 1.0 / (static_cast<double>(h) * w);
  for (int n = 0; n < gy.n(); ++n)
    for (int c = 0; c < gy.c(); ++c) {
      double g = gy(n, c, 0, 0) * inv;
      for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix) gx(n, c, iy, ix) = g;
    }
  return gx;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(std::string name, int in_dim, int out_dim, Rng& init)
    : in_dim_(in_dim), out_dim_(out_dim),
      w_(make_param(name + ".weight", {out_dim, in_dim})),
      b_(make_param(name + ".bias", {out_dim})) {
  init_uniform_fan_in(w_, in_dim, init);
}

Tensor Linear::forward(const Tensor& x, Tape& tape, Mode, Rng*) const {
  if (x.c() != in_dim_ || x.h() != 1 || x.w() != 1)
    throw ShapeError("linear expects (N, in_dim, 1, 1) input");
  Tensor y(x.n(), out_dim_, 1, 1);
  CMapRM xm(x.data(), x.n(), in_dim_);
  CMapRM wm(w_.value.data(), out_dim_, in_dim_);
  MapRM ym(y.data(), x.n(), out_dim_);
  ym.noalias() = xm * wm.transpose();
  ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b_.value.data(), out_dim_);
  tape.push_back(x);
  return y;
}

Tensor Linear::backward(const Tensor& gy, Tape& tape, bool accumulate_param_grads) {
  Tensor x = pop(tape);
  CMapRM gm(gy.data(), gy.n(), out_dim_);
  CMapRM xm(x.data(), x.n(), in_dim_);
  if (accumulate_param_grads) {
    MapRM gw(w_.grad.data(), out_dim_, in_dim_);
    gw.noalias() += gm.transpose() * xm;
    Eigen::Map<Eigen::RowVectorXd> gb(b_.grad.data(), out_dim_);
    gb += gm.colwise().sum();
  }
  Tensor gx(x.n(), in_dim_, 1, 1);
  MapRM gxm(gx.data(), x.n(), in_dim_);
  CMapRM wm(w_.value.data(), out_dim_, in_dim_);
  gxm.noalias() = gm * wm;
  return gx;
}

// ---------------------------------------------------------------------------
// Binarizer

Tensor binarize(const Tensor& activations, Mode mode, Rng* rng) {
  constexpr double kTol = 1e-6;
  Tensor y = activations;
  for (double& v : y.raw()) {
    if (!(v >= -1.0 - kTol && v <= 1.0 + kTol))
      throw NumericError("binarizer input outside [-1,1]");
    switch (mode) {
      case Mode::Infer:
        v = v >= 0.0 ? 1.0 : -1.0;  // sign(0) = +1
        break;
      case Mode::Train: {
        double p = std::clamp(0.5 * (1.0 + v), 0.0, 1.0);
        v = (rng->uniform() < p) ? 1.0 : -1.0;
        break;
      }
      case Mode::Surrogate:
        break;  // identity
    }
  }
  return y;
}

Tensor Binarize::forward(const Tensor& x, Tape&, Mode mode, Rng* rng) const {
  if (mode == Mode::Train && rng == nullptr)
    throw ConfigError("train-mode binarizer needs an RNG");
  return binarize(x, mode, rng);
}

Tensor Binarize::backward(const Tensor& gy, Tape&, bool) {
  return gy;  // straight-through estimator
}

// ---------------------------------------------------------------------------
// Sequential

Tensor Sequential::forward(const Tensor& x, Tape& tape, Mode mode, Rng* rng) const {
  Tensor cur = x;
  for (const auto& l : layers_) cur = l->forward(cur, tape, mode, rng);
  return cur;
}

Tensor Sequential::backward(const Tensor& gy, Tape& tape, bool accumulate_param_grads) {
  Tensor cur = gy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    cur = (*it)->backward(cur, tape, accumulate_param_grads);
  return cur;
}

Tensor Sequential::infer(const Tensor& x) const {
  Tape tape;
  return forward(x, tape, Mode::Infer, nullptr);
}

std::vector<ParamTensor*> Sequential::params() {
  std::vector<ParamTensor*> out;
  for (auto& l : layers_)
    for (ParamTensor* p : l->params()) out.push_back(p);
  return out;
}

std::vector<const ParamTensor*> Sequential::params() const {
  std::vector<const ParamTensor*> out;
  for (const auto& l : layers_)
    for (ParamTensor* p : const_cast<Layer&>(*l).params()) out.push_back(p);
  return out;
}

std::size_t Sequential::param_count() const {
  std::size_t n = 0;
  for (const ParamTensor* p : params()) n += p->size();
  return n;
}

// ---------------------------------------------------------------------------
// Loss / utilities

double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                             Tensor* grad) {
  if (logits.n() != static_cast<int>(labels.size()))
    throw ShapeError("label count does not match batch");
  const int n = logits.n(), k = logits.c();
  if (grad) *grad = Tensor::zeros_like(logits);
  double loss = 0.0;
  std::vector<double> p(k);
  for (int i = 0; i < n; ++i) {
    const double* row = logits.sample(i);
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < k; ++j) {
      p[j] = std::exp(row[j] - mx);
      z += p[j];
    }
    int y = labels[i];
    if (y < 0 || y >= k) throw ConfigError("label out of range");
    loss += -(row[y] - mx - std::log(z));
    if (grad) {
      double* g = grad->sample(i);
      for (int j = 0; j < k; ++j) g[j] = (p[j] / z - (j == y ? 1.0 : 0.0)) / n;
    }
  }
  return loss / n;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(logits.n());
  for (int i = 0; i < logits.n(); ++i) {
    const double* row = logits.sample(i);
    int best = 0;
    for (int j = 1; j < logits.c(); ++j)
      if (row[j] > row[best]) best = j;
    out[i] = best;
  }
  return out;
}

Adam::Adam(std::vector<ParamTensor*> params, double lr, double beta1,
           double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const ParamTensor* p : params_) {
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    ParamTensor& p = *params_[pi];
    std::vector<double>& m = m_[pi];
    std::vector<double>& v = v_[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      double g = p.grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      double mh = m[i] / bc1;
      double vh = v[i] / bc2;
      p.value[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
    p.zero_grad();
  }
}

std::uint64_t params_checksum(const std::vector<const ParamTensor*>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const unsigned char* bytes, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const ParamTensor* p : params)
    mix(reinterpret_cast<const unsigned char*>(p->value.data()),
        p->value.size() * sizeof(double));
  return h;
}

}  // namespace dic::nn
