#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dic/rng.hpp"
#include "dic/tensor.hpp"

namespace dic::nn {

/// Forward-pass regime.
///  - Train: stochastic binarization, gradients via straight-through.
///  - Infer: deterministic sign binarization.
///  - Surrogate: binarizer acts as identity; the differentiable path used by
///    finite-difference gradient checks.
enum class Mode { Train, Infer, Surrogate };

/// One learnable array plus its accumulated gradient.
struct ParamTensor {
  std::string name;
  std::vector<int> dims;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

/// Activation tape. forward() pushes whatever backward() needs; backward()
/// pops in exact reverse order, which lets one layer instance be unrolled
/// several times (shared weights across residual steps) with one tape per
/// unroll or a single shared stack.
using Tape = std::vector<Tensor>;

class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x, Tape& tape, Mode mode,
                         Rng* rng) const = 0;

  /// Returns grad w.r.t. the input. When accumulate_param_grads is set,
  /// parameter gradients are added into the ParamTensor grad buffers
  /// (callers pass false to flow gradients through frozen networks).
  virtual Tensor backward(const Tensor& gy, Tape& tape,
                          bool accumulate_param_grads) = 0;

  virtual std::vector<ParamTensor*> params() { return {}; }
  virtual std::string kind() const = 0;
};

/// 2-D convolution, square kernel, zero padding. im2col + GEMM.
class Conv2d : public Layer {
 public:
  Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride,
         int pad, Rng& init);

  Tensor forward(const Tensor& x, Tape& tape, Mode mode, Rng* rng) const override;
  Tensor backward(const Tensor& gy, Tape& tape, bool accumulate_param_grads) override;
  std::vector<ParamTensor*> params() override { return {&w_, &b_}; }
  std::string kind() const override { return "conv"; }

  int in_channels() const { return in_ch_; }
  int out_channels() const { return out_ch_; }

 private:
  int in_ch_, out_ch_, ksize_, stride_, pad_;
  ParamTensor w_;  // [out_ch, in_ch, k, k]
  ParamTensor b_;  // [out_ch]
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x, Tape& tape, Mode mode, Rng* rng) const override;
  Tensor backward(const Tensor& gy, Tape& tape, bool accumulate_param_grads) override;
  std::string kind() const override { return "relu"; }
};

class Tanh : public Layer {
 public:
  Tensor forward(const Tensor& x, Tape& tape, Mode mode, Rng* rng) const override;
  Tensor backward(const Tensor& gy, Tape& tape, bool accumulate_param_grads) override;
  std::string kind() const override { return "tanh"; }
};

/// Nearest-neighbour 2x upsampling.
class Upsample2x : public Layer {
 public:
  Tensor forward(const Tensor& x, Tape& tape, Mode mode, Rng* rng) const override;
  Tensor backward(const Tensor& gy, Tape& tape, bool accumulate_param_grads) override;
  std::string kind() const override { return "upsample2x"; }
};

/// Collapse spatial dims to 1x1 by averaging; makes classifiers input-size
/// agnostic.
class GlobalAvgPool : public Layer {
 public:
  Tensor forward(const Tensor& x, Tape& tape, Mode mode, Rng* rng) const override;
  Tensor backward(const Tensor& gy, Tape& tape, bool accumulate_param_grads) override;
  std::string kind() const override { return "gap"; }
};

/// Fully connected layer on (N, C, 1, 1) activations.
class Linear : public Layer {
 public:
  Linear(std::string name, int in_dim, int out_dim, Rng& init);

  Tensor forward(const Tensor& x, Tape& tape, Mode mode, Rng* rng) const override;
  Tensor backward(const Tensor& gy, Tape& tape, bool accumulate_param_grads) override;
  std::vector<ParamTensor*> params() override { return {&w_, &b_}; }
  std::string kind() const override { return "linear"; }

 private:
  int in_dim_, out_dim_;
  ParamTensor w_;  // [out_dim, in_dim]
  ParamTensor b_;  // [out_dim]
};

/// The bottleneck quantizer. Train mode samples +1 with probability (1+a)/2,
/// infer mode is sign(a) with sign(0) = +1, surrogate mode is the identity.
/// Backward is the straight-through identity in every mode.
class Binarize : public Layer {
 public:
  Tensor forward(const Tensor& x, Tape& tape, Mode mode, Rng* rng) const override;
  Tensor backward(const Tensor& gy, Tape& tape, bool accumulate_param_grads) override;
  std::string kind() const override { return "binarize"; }
};

class Sequential {
 public:
  Sequential() = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

  Tensor forward(const Tensor& x, Tape& tape, Mode mode, Rng* rng) const;
  Tensor backward(const Tensor& gy, Tape& tape,
                  bool accumulate_param_grads = true);

  /// Convenience forward that discards the tape (inference paths).
  Tensor infer(const Tensor& x) const;

  std::vector<ParamTensor*> params();
  std::vector<const ParamTensor*> params() const;
  std::size_t param_count() const;
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Elementwise binarization as a standalone operation (the layer delegates
/// here). Inputs must lie in [-1, 1] up to 1e-6 of slack or a NumericError is
/// thrown.
Tensor binarize(const Tensor& activations, Mode mode, Rng* rng);

/// Softmax cross-entropy over (N, K, 1, 1) logits. Returns the mean loss and
/// writes d(loss)/d(logits) into grad when non-null.
double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                             Tensor* grad);

/// Row index of the max logit per sample.
std::vector<int> argmax_rows(const Tensor& logits);

/// Adam with optional cosine-decayed learning rate (handled by callers via
/// set_lr). step() applies the update and zeroes gradients.
class Adam {
 public:
  explicit Adam(std::vector<ParamTensor*> params, double lr = 1e-3,
                double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step();
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  std::vector<ParamTensor*> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

/// FNV-1a over the raw bytes of all parameter values, in declaration order.
/// Used to assert frozen-ness of the perceptron across training runs.
std::uint64_t params_checksum(const std::vector<const ParamTensor*>& params);

}  // namespace dic::nn
