#include "dic/codec.hpp"

#include <algorithm>
#include <memory>

namespace dic {

namespace {

Tensor image_to_tensor(const Image& img) {
  Tensor t(1, 3, img.height, img.width);
  std::copy(img.values.begin(), img.values.end(), t.data());
  return t;
}

void check_patch(const Image& patch) {
  if (patch.height != kPatchSize || patch.width != kPatchSize ||
      patch.values.size() != static_cast<std::size_t>(3) * kPatchSize * kPatchSize)
    throw ShapeError("codec patches must be 32x32x3");
}

}  // namespace

CodecModel::CodecModel(const CodecArchitecture& arch, Rng& init) : arch_(arch) {
  arch_.validate();
  using namespace nn;
  encoder_.add(std::make_unique<Conv2d>("encoder.conv0", 3, arch.enc_ch1, 3, 2, 1, init));
  encoder_.add(std::make_unique<ReLU>());
  encoder_.add(std::make_unique<Conv2d>("encoder.conv1", arch.enc_ch1, arch.enc_ch2, 3, 2, 1, init));
  encoder_.add(std::make_unique<ReLU>());
  encoder_.add(std::make_unique<Conv2d>("encoder.conv2", arch.enc_ch2, arch.code_channels, 3, 2, 1, init));
  encoder_.add(std::make_unique<Tanh>());
  encoder_.add(std::make_unique<Binarize>());

  decoder_.add(std::make_unique<Upsample2x>());
  decoder_.add(std::make_unique<Conv2d>("decoder.conv0", arch.code_channels, arch.enc_ch2, 3, 1, 1, init));
  decoder_.add(std::make_unique<ReLU>());
  decoder_.add(std::make_unique<Upsample2x>());
  decoder_.add(std::make_unique<Conv2d>("decoder.conv1", arch.enc_ch2, arch.enc_ch1, 3, 1, 1, init));
  decoder_.add(std::make_unique<ReLU>());
  decoder_.add(std::make_unique<Upsample2x>());
  decoder_.add(std::make_unique<Conv2d>("decoder.conv2", arch.enc_ch1, 3, 3, 1, 1, init));
}

std::vector<nn::ParamTensor*> CodecModel::params() {
  std::vector<nn::ParamTensor*> out = encoder_.params();
  for (nn::ParamTensor* p : decoder_.params()) out.push_back(p);
  return out;
}

std::vector<const nn::ParamTensor*> CodecModel::params() const {
  std::vector<const nn::ParamTensor*> out = encoder_.params();
  for (const nn::ParamTensor* p : decoder_.params()) out.push_back(p);
  return out;
}

std::size_t CodecModel::param_count() const {
  return encoder_.param_count() + decoder_.param_count();
}

void CodecModel::check_finite() const {
  for (const nn::ParamTensor* p : params())
    for (double v : p->value)
      if (!std::isfinite(v)) throw NumericError("non-finite codec parameter in " + p->name);
}

LatentCode encode(const CodecModel& model, const Image& patch, int steps) {
  check_patch(patch);
  if (steps < 1 || steps > model.arch().max_steps)
    throw ConfigError("steps must lie in [1, max_steps]");

  const CodecArchitecture& a = model.arch();
  LatentCode code;
  code.grid_h = CodecArchitecture::grid;
  code.grid_w = CodecArchitecture::grid;
  code.channels_per_step = a.code_channels;
  code.steps = steps;
  code.bits.reserve(static_cast<std::size_t>(steps) * a.bits_per_step());

  Tensor x = image_to_tensor(patch);
  Tensor residual = x;
  Tensor accumulated;
  for (int s = 0; s < steps; ++s) {
    Tensor bipolar = model.encoder().infer(residual);
    for (std::size_t i = 0; i < bipolar.size(); ++i)
      code.bits.push_back(bipolar.data()[i] > 0 ? 1 : -1);
    if (s + 1 == steps) break;
    Tensor d = model.decoder().infer(bipolar);
    if (s == 0) {
      accumulated = d;
    } else {
      for (std::size_t i = 0; i < accumulated.size(); ++i)
        accumulated.raw()[i] += d.raw()[i];
    }
    residual = x;
    for (std::size_t i = 0; i < residual.size(); ++i)
      residual.raw()[i] -= accumulated.raw()[i];
  }
  return code;
}

Image decode(const CodecModel& model, const LatentCode& code) {
  code.validate();
  const CodecArchitecture& a = model.arch();
  if (code.grid_h != CodecArchitecture::grid || code.grid_w != CodecArchitecture::grid ||
      code.channels_per_step != a.code_channels || code.steps > a.max_steps)
    throw FormatError("latent geometry does not match model architecture");

  const int per_step = a.bits_per_step();
  Tensor accumulated(1, 3, kPatchSize, kPatchSize);
  for (int s = 0; s < code.steps; ++s) {
    Tensor bipolar(1, a.code_channels, CodecArchitecture::grid, CodecArchitecture::grid);
    for (int i = 0; i < per_step; ++i)
      bipolar.data()[i] = static_cast<double>(code.bits[static_cast<std::size_t>(s) * per_step + i]);
    Tensor d = model.decoder().infer(bipolar);
    for (std::size_t i = 0; i < accumulated.size(); ++i)
      accumulated.raw()[i] += d.raw()[i];
  }

  Image out(kPatchSize, kPatchSize);
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = std::clamp(accumulated.raw()[i], 0.0, 1.0);
  return out;
}

std::vector<LatentCode> compress_image(const CodecModel& model, const Image& image,
                                       int steps) {
  if (image.height <= 0 || image.width <= 0 || image.values.empty())
    throw ShapeError("empty image");
  std::vector<Image> tiles = split_tiles(image);
  std::vector<LatentCode> codes;
  codes.reserve(tiles.size());
  for (const Image& t : tiles) codes.push_back(encode(model, t, steps));
  return codes;
}

Image decompress_image(const CodecModel& model, const std::vector<LatentCode>& codes,
                       int padded_h, int padded_w) {
  std::vector<Image> tiles;
  tiles.reserve(codes.size());
  for (const LatentCode& c : codes) tiles.push_back(decode(model, c));
  return join_tiles(tiles, padded_h, padded_w);
}

CodecForward codec_forward(const CodecModel& model, const Tensor& x, int steps,
                           nn::Mode mode, Rng* rng) {
  if (x.c() != 3 || x.h() != kPatchSize || x.w() != kPatchSize)
    throw ShapeError("codec batch must be Nx3x32x32");
  if (steps < 1 || steps > model.arch().max_steps)
    throw ConfigError("steps must lie in [1, max_steps]");

  CodecForward fwd;
  fwd.step_tapes.resize(steps);
  Tensor residual = x;
  Tensor accumulated = Tensor::zeros_like(x);
  for (int s = 0; s < steps; ++s) {
    nn::Tape& tape = fwd.step_tapes[s];
    Tensor code = model.encoder().forward(residual, tape, mode, rng);
    Tensor d = model.decoder().forward(code, tape, mode, rng);
    for (std::size_t i = 0; i < accumulated.size(); ++i)
      accumulated.raw()[i] += d.raw()[i];
    if (s + 1 < steps) {
      residual = x;
      for (std::size_t i = 0; i < residual.size(); ++i)
        residual.raw()[i] -= accumulated.raw()[i];
    }
  }
  fwd.output = std::move(accumulated);
  return fwd;
}

void codec_backward(CodecModel& model, const Tensor& grad_output, CodecForward& fwd) {
  const int steps = static_cast<int>(fwd.step_tapes.size());
  // With r_s = r_{s-1} - d_s and output y = x - r_S:
  //   dL/dr_S = -dL/dy, dL/dd_s = -dL/dr_s,
  //   dL/dr_{s-1} = dL/dr_s + (backprop of dL/dd_s through step s).
  Tensor grad_residual = grad_output;
  for (double& v : grad_residual.raw()) v = -v;
  for (int s = steps - 1; s >= 0; --s) {
    nn::Tape& tape = fwd.step_tapes[s];
    Tensor gd = grad_residual;
    for (double& v : gd.raw()) v = -v;
    Tensor gcode = model.decoder().backward(gd, tape);
    Tensor gx = model.encoder().backward(gcode, tape);
    for (std::size_t i = 0; i < grad_residual.size(); ++i)
      grad_residual.raw()[i] += gx.raw()[i];
  }
}

}  // namespace dic
