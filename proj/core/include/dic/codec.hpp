#pragma once

#include <vector>

#include "dic/image.hpp"
#include "dic/latent.hpp"
#include "dic/nn.hpp"

namespace dic {

/// Layer-shape description of a codec; fully determines parameter shapes.
/// Encoder: three stride-2 conv blocks 32x32 -> 4x4 with a tanh output
/// feeding the binarizer. Decoder mirrors with upsample+conv blocks. The same
/// weights run every residual step.
struct CodecArchitecture {
  int enc_ch1 = 16;
  int enc_ch2 = 32;
  int code_channels = 32;  // bits per latent cell per step
  int max_steps = 4;

  static constexpr int grid = kPatchSize / 8;  // three stride-2 halvings

  bool operator==(const CodecArchitecture&) const = default;

  /// Bits one encode step emits: grid*grid*code_channels.
  int bits_per_step() const { return grid * grid * code_channels; }

  void validate() const {
    if (enc_ch1 <= 0 || enc_ch2 <= 0 || code_channels <= 0 || max_steps <= 0)
      throw ConfigError("codec architecture fields must be positive");
    if (code_channels > 255 || max_steps > 255)
      throw ConfigError("codec geometry exceeds bitstream header range");
  }
};

/// Encoder/decoder parameter pair. Inference is const and safe to share
/// across threads; training is single-writer.
class CodecModel {
 public:
  CodecModel(const CodecArchitecture& arch, Rng& init);

  const CodecArchitecture& arch() const { return arch_; }
  nn::Sequential& encoder() { return encoder_; }
  const nn::Sequential& encoder() const { return encoder_; }
  nn::Sequential& decoder() { return decoder_; }
  const nn::Sequential& decoder() const { return decoder_; }

  std::vector<nn::ParamTensor*> params();
  std::vector<const nn::ParamTensor*> params() const;
  std::size_t param_count() const;

  /// Throws NumericError if any parameter is non-finite.
  void check_finite() const;

 private:
  CodecArchitecture arch_;
  nn::Sequential encoder_;
  nn::Sequential decoder_;
};

/// Compress one 32x32x3 patch into a bipolar latent. `steps` residual passes
/// share the model weights; inference binarization is the deterministic sign.
/// ShapeError for a non-32x32 patch, ConfigError when steps is out of range.
LatentCode encode(const CodecModel& model, const Image& patch, int steps = 1);

/// Reconstruct a 32x32x3 image from a latent: per-step residual
/// reconstructions accumulate and are clamped to [0,1] once at the end.
/// FormatError when the code's geometry does not match the model.
Image decode(const CodecModel& model, const LatentCode& code);

/// Tile a 32-aligned image row-major and encode each tile.
std::vector<LatentCode> compress_image(const CodecModel& model, const Image& image,
                                       int steps = 1);

/// Decode row-major tile codes and reassemble the (padded) image.
Image decompress_image(const CodecModel& model, const std::vector<LatentCode>& codes,
                       int padded_h, int padded_w);

// --- training-path plumbing -------------------------------------------------

/// Per-batch activation record of the unrolled residual forward pass.
struct CodecForward {
  std::vector<nn::Tape> step_tapes;  // one tape per step (encoder+decoder)
  Tensor output;                     // accumulated reconstruction, NOT clamped
};

/// Differentiable multi-step forward on an NCHW batch of 32x32 patches.
/// Training mode samples the stochastic binarizer from `rng`; surrogate mode
/// replaces it with the identity (used by gradient checks).
CodecForward codec_forward(const CodecModel& model, const Tensor& x, int steps,
                           nn::Mode mode, Rng* rng);

/// Backpropagate d(loss)/d(output) through the unrolled steps, accumulating
/// into the model's parameter gradients.
void codec_backward(CodecModel& model, const Tensor& grad_output, CodecForward& fwd);

}  // namespace dic
