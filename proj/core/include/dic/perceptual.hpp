#pragma once

#include <array>
#include <utility>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dic/image.hpp"
#include "dic/mmd.hpp"
#include "dic/nn.hpp"

namespace dic {

/// The frozen perceptron F(.): a truncated conv classifier that embeds 32x32
/// patches into feature space. Parameters are immutable after construction;
/// training never updates them (gradients flow to the extractor's input
/// only). Concurrent extraction is safe.
class FeatureExtractor {
 public:
  FeatureExtractor(std::string arch_id, nn::Sequential trunk,
                   std::array<double, 3> input_mean,
                   std::array<double, 3> input_std, int output_dim);

  const std::string& arch_id() const { return arch_id_; }
  int output_dim() const { return output_dim_; }
  const std::array<double, 3>& input_mean() const { return input_mean_; }
  const std::array<double, 3>& input_std() const { return input_std_; }

  /// Embed one 32x32x3 patch. Deterministic; ShapeError on wrong size.
  FeatureVector extract(const Image& patch) const;

  /// Batched embedding of (N,3,32,32) into (N,d,1,1). Pass a tape to enable
  /// backward_to_input afterwards.
  Tensor features(const Tensor& patches, nn::Tape* tape) const;

  /// Same, flattened into a FeatureBatch for the MMD estimator.
  FeatureBatch feature_batch(const Tensor& patches) const;

  /// Backpropagate d(loss)/d(features) to the extractor input. Never touches
  /// the frozen parameters (and consumes the tape from features()).
  Tensor backward_to_input(const Tensor& grad_features, nn::Tape& tape) const;

  /// FNV-1a over all parameter bytes; the frozen-ness witness.
  std::uint64_t checksum() const;

  std::vector<const nn::ParamTensor*> params() const {
    return std::as_const(trunk_).params();
  }

 private:
  std::string arch_id_;
  mutable nn::Sequential trunk_;  // backward never accumulates param grads
  std::array<double, 3> input_mean_;
  std::array<double, 3> input_std_;
  int output_dim_;
};

/// Mean squared feature distance between paired batches:
/// (1/n) sum_i ||F(decoded_i) - F(original_i)||^2. ShapeError when the
/// batches differ in size.
double perceptual_loss(const FeatureExtractor& fx,
                       const std::vector<Image>& originals,
                       const std::vector<Image>& decoded);

void save_extractor(const std::filesystem::path& path, const FeatureExtractor& fx);
FeatureExtractor load_extractor(const std::filesystem::path& path);

}  // namespace dic
