#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dic/dataset.hpp"
#include "dic/nn.hpp"
#include "dic/perceptual.hpp"

namespace dic {

/// A small frozen-after-training conv classifier over the texture classes.
/// Two architectures ship: "convnet_a" (4 conv layers, 64-d features; its
/// truncation is the default perceptron) and "convnet_b" (2 conv layers with
/// 5x5 kernels, 40-d features; the cross-architecture transfer check).
class Classifier {
 public:
  Classifier(std::string arch_id, int num_classes, Rng& init);

  const std::string& arch_id() const { return arch_id_; }
  int num_classes() const { return num_classes_; }
  int feature_dim() const { return feature_dim_; }

  void set_input_stats(const ChannelStats& stats) { stats_ = stats; }
  const ChannelStats& input_stats() const { return stats_; }

  /// Inference logits for an NCHW batch of any spatial size.
  Tensor logits(const Tensor& images) const;
  int predict(const Image& image) const;

  /// Training-path forward/backward (softmax cross-entropy handled by
  /// train_classifier).
  Tensor forward_train(const Tensor& images, nn::Tape& tape) const;
  void backward(const Tensor& grad_logits, nn::Tape& tape);

  std::vector<nn::ParamTensor*> params();
  std::vector<const nn::ParamTensor*> params() const;
  std::uint64_t checksum() const;

  nn::Sequential& trunk() { return trunk_; }
  const nn::Sequential& trunk() const { return trunk_; }

 private:
  std::string arch_id_;
  int num_classes_;
  int feature_dim_;
  mutable nn::Sequential trunk_;
  mutable nn::Sequential head_;
  ChannelStats stats_;
  friend FeatureExtractor truncate_to_extractor(const Classifier&);
};

struct ClassifierTrainConfig {
  int epochs = 10;
  int batch_size = 64;
  double learning_rate = 2e-3;
  std::uint64_t seed = 11;
};

/// Softmax cross-entropy training on labeled images. Computes and stores
/// per-channel input stats from the training set before the first epoch.
void train_classifier(Classifier& clf, const std::vector<LabeledImage>& train,
                      const ClassifierTrainConfig& cfg);

double top1_accuracy(const Classifier& clf, const std::vector<LabeledImage>& images);

/// Drop the classification head and reuse the trained trunk (deep copy) as
/// the frozen perceptron, inheriting the input normalization.
FeatureExtractor truncate_to_extractor(const Classifier& clf);

void save_classifier(const std::filesystem::path& path, const Classifier& clf);
Classifier load_classifier(const std::filesystem::path& path);

}  // namespace dic
