#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dic/classifier.hpp"
#include "dic/codec.hpp"
#include "dic/dataset.hpp"
#include "dic/mmd.hpp"
#include "dic/perceptual.hpp"

namespace dic {

/// How the MMD kernel mixture is built for each batch.
struct KernelSettings {
  enum class Kind { MedianLadder, Explicit };
  Kind kind = Kind::MedianLadder;
  int count = 8;                   // m; the paper's multi-kernel width
  std::vector<double> bandwidths;  // Explicit mode only

  /// MedianLadder derives the reference scale from the batch's
  /// original-image features (a constant w.r.t. the codec parameters).
  KernelMixture resolve(const FeatureBatch& x_features) const;
};

struct TrainConfig {
  double lambda = 2e-3;  // perceptual weight; paper 1e-6 (see README on rescale)
  double gamma = 5e-3;   // MMD weight; paper 1
  int batch_size = 64;   // paper 192
  int epochs = 50;       // paper 200
  int steps = 1;         // residual passes per patch (1 <=> 0.5 bpp)
  double learning_rate = 1e-3;
  double lr_min = 1e-5;  // cosine floor
  std::uint64_t seed = 1;
  KernelSettings kernel;
  CodecArchitecture arch;

  void validate() const;
};

/// Names of fields that differ between two configs; the controlled-experiment
/// witness for the ablation arms.
std::vector<std::string> config_diff(const TrainConfig& a, const TrainConfig& b);

/// Per-batch loss record. total recombines as
/// recon + lambda*perceptual + gamma*mmd (checked to 1e-9 relative in tests).
struct LossBreakdown {
  double recon = 0.0;
  double perceptual = 0.0;
  double mmd = 0.0;
  double total = 0.0;
};

/// Composite objective on one batch: pixel reconstruction (mean per pixel),
/// frozen-feature distance, and batch MMD. Zeroes and then fills the model's
/// parameter gradients; gradients flow through decoder, straight-through
/// binarizer and encoder, never into fx. `cached_x_features` skips the
/// original-side extractor pass (features of originals are constants).
/// ConfigError when gamma > 0 and the batch has fewer than 2 samples;
/// NumericError naming the first non-finite term.
LossBreakdown composite_loss(CodecModel& model, const FeatureExtractor& fx,
                             const Tensor& batch_x, const TrainConfig& cfg,
                             nn::Mode mode, Rng* binarize_rng,
                             const FeatureBatch* cached_x_features = nullptr);

struct EpochStats {
  int epoch = 0;
  double recon = 0.0, perceptual = 0.0, mmd = 0.0, total = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  CodecModel model;
  std::vector<EpochStats> log;
};

/// Mini-batch training of the codec against a frozen perceptron. Deterministic
/// given (seed, config, data); leftover samples that do not fill a batch are
/// dropped each epoch. ConfigError on an empty dataset.
TrainResult train(const std::vector<Image>& patches, const TrainConfig& cfg,
                  const FeatureExtractor& fx);

/// Epoch log CSV: epoch, recon, perceptual, mmd, total, wall_seconds.
/// wall_seconds is timing, so this file is the run log, not a reproducible
/// artifact.
void write_epoch_log_csv(const std::filesystem::path& path,
                         const std::vector<EpochStats>& log);

struct SweepRow {
  double lambda = 0.0;
  double top1 = 0.0;
  double ms_ssim = 0.0;
  double psnr = 0.0;
};

/// One train+eval run per lambda, all other settings from base_cfg. Rows are
/// independent of execution order. Implemented in the evaluation harness.
std::vector<SweepRow> lambda_sweep(const std::vector<Image>& train_patches,
                                   const TrainConfig& base_cfg,
                                   const std::vector<double>& lambdas,
                                   const FeatureExtractor& fx,
                                   const Classifier& classifier,
                                   const std::vector<LabeledImage>& eval_images);

void save_codec(const std::filesystem::path& path, const CodecModel& model);
CodecModel load_codec(const std::filesystem::path& path);

}  // namespace dic
