#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dic/classifier.hpp"
#include "dic/trainer.hpp"

namespace dic {

/// One row of the downstream-consistency tables.
struct EvalResult {
  std::string arm_name;  // original | baseline | dic_no_mmd | dic_mmd
  double top1 = 0.0;
  double top1_original = 0.0;
  double ms_ssim_mean = 0.0;
  double psnr_mean = 0.0;
  double bpp_mean = 0.0;
  int n_images = 0;
  std::uint64_t seed = 0;
};

struct EvalOptions {
  int steps = 1;
  int workers = 1;
  int msssim_scales = 0;  // 0 = largest count that fits the image size
};

/// Counters proving the evaluation went through the serialized bitstream
/// rather than a shortcut tensor path.
struct EvalTrace {
  std::size_t pack_calls = 0;
  std::size_t unpack_calls = 0;
};

/// One reconstruction plus the codes that determine its rate.
struct Reconstruction {
  Image image;
  std::vector<LatentCode> codes;
};

/// Pluggable codec path; must be safe to call concurrently. The registration
/// point for alternative evaluators (a detection pipeline would classify the
/// same reconstructions differently).
using ReconstructFn = std::function<Reconstruction(const Image&)>;

/// Harness core: classify reconstruct()'s output for every labeled image and
/// aggregate top-1/quality means. Shared by evaluate_downstream and tests.
EvalResult evaluate_with(const Classifier& classifier, const ReconstructFn& reconstruct,
                         const std::vector<LabeledImage>& images,
                         const EvalOptions& opts = {});

/// Compress -> pack -> unpack -> decode -> classify for every labeled image;
/// reports top-1 on reconstructions and originals plus mean MS-SSIM/PSNR/bpp.
/// Deterministic; per-image work may run on `workers` threads with
/// order-independent aggregation.
EvalResult evaluate_downstream(const Classifier& classifier, const CodecModel& codec,
                               const std::vector<LabeledImage>& images,
                               const EvalOptions& opts = {},
                               EvalTrace* trace = nullptr);

/// The three Table-2 arms. Configs differ from base_cfg only in (lambda,
/// gamma): baseline (0,0), dic_no_mmd (lambda*,0), dic_mmd (lambda*,gamma*).
struct AblationArm {
  std::string name;
  TrainConfig cfg;
  TrainResult trained;
  EvalResult result;
};

std::vector<AblationArm> ablation_table(const std::vector<Image>& train_patches,
                                        const TrainConfig& base_cfg,
                                        double lambda_star, double gamma_star,
                                        const FeatureExtractor& fx,
                                        const Classifier& classifier,
                                        const std::vector<LabeledImage>& eval_images,
                                        const EvalOptions& opts = {});

/// Everything the proxy experiment needs: splits, two frozen classifiers of
/// different architectures, and the perceptron truncated from classifier A.
struct ProxyTaskConfig {
  DatasetSpec dataset;
  int train_per_class = 100;
  ClassifierTrainConfig classifier_train;
  std::uint64_t classifier_seed_a = 11;
  std::uint64_t classifier_seed_b = 12;
};

struct ProxyTask {
  std::vector<LabeledImage> classifier_train;
  std::vector<LabeledImage> eval_images;
  std::vector<Image> codec_train_patches;
  Classifier classifier_a;
  Classifier classifier_b;
  FeatureExtractor fx;
  double top1_a_on_originals = 0.0;
  double top1_b_on_originals = 0.0;
};

ProxyTask build_proxy_task(const ProxyTaskConfig& cfg);

/// CSV / text-table rendering.
std::string eval_csv_header();
std::string eval_csv_row(const EvalResult& r);
std::string render_results_table(const std::vector<EvalResult>& rows,
                                 const std::optional<EvalResult>& second_classifier_rows
                                 = std::nullopt);
std::string render_sweep_table(const std::vector<SweepRow>& rows);
std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& r);

}  // namespace dic
