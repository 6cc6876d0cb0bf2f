#include "dic/perceptual.hpp"

#include <algorithm>
#include <utility>

#include "dic/checkpoint.hpp"

#include "arch_registry.hpp"

namespace dic {

FeatureExtractor::FeatureExtractor(std::string arch_id, nn::Sequential trunk,
                                   std::array<double, 3> input_mean,
                                   std::array<double, 3> input_std, int output_dim)
    : arch_id_(std::move(arch_id)), trunk_(std::move(trunk)),
      input_mean_(input_mean), input_std_(input_std), output_dim_(output_dim) {
  for (double s : input_std_)
    if (!(s > 0.0)) throw ConfigError("extractor input std must be positive");
}

FeatureVector FeatureExtractor::extract(const Image& patch) const {
  if (patch.height != kPatchSize || patch.width != kPatchSize)
    throw ShapeError("extractor patches must be 32x32x3");
  Tensor x(1, 3, kPatchSize, kPatchSize);
  std::copy(patch.values.begin(), patch.values.end(), x.data());
  Tensor f = features(x, nullptr);
  return FeatureVector(f.data(), f.data() + output_dim_);
}

Tensor FeatureExtractor::features(const Tensor& patches, nn::Tape* tape) const {
  if (patches.c() != 3 || patches.h() != kPatchSize || patches.w() != kPatchSize)
    throw ShapeError("extractor batch must be Nx3x32x32");
  Tensor normalized = patches;
  for (int n = 0; n < normalized.n(); ++n) {
    double* p = normalized.sample(n);
    const std::size_t plane = static_cast<std::size_t>(kPatchSize) * kPatchSize;
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < plane; ++i)
        p[c * plane + i] = (p[c * plane + i] - input_mean_[c]) / input_std_[c];
  }
  if (tape) return trunk_.forward(normalized, *tape, nn::Mode::Infer, nullptr);
  nn::Tape scratch;
  return trunk_.forward(normalized, scratch, nn::Mode::Infer, nullptr);
}

FeatureBatch FeatureExtractor::feature_batch(const Tensor& patches) const {
  Tensor f = features(patches, nullptr);
  FeatureBatch out(f.n(), output_dim_);
  std::copy(f.data(), f.data() + f.size(), out.data.begin());
  return out;
}

Tensor FeatureExtractor::backward_to_input(const Tensor& grad_features,
                                           nn::Tape& tape) const {
  Tensor gx = trunk_.backward(grad_features, tape, /*accumulate_param_grads=*/false);
  // Undo the input normalization's scale.
  const std::size_t plane = static_cast<std::size_t>(gx.h()) * gx.w();
  for (int n = 0; n < gx.n(); ++n) {
    double* p = gx.sample(n);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < plane; ++i) p[c * plane + i] /= input_std_[c];
  }
  return gx;
}

std::uint64_t FeatureExtractor::checksum() const {
  return nn::params_checksum(std::as_const(trunk_).params());
}

double perceptual_loss(const FeatureExtractor& fx,
                       const std::vector<Image>& originals,
                       const std::vector<Image>& decoded) {
  if (originals.size() != decoded.size() || originals.empty())
    throw ShapeError("perceptual_loss needs equal-size non-empty batches");
  double acc = 0.0;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    FeatureVector a = fx.extract(originals[i]);
    FeatureVector b = fx.extract(decoded[i]);
    for (std::size_t j = 0; j < a.size(); ++j) {
      double d = b[j] - a[j];
      acc += d * d;
    }
  }
  return acc / static_cast<double>(originals.size());
}

void save_extractor(const std::filesystem::path& path, const FeatureExtractor& fx) {
  Checkpoint ckpt;
  ckpt.kind = "extractor";
  ckpt.meta["arch"] = fx.arch_id();
  ckpt.meta["output_dim"] = std::to_string(fx.output_dim());
  Checkpoint::Array mean{"input_mean", {3}, {fx.input_mean().begin(), fx.input_mean().end()}};
  Checkpoint::Array stdev{"input_std", {3}, {fx.input_std().begin(), fx.input_std().end()}};
  ckpt.arrays.push_back(std::move(mean));
  ckpt.arrays.push_back(std::move(stdev));
  for (const nn::ParamTensor* p : fx.params())
    ckpt.arrays.push_back({p->name, p->dims, p->value});
  save_checkpoint(path, ckpt);
}

FeatureExtractor load_extractor(const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.kind != "extractor")
    throw FormatError(path.string() + ": expected an extractor checkpoint, got " + ckpt.kind);
  Rng scratch(0);
  detail::TrunkSpec spec = detail::build_trunk(ckpt.meta_at("arch"), scratch);
  detail::load_params_from_checkpoint(spec.trunk.params(), ckpt);
  const auto& mean = ckpt.array("input_mean").data;
  const auto& stdev = ckpt.array("input_std").data;
  if (mean.size() != 3 || stdev.size() != 3)
    throw FormatError(path.string() + ": bad normalization arrays");
  int dim = ckpt.meta_int("output_dim");
  if (dim != spec.feature_dim)
    throw FormatError(path.string() + ": output_dim disagrees with architecture");
  return FeatureExtractor(ckpt.meta_at("arch"), std::move(spec.trunk),
                          {mean[0], mean[1], mean[2]}, {stdev[0], stdev[1], stdev[2]},
                          dim);
}

}  // namespace dic
