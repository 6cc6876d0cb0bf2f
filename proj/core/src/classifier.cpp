#include "dic/classifier.hpp"

#include <algorithm>
#include <utility>
#include <memory>

#include "dic/checkpoint.hpp"

#include "arch_registry.hpp"

namespace dic {

namespace detail {

TrunkSpec build_trunk(const std::string& arch_id, Rng& init) {
  using namespace nn;
  TrunkSpec spec;
  if (arch_id == "convnet_a") {
    spec.trunk.add(std::make_unique<Conv2d>("trunk.conv0", 3, 16, 3, 2, 1, init));
    spec.trunk.add(std::make_unique<ReLU>());
    spec.trunk.add(std::make_unique<Conv2d>("trunk.conv1", 16, 32, 3, 2, 1, init));
    spec.trunk.add(std::make_unique<ReLU>());
    spec.trunk.add(std::make_unique<Conv2d>("trunk.conv2", 32, 64, 3, 2, 1, init));
    spec.trunk.add(std::make_unique<ReLU>());
    spec.trunk.add(std::make_unique<Conv2d>("trunk.conv3", 64, 64, 3, 1, 1, init));
    spec.trunk.add(std::make_unique<ReLU>());
    spec.trunk.add(std::make_unique<GlobalAvgPool>());
    spec.feature_dim = 64;
  } else if (arch_id == "convnet_b") {
    spec.trunk.add(std::make_unique<Conv2d>("trunk.conv0", 3, 20, 5, 2, 2, init));
    spec.trunk.add(std::make_unique<ReLU>());
    spec.trunk.add(std::make_unique<Conv2d>("trunk.conv1", 20, 40, 5, 2, 2, init));
    spec.trunk.add(std::make_unique<ReLU>());
    spec.trunk.add(std::make_unique<GlobalAvgPool>());
    spec.feature_dim = 40;
  } else {
    throw ConfigError("unknown classifier architecture: " + arch_id);
  }
  return spec;
}

nn::Sequential build_head(int feature_dim, int num_classes, Rng& init) {
  nn::Sequential head;
  head.add(std::make_unique<nn::Linear>("head.fc", feature_dim, num_classes, init));
  return head;
}

void load_params_from_checkpoint(std::vector<nn::ParamTensor*> params,
                                 const Checkpoint& ckpt) {
  for (nn::ParamTensor* p : params) {
    const Checkpoint::Array& a = ckpt.array(p->name);
    if (a.dims != p->dims || a.data.size() != p->value.size())
      throw FormatError("checkpoint array " + p->name + " has wrong shape");
    p->value = a.data;
    p->zero_grad();
  }
}

}  // namespace detail

Classifier::Classifier(std::string arch_id, int num_classes, Rng& init)
    : arch_id_(std::move(arch_id)), num_classes_(num_classes) {
  if (num_classes_ < 2) throw ConfigError("classifier needs at least 2 classes");
  detail::TrunkSpec spec = detail::build_trunk(arch_id_, init);
  trunk_ = std::move(spec.trunk);
  feature_dim_ = spec.feature_dim;
  head_ = detail::build_head(feature_dim_, num_classes_, init);
  stats_.mean = {0.0, 0.0, 0.0};
  stats_.std = {1.0, 1.0, 1.0};
}

namespace {

Tensor normalize_batch(const Tensor& images, const ChannelStats& stats) {
  Tensor out = images;
  const std::size_t plane = static_cast<std::size_t>(out.h()) * out.w();
  for (int n = 0; n < out.n(); ++n) {
    double* p = out.sample(n);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < plane; ++i)
        p[c * plane + i] = (p[c * plane + i] - stats.mean[c]) / stats.std[c];
  }
  return out;
}

}  // namespace

Tensor Classifier::logits(const Tensor& images) const {
  Tensor x = normalize_batch(images, stats_);
  nn::Tape tape;
  Tensor f = trunk_.forward(x, tape, nn::Mode::Infer, nullptr);
  return head_.forward(f, tape, nn::Mode::Infer, nullptr);
}

int Classifier::predict(const Image& image) const {
  Tensor x(1, 3, image.height, image.width);
  std::copy(image.values.begin(), image.values.end(), x.data());
  Tensor l = logits(x);
  return nn::argmax_rows(l)[0];
}

Tensor Classifier::forward_train(const Tensor& images, nn::Tape& tape) const {
  Tensor x = normalize_batch(images, stats_);
  Tensor f = trunk_.forward(x, tape, nn::Mode::Train, nullptr);
  return head_.forward(f, tape, nn::Mode::Train, nullptr);
}

void Classifier::backward(const Tensor& grad_logits, nn::Tape& tape) {
  Tensor gf = head_.backward(grad_logits, tape);
  trunk_.backward(gf, tape);
}

std::vector<nn::ParamTensor*> Classifier::params() {
  std::vector<nn::ParamTensor*> out = trunk_.params();
  for (nn::ParamTensor* p : head_.params()) out.push_back(p);
  return out;
}

std::vector<const nn::ParamTensor*> Classifier::params() const {
  std::vector<const nn::ParamTensor*> out = std::as_const(trunk_).params();
  for (const nn::ParamTensor* p : std::as_const(head_).params()) out.push_back(p);
  return out;
}

std::uint64_t Classifier::checksum() const {
  return nn::params_checksum(params());
}

void train_classifier(Classifier& clf, const std::vector<LabeledImage>& train,
                      const ClassifierTrainConfig& cfg) {
  if (train.empty()) throw ConfigError("empty classifier training set");
  if (cfg.epochs <= 0 || cfg.batch_size <= 0 || !(cfg.learning_rate > 0.0))
    throw ConfigError("invalid classifier training config");

  clf.set_input_stats(compute_channel_stats(images_of(train)));

  nn::Adam opt(clf.params(), cfg.learning_rate);
  Rng shuffle_rng = Rng::with_salt(cfg.seed, 0x5e1ec7);
  std::vector<int> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  const int b = std::min<int>(cfg.batch_size, static_cast<int>(train.size()));
  const int batches = static_cast<int>(train.size()) / b;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (int bi = 0; bi < batches; ++bi) {
      const int h = train[order[static_cast<std::size_t>(bi) * b]].image.height;
      const int w = train[order[static_cast<std::size_t>(bi) * b]].image.width;
      Tensor batch(b, 3, h, w);
      std::vector<int> labels(b);
      for (int i = 0; i < b; ++i) {
        const LabeledImage& li = train[order[static_cast<std::size_t>(bi) * b + i]];
        if (li.image.height != h || li.image.width != w)
          throw ShapeError("classifier training images must share dimensions");
        std::copy(li.image.values.begin(), li.image.values.end(), batch.sample(i));
        labels[i] = li.label;
      }
      nn::Tape tape;
      Tensor logits = clf.forward_train(batch, tape);
      Tensor grad;
      double loss = nn::softmax_cross_entropy(logits, labels, &grad);
      if (!std::isfinite(loss)) throw NumericError("non-finite classifier loss");
      clf.backward(grad, tape);
      opt.step();
    }
  }
}

double top1_accuracy(const Classifier& clf, const std::vector<LabeledImage>& images) {
  if (images.empty()) throw ConfigError("empty evaluation set");
  std::size_t hits = 0;
  for (const LabeledImage& li : images)
    if (clf.predict(li.image) == li.label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(images.size());
}

FeatureExtractor truncate_to_extractor(const Classifier& clf) {
  Rng scratch(0);
  detail::TrunkSpec spec = detail::build_trunk(clf.arch_id(), scratch);
  std::vector<nn::ParamTensor*> dst = spec.trunk.params();
  std::vector<const nn::ParamTensor*> src = clf.trunk().params();
  if (dst.size() != src.size()) throw ConfigError("trunk layout mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i]->value = src[i]->value;
    dst[i]->zero_grad();
  }
  return FeatureExtractor(clf.arch_id(), std::move(spec.trunk),
                          clf.input_stats().mean, clf.input_stats().std,
                          spec.feature_dim);
}

void save_classifier(const std::filesystem::path& path, const Classifier& clf) {
  Checkpoint ckpt;
  ckpt.kind = "classifier";
  ckpt.meta["arch"] = clf.arch_id();
  ckpt.meta["classes"] = std::to_string(clf.num_classes());
  ckpt.meta["feature_dim"] = std::to_string(clf.feature_dim());
  const ChannelStats& s = clf.input_stats();
  ckpt.arrays.push_back({"input_mean", {3}, {s.mean.begin(), s.mean.end()}});
  ckpt.arrays.push_back({"input_std", {3}, {s.std.begin(), s.std.end()}});
  for (const nn::ParamTensor* p : clf.params())
    ckpt.arrays.push_back({p->name, p->dims, p->value});
  save_checkpoint(path, ckpt);
}

Classifier load_classifier(const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.kind != "classifier")
    throw FormatError(path.string() + ": expected a classifier checkpoint, got " + ckpt.kind);
  Rng scratch(0);
  Classifier clf(ckpt.meta_at("arch"), ckpt.meta_int("classes"), scratch);
  detail::load_params_from_checkpoint(clf.params(), ckpt);
  const auto& mean = ckpt.array("input_mean").data;
  const auto& stdev = ckpt.array("input_std").data;
  if (mean.size() != 3 || stdev.size() != 3)
    throw FormatError(path.string() + ": bad normalization arrays");
  ChannelStats stats;
  stats.mean = {mean[0], mean[1], mean[2]};
  stats.std = {stdev[0], stdev[1], stdev[2]};
  clf.set_input_stats(stats);
  return clf;
}

}  // namespace dic
