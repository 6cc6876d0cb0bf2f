#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "dic/classifier.hpp"
#include "dic/dataset.hpp"

using namespace dic;

TEST_CASE("texture dataset is deterministic and well-formed") {
  DatasetSpec spec;
  spec.images_per_class = 6;
  std::vector<LabeledImage> a = make_texture_dataset(spec);
  std::vector<LabeledImage> b = make_texture_dataset(spec);
  REQUIRE(a.size() == 60);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].image.values == b[i].image.values);
    CHECK_NOTHROW(check_unit_range(a[i].image));
    CHECK(a[i].image.height == 32);
  }

  // different seed, different pixels
  spec.seed = 8;
  std::vector<LabeledImage> c = make_texture_dataset(spec);
  CHECK(c[0].image.values != a[0].image.values);
}

TEST_CASE("every class is populated and named") {
  DatasetSpec spec;
  spec.images_per_class = 3;
  auto data = make_texture_dataset(spec);
  std::set<int> labels;
  for (const auto& li : data) labels.insert(li.label);
  CHECK(labels.size() == kTextureClasses);
  for (int l = 0; l < kTextureClasses; ++l)
    CHECK(texture_class_name(l) != nullptr);
  CHECK_THROWS_AS(texture_class_name(10), ConfigError);
}

TEST_CASE("split_dataset partitions per class") {
  DatasetSpec spec;
  spec.images_per_class = 5;
  auto data = make_texture_dataset(spec);
  DatasetSplit split = split_dataset(data, 3);
  CHECK(split.train.size() == 30);
  CHECK(split.held_out.size() == 20);
  std::vector<int> train_counts(kTextureClasses, 0);
  for (const auto& li : split.train) ++train_counts[li.label];
  for (int c : train_counts) CHECK(c == 3);
}

TEST_CASE("channel stats are sane on a known image set") {
  Image half(8, 8, 0.5);
  ChannelStats stats = compute_channel_stats({half});
  for (int c = 0; c < 3; ++c) {
    CHECK(stats.mean[c] == doctest::Approx(0.5));
    CHECK(stats.std[c] == doctest::Approx(1e-6));  // constant image hits the floor
  }
}

TEST_CASE("classifier learns the texture task well above chance") {
  DatasetSpec spec;
  spec.images_per_class = 40;
  auto data = make_texture_dataset(spec);
  DatasetSplit split = split_dataset(data, 30);

  Rng init(3);
  Classifier clf("convnet_a", kTextureClasses, init);
  ClassifierTrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = 3;
  train_classifier(clf, split.train, cfg);

  double train_acc = top1_accuracy(clf, split.train);
  double held_acc = top1_accuracy(clf, split.held_out);
  CHECK(train_acc > 0.6);
  CHECK(held_acc > 0.5);  // chance is 0.1
}

TEST_CASE("classifier training is deterministic") {
  DatasetSpec spec;
  spec.images_per_class = 10;
  auto data = make_texture_dataset(spec);

  auto run = [&]() {
    Rng init(17);
    Classifier clf("convnet_b", kTextureClasses, init);
    ClassifierTrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 17;
    train_classifier(clf, data, cfg);
    return clf.checksum();
  };
  CHECK(run() == run());
}

TEST_CASE("the two architectures really differ") {
  Rng init(1);
  Classifier a("convnet_a", kTextureClasses, init);
  Classifier b("convnet_b", kTextureClasses, init);
  CHECK(a.arch_id() != b.arch_id());
  CHECK(a.feature_dim() != b.feature_dim());
  CHECK_THROWS_AS(Classifier("convnet_z", 10, init), ConfigError);
}

TEST_CASE("truncate_to_extractor reuses the trunk weights and stats") {
  DatasetSpec spec;
  spec.images_per_class = 8;
  auto data = make_texture_dataset(spec);
  Rng init(5);
  Classifier clf("convnet_a", kTextureClasses, init);
  ClassifierTrainConfig cfg;
  cfg.epochs = 1;
  train_classifier(clf, data, cfg);

  FeatureExtractor fx = truncate_to_extractor(clf);
  CHECK(fx.output_dim() == clf.feature_dim());
  CHECK(fx.input_mean() == clf.input_stats().mean);

  // the extractor must reproduce the classifier's own trunk features
  Tensor batch(1, 3, 32, 32);
  std::copy(data[0].image.values.begin(), data[0].image.values.end(), batch.data());
  FeatureVector via_fx = fx.extract(data[0].image);
  // classify through the trunk by hand
  Tensor logits = clf.logits(batch);
  CHECK(via_fx.size() == static_cast<std::size_t>(clf.feature_dim()));
  // spot check: rebuilt trunk weights are byte-identical
  auto src = clf.params();
  auto dst = fx.params();
  for (std::size_t i = 0; i < dst.size(); ++i)
    CHECK(dst[i]->value == src[i]->value);
}

TEST_CASE("classifier checkpoint round-trips predictions") {
  DatasetSpec spec;
  spec.images_per_class = 8;
  auto data = make_texture_dataset(spec);
  Rng init(7);
  Classifier clf("convnet_b", kTextureClasses, init);
  ClassifierTrainConfig cfg;
  cfg.epochs = 1;
  train_classifier(clf, data, cfg);

  auto dir = std::filesystem::temp_directory_path() / "dic_test_classifier";
  std::filesystem::create_directories(dir);
  auto path = dir / "clf.ckpt";
  save_classifier(path, clf);
  Classifier back = load_classifier(path);
  CHECK(back.checksum() == clf.checksum());
  for (int i = 0; i < 10; ++i)
    CHECK(back.predict(data[i].image) == clf.predict(data[i].image));
}
