#include "dic/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include "dic/checkpoint.hpp"
#include "dic/numfmt.hpp"

#include "arch_registry.hpp"

namespace dic {

KernelMixture KernelSettings::resolve(const FeatureBatch& x_features) const {
  switch (kind) {
    case Kind::MedianLadder:
      return KernelMixture::ladder(median_pairwise_distance(x_features), count);
    case Kind::Explicit: {
      if (bandwidths.empty())
        throw ConfigError("explicit kernel mode needs a bandwidth list");
      KernelMixture km;
      km.bandwidths = bandwidths;
      km.weights.assign(bandwidths.size(), 1.0 / bandwidths.size());
      km.validate();
      return km;
    }
  }
  throw ConfigError("unknown kernel mode");
}

void TrainConfig::validate() const {
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (MMD needs n >= 2)");
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (lr_min < 0.0 || lr_min > learning_rate)
    throw ConfigError("lr_min must lie in [0, learning_rate]");
  if (steps < 1 || steps > arch.max_steps)
    throw ConfigError("steps must lie in [1, max_steps]");
  if (kernel.count < 1) throw ConfigError("kernel count must be >= 1");
  arch.validate();
}

std::vector<std::string> config_diff(const TrainConfig& a, const TrainConfig& b) {
  std::vector<std::string> diff;
  if (a.lambda != b.lambda) diff.push_back("lambda");
  if (a.gamma != b.gamma) diff.push_back("gamma");
  if (a.batch_size != b.batch_size) diff.push_back("batch_size");
  if (a.epochs != b.epochs) diff.push_back("epochs");
  if (a.steps != b.steps) diff.push_back("steps");
  if (a.learning_rate != b.learning_rate) diff.push_back("learning_rate");
  if (a.lr_min != b.lr_min) diff.push_back("lr_min");
  if (a.seed != b.seed) diff.push_back("seed");
  if (a.kernel.kind != b.kernel.kind || a.kernel.count != b.kernel.count ||
      a.kernel.bandwidths != b.kernel.bandwidths)
    diff.push_back("kernel");
  if (!(a.arch == b.arch)) diff.push_back("arch");
  return diff;
}

namespace {

void require_finite(double v, const char* term) {
  if (!std::isfinite(v))
    throw NumericError(std::string("non-finite ") + term + " term in composite loss");
}

}  // namespace

LossBreakdown composite_loss(CodecModel& model, const FeatureExtractor& fx,
                             const Tensor& batch_x, const TrainConfig& cfg,
                             nn::Mode mode, Rng* binarize_rng,
                             const FeatureBatch* cached_x_features) {
  const int n = batch_x.n();
  if (n < 2 && cfg.gamma > 0.0)
    throw ConfigError("MMD needs a batch of at least 2 images");

  for (nn::ParamTensor* p : model.params()) p->zero_grad();

  CodecForward fwd = codec_forward(model, batch_x, cfg.steps, mode, binarize_rng);
  const Tensor& y = fwd.output;

  // Pixel term: squared error averaged over images and pixels.
  const double pixel_norm = 1.0 / (static_cast<double>(n) * 3 * kPatchSize * kPatchSize);
  double recon = 0.0;
  Tensor grad_y = Tensor::zeros_like(y);
  for (std::size_t i = 0; i < y.size(); ++i) {
    double d = y.raw()[i] - batch_x.raw()[i];
    recon += d * d;
    grad_y.raw()[i] = 2.0 * pixel_norm * d;
  }
  recon *= pixel_norm;
  require_finite(recon, "recon");

  LossBreakdown out;
  out.recon = recon;

  const bool need_features = cfg.lambda != 0.0 || cfg.gamma != 0.0;
  if (need_features) {
    FeatureBatch xf;
    if (cached_x_features) {
      xf = *cached_x_features;
      if (xf.count() != n) throw ShapeError("cached feature batch size mismatch");
    } else {
      xf = fx.feature_batch(batch_x);
    }

    nn::Tape fx_tape;
    Tensor yfeat = fx.features(y, &fx_tape);
    const int d = fx.output_dim();
    FeatureBatch yf(n, d);
    std::copy(yfeat.data(), yfeat.data() + yfeat.size(), yf.data.begin());

    // Perceptual term and its gradient seed in feature space.
    Tensor grad_feat(n, d, 1, 1);
    if (cfg.lambda != 0.0) {
      double perc = 0.0;
      for (int i = 0; i < n; ++i) {
        const double* a = xf.row(i).data();
        const double* b = yf.row(i).data();
        double* g = grad_feat.sample(i);
        for (int j = 0; j < d; ++j) {
          double diff = b[j] - a[j];
          perc += diff * diff;
          g[j] = cfg.lambda * 2.0 * diff / n;
        }
      }
      out.perceptual = perc / n;
      require_finite(out.perceptual, "perceptual");
    }

    if (cfg.gamma != 0.0) {
      KernelMixture km = cfg.kernel.resolve(xf);
      out.mmd = mmd_squared(xf, yf, km);
      require_finite(out.mmd, "mmd");
      FeatureBatch mg = mmd_squared_grad_y(xf, yf, km);
      for (int i = 0; i < n; ++i) {
        const double* g = mg.row(i).data();
        double* dst = grad_feat.sample(i);
        for (int j = 0; j < d; ++j) dst[j] += cfg.gamma * g[j];
      }
    }

    Tensor grad_from_features = fx.backward_to_input(grad_feat, fx_tape);
    for (std::size_t i = 0; i < grad_y.size(); ++i)
      grad_y.raw()[i] += grad_from_features.raw()[i];
  }

  out.total = out.recon + cfg.lambda * out.perceptual + cfg.gamma * out.mmd;
  require_finite(out.total, "total");

  codec_backward(model, grad_y, fwd);
  return out;
}

TrainResult train(const std::vector<Image>& patches, const TrainConfig& cfg,
                  const FeatureExtractor& fx) {
  cfg.validate();
  if (patches.empty()) throw ConfigError("empty training dataset");
  for (const Image& p : patches)
    if (p.height != kPatchSize || p.width != kPatchSize)
      throw ShapeError("training patches must be 32x32");

  Rng init_rng = Rng::with_salt(cfg.seed, 0x1a17);
  Rng shuffle_rng = Rng::with_salt(cfg.seed, 0x5487);
  Rng binarize_rng = Rng::with_salt(cfg.seed, 0xb1a2);

  TrainResult result{CodecModel(cfg.arch, init_rng), {}};
  CodecModel& model = result.model;

  const int n = static_cast<int>(patches.size());
  const int b = std::min(cfg.batch_size, n);
  if (b < 2 && cfg.gamma > 0.0)
    throw ConfigError("MMD needs at least 2 training patches per batch");
  const int batches = n / b;
  const long total_steps = static_cast<long>(batches) * cfg.epochs;

  // Original-image features are constants of the run: compute once.
  const bool need_features = cfg.lambda != 0.0 || cfg.gamma != 0.0;
  FeatureBatch all_features;
  if (need_features) {
    all_features = FeatureBatch(n, fx.output_dim());
    constexpr int kChunk = 256;
    for (int at = 0; at < n; at += kChunk) {
      int m = std::min(kChunk, n - at);
      Tensor chunk(m, 3, kPatchSize, kPatchSize);
      for (int i = 0; i < m; ++i)
        std::copy(patches[at + i].values.begin(), patches[at + i].values.end(),
                  chunk.sample(i));
      FeatureBatch f = fx.feature_batch(chunk);
      std::copy(f.data.begin(), f.data.end(),
                all_features.data.begin() + static_cast<std::size_t>(at) * fx.output_dim());
    }
  }

  nn::Adam opt(model.params(), cfg.learning_rate);
  std::vector<int> order(patches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  long step_index = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    EpochStats stats;
    stats.epoch = epoch;
    for (int bi = 0; bi < batches; ++bi) {
      Tensor batch(b, 3, kPatchSize, kPatchSize);
      FeatureBatch feat(b, need_features ? fx.output_dim() : 1);
      for (int i = 0; i < b; ++i) {
        int idx = order[static_cast<std::size_t>(bi) * b + i];
        std::copy(patches[idx].values.begin(), patches[idx].values.end(),
                  batch.sample(i));
        if (need_features)
          std::copy(all_features.row(idx).begin(), all_features.row(idx).end(),
                    feat.row(i).begin());
      }

      // Cosine-decayed learning rate over the whole run.
      double progress = total_steps > 1
                            ? static_cast<double>(step_index) / (total_steps - 1)
                            : 0.0;
      opt.set_lr(cfg.lr_min + 0.5 * (cfg.learning_rate - cfg.lr_min) *
                                  (1.0 + std::cos(std::numbers::pi * progress)));

      LossBreakdown lb = composite_loss(model, fx, batch, cfg, nn::Mode::Train,
                                        &binarize_rng,
                                        need_features ? &feat : nullptr);
      opt.step();
      ++step_index;

      stats.recon += lb.recon;
      stats.perceptual += lb.perceptual;
      stats.mmd += lb.mmd;
      stats.total += lb.total;
    }
    stats.recon /= batches;
    stats.perceptual /= batches;
    stats.mmd /= batches;
    stats.total /= batches;
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(stats);
  }

  model.check_finite();
  return result;
}

void write_epoch_log_csv(const std::filesystem::path& path,
                         const std::vector<EpochStats>& log) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "epoch,recon,perceptual,mmd,total,wall_seconds\n";
  for (const EpochStats& e : log)
    out << e.epoch << ',' << fmt_double(e.recon) << ',' << fmt_double(e.perceptual)
        << ',' << fmt_double(e.mmd) << ',' << fmt_double(e.total) << ','
        << fmt_double(e.wall_seconds, 4) << '\n';
}

void save_codec(const std::filesystem::path& path, const CodecModel& model) {
  Checkpoint ckpt;
  ckpt.kind = "codec";
  const CodecArchitecture& a = model.arch();
  ckpt.meta["enc_ch1"] = std::to_string(a.enc_ch1);
  ckpt.meta["enc_ch2"] = std::to_string(a.enc_ch2);
  ckpt.meta["code_channels"] = std::to_string(a.code_channels);
  ckpt.meta["max_steps"] = std::to_string(a.max_steps);
  for (const nn::ParamTensor* p : model.params())
    ckpt.arrays.push_back({p->name, p->dims, p->value});
  save_checkpoint(path, ckpt);
}

CodecModel load_codec(const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.kind != "codec")
    throw FormatError(path.string() + ": expected a codec checkpoint, got " + ckpt.kind);
  CodecArchitecture arch;
  arch.enc_ch1 = ckpt.meta_int("enc_ch1");
  arch.enc_ch2 = ckpt.meta_int("enc_ch2");
  arch.code_channels = ckpt.meta_int("code_channels");
  arch.max_steps = ckpt.meta_int("max_steps");
  Rng scratch(0);
  CodecModel model(arch, scratch);
  detail::load_params_from_checkpoint(model.params(), ckpt);
  return model;
}

}  // namespace dic
