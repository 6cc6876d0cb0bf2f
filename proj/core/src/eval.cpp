#include "dic/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "dic/bitstream.hpp"
#include "dic/metrics.hpp"
#include "dic/numfmt.hpp"

namespace dic {

namespace {

struct PerImage {
  bool top1_hit = false;
  bool top1_original_hit = false;
  double ms_ssim = 0.0;
  double psnr = 0.0;
  double bpp = 0.0;
};

// The real storage path: compress -> pack -> unpack -> decode.
PerImage eval_one(const Classifier& classifier, const CodecModel& codec,
                  const LabeledImage& li, const EvalOptions& opts) {
  const Image& original = li.image;
  Image padded = pad_to_stride(original);
  std::vector<LatentCode> codes = compress_image(codec, padded, opts.steps);
  std::vector<std::uint8_t> bytes =
      pack(codes, original.height, original.width, padded.height, padded.width);
  CompressedFile file = unpack(bytes);
  Image recon_padded = decompress_image(codec, file.codes, file.padded_h, file.padded_w);
  Image recon = crop(recon_padded, file.true_h, file.true_w);

  PerImage r;
  r.top1_hit = classifier.predict(recon) == li.label;
  r.top1_original_hit = classifier.predict(original) == li.label;
  int scales = opts.msssim_scales > 0
                   ? opts.msssim_scales
                   : max_msssim_scales(original.height, original.width);
  r.ms_ssim = ms_ssim(original, recon, scales);
  r.psnr = psnr(original, recon);
  r.bpp = bpp(file.codes, file.true_h, file.true_w);
  return r;
}

}  // namespace

EvalResult evaluate_downstream(const Classifier& classifier, const CodecModel& codec,
                               const std::vector<LabeledImage>& images,
                               const EvalOptions& opts, EvalTrace* trace) {
  if (images.empty()) throw ConfigError("evaluation set is empty");
  if (opts.workers < 1) throw ConfigError("workers must be >= 1");

  std::vector<PerImage> per(images.size());
  if (opts.workers == 1) {
    for (std::size_t i = 0; i < images.size(); ++i)
      per[i] = eval_one(classifier, codec, images[i], opts);
  } else {
    // Models are read-only here; images are partitioned by index and each
    // slot is written by exactly one worker, so results do not depend on the
    // worker count.
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= images.size()) break;
        per[i] = eval_one(classifier, codec, images[i], opts);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < opts.workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  if (trace) {
    trace->pack_calls += images.size();
    trace->unpack_calls += images.size();
  }

  EvalResult result;
  result.n_images = static_cast<int>(images.size());
  std::size_t hits = 0, orig_hits = 0;
  for (const PerImage& p : per) {
    hits += p.top1_hit ? 1 : 0;
    orig_hits += p.top1_original_hit ? 1 : 0;
    result.ms_ssim_mean += p.ms_ssim;
    result.psnr_mean += p.psnr;
    result.bpp_mean += p.bpp;
  }
  result.top1 = static_cast<double>(hits) / images.size();
  result.top1_original = static_cast<double>(orig_hits) / images.size();
  result.ms_ssim_mean /= images.size();
  result.psnr_mean /= images.size();
  result.bpp_mean /= images.size();
  return result;
}

std::vector<AblationArm> ablation_table(const std::vector<Image>& train_patches,
                                        const TrainConfig& base_cfg,
                                        double lambda_star, double gamma_star,
                                        const FeatureExtractor& fx,
                                        const Classifier& classifier,
                                        const std::vector<LabeledImage>& eval_images,
                                        const EvalOptions& opts) {
  struct ArmSpec {
    const char* name;
    double lambda, gamma;
  };
  const ArmSpec specs[3] = {{"baseline", 0.0, 0.0},
                            {"dic_no_mmd", lambda_star, 0.0},
                            {"dic_mmd", lambda_star, gamma_star}};

  std::vector<AblationArm> arms;
  for (const ArmSpec& s : specs) {
    TrainConfig cfg = base_cfg;
    cfg.lambda = s.lambda;
    cfg.gamma = s.gamma;
    for (const std::string& field : config_diff(base_cfg, cfg))
      if (field != "lambda" && field != "gamma")
        throw ConfigError("ablation arms may differ only in lambda/gamma");
    TrainResult trained = train(train_patches, cfg, fx);
    EvalResult result = evaluate_downstream(classifier, trained.model, eval_images, opts);
    result.arm_name = s.name;
    result.seed = cfg.seed;
    arms.push_back(AblationArm{s.name, cfg, std::move(trained), std::move(result)});
  }
  return arms;
}

ProxyTask build_proxy_task(const ProxyTaskConfig& cfg) {
  std::vector<LabeledImage> all = make_texture_dataset(cfg.dataset);
  DatasetSplit split = split_dataset(all, cfg.train_per_class);
  if (split.train.empty() || split.held_out.empty())
    throw ConfigError("dataset split leaves an empty train or eval set");

  Rng init_a = Rng::with_salt(cfg.classifier_seed_a, 0xC1A);
  Rng init_b = Rng::with_salt(cfg.classifier_seed_b, 0xC1B);
  Classifier a("convnet_a", kTextureClasses, init_a);
  Classifier b("convnet_b", kTextureClasses, init_b);

  ClassifierTrainConfig ct_a = cfg.classifier_train;
  ct_a.seed = cfg.classifier_seed_a;
  train_classifier(a, split.train, ct_a);
  ClassifierTrainConfig ct_b = cfg.classifier_train;
  ct_b.seed = cfg.classifier_seed_b;
  train_classifier(b, split.train, ct_b);

  FeatureExtractor fx = truncate_to_extractor(a);

  ProxyTask task{std::move(split.train), std::move(split.held_out),
                 {},        std::move(a),
                 std::move(b),           std::move(fx)};
  task.codec_train_patches = images_of(task.classifier_train);
  task.top1_a_on_originals = top1_accuracy(task.classifier_a, task.eval_images);
  task.top1_b_on_originals = top1_accuracy(task.classifier_b, task.eval_images);
  return task;
}

std::vector<SweepRow> lambda_sweep(const std::vector<Image>& train_patches,
                                   const TrainConfig& base_cfg,
                                   const std::vector<double>& lambdas,
                                   const FeatureExtractor& fx,
                                   const Classifier& classifier,
                                   const std::vector<LabeledImage>& eval_images) {
  if (lambdas.empty()) throw ConfigError("sweep needs at least one lambda");
  std::vector<SweepRow> rows;
  for (double l : lambdas) {
    TrainConfig cfg = base_cfg;
    cfg.lambda = l;
    TrainResult trained = train(train_patches, cfg, fx);
    EvalResult r = evaluate_downstream(classifier, trained.model, eval_images);
    rows.push_back({l, r.top1, r.ms_ssim_mean, r.psnr_mean});
  }
  return rows;
}

std::string eval_csv_header() {
  return "arm,top1,top1_original,ms_ssim,psnr_db,bpp,n_images,seed";
}

std::string eval_csv_row(const EvalResult& r) {
  std::ostringstream os;
  os << r.arm_name << ',' << fmt_double(r.top1) << ',' << fmt_double(r.top1_original)
     << ',' << fmt_double(r.ms_ssim_mean) << ',' << fmt_double(r.psnr_mean) << ','
     << fmt_double(r.bpp_mean) << ',' << r.n_images << ',' << r.seed;
  return os.str();
}

namespace {

std::string pad_cell(const std::string& s, std::size_t width) {
  if (s.size() >= width) return s;
  return s + std::string(width - s.size(), ' ');
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * v);
  return buf;
}

std::string fixed3(double v) {
  if (std::isinf(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string render_results_table(const std::vector<EvalResult>& rows,
                                 const std::optional<EvalResult>&) {
  std::ostringstream os;
  os << pad_cell("method", 14) << pad_cell("top-1", 8) << pad_cell("MS-SSIM", 9)
     << pad_cell("PSNR", 8) << pad_cell("bpp", 6) << '\n';
  os << std::string(45, '-') << '\n';
  if (!rows.empty()) {
    // Original-accuracy reference row; identical across arms by construction.
    os << pad_cell("original", 14) << pad_cell(pct(rows.front().top1_original), 8)
       << pad_cell("1.000", 9) << pad_cell("-", 8) << pad_cell("24", 6) << '\n';
  }
  for (const EvalResult& r : rows)
    os << pad_cell(r.arm_name, 14) << pad_cell(pct(r.top1), 8)
       << pad_cell(fixed3(r.ms_ssim_mean), 9) << pad_cell(fixed3(r.psnr_mean), 8)
       << pad_cell(fixed3(r.bpp_mean), 6) << '\n';
  return os.str();
}

std::string sweep_csv_header() { return "lambda,top1,ms_ssim,psnr_db"; }

std::string sweep_csv_row(const SweepRow& r) {
  std::ostringstream os;
  os << fmt_double(r.lambda) << ',' << fmt_double(r.top1) << ','
     << fmt_double(r.ms_ssim) << ',' << fmt_double(r.psnr);
  return os.str();
}

std::string render_sweep_table(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << pad_cell("lambda", 14) << pad_cell("top-1", 8) << pad_cell("MS-SSIM", 9)
     << pad_cell("PSNR", 8) << '\n';
  os << std::string(39, '-') << '\n';
  for (const SweepRow& r : rows)
    os << pad_cell(fmt_double(r.lambda, 4), 14) << pad_cell(pct(r.top1), 8)
       << pad_cell(fixed3(r.ms_ssim), 9) << pad_cell(fixed3(r.psnr), 8) << '\n';
  return os.str();
}

}  // namespace dic
