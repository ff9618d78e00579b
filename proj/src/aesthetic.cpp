#include "styleval/aesthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "styleval/checkpoint.hpp"
#include "styleval/errors.hpp"
#include "styleval/kernels.hpp"
#include "styleval/parallel.hpp"
#include "styleval/rng.hpp"

namespace styleval {

using kernels::DMat;

namespace {

std::string derive_backend_id(const AestheticTrainConfig& cfg) {
  std::ostringstream os;
  os << "aesthetic-head(" << cfg.feature_backend << "+" << cfg.captioner_backend;
  for (int d : cfg.head_dims) os << "." << d;
  os << ",mse,s" << cfg.seed << ")";
  return os.str();
}

void validate_config(const AestheticTrainConfig& cfg) {
  if (cfg.head_dims.empty() || cfg.head_dims.back() != 1) {
    throw Error(Errc::bad_config, "aesthetic head must end in width 1");
  }
  if (cfg.batch_size <= 0) {
    throw Error(Errc::bad_config, "batch_size must be positive");
  }
}

DMat fused_matrix(const std::vector<RatedImage>& corpus,
                  const AestheticTrainConfig& cfg, const Embedder& embedder) {
  DMat m;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Image img = load_image(corpus[i].image_path);
    const std::string caption =
        embedder.caption(cfg.captioner_backend, img, cfg.prompt);
    EmbeddingVector fused = fuse_features(img, caption, cfg, embedder);
    if (m.rows == 0) m = DMat(static_cast<int>(corpus.size()), fused.dim());
    for (int c = 0; c < fused.dim(); ++c) {
      m.at(static_cast<int>(i), c) = fused.values[c];
    }
  }
  return m;
}

// One stage of minibatch MSE training; returns the (epoch, mse) series.
std::vector<std::pair<int, double>> run_stage(
    Mlp& head, AdamState& adam, const DMat& features,
    const std::vector<double>& targets, int epochs, double lr,
    int batch_size, Rng stage_rng, int stage_tag) {
  std::vector<std::pair<int, double>> metrics;
  const int n = features.rows;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(head.params().size());
  std::vector<std::vector<double>> sample_grads;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    Rng rng = stage_rng.fork(epoch);
    rng.shuffle(order);
    double sq_err = 0.0;
    for (int start = 0; start < n; start += batch_size) {
      const int end = std::min(n, start + batch_size);
      const int bsize = end - start;
      sample_grads.assign(bsize, std::vector<double>(grad.size(), 0.0));
      std::vector<double> residuals(bsize, 0.0);

#pragma omp parallel for schedule(static) if (parallel::enabled())
      for (int b = 0; b < bsize; ++b) {
        const int idx = order[start + b];
        Mlp::Tape tape = head.forward_tape(
            std::span<const double>(features.row(idx), features.cols));
        const double pred = tape.output[0];
        const double r = pred - targets[idx];
        residuals[b] = r;
        // d(mean sq err)/d(pred) within this batch.
        const double dout = 2.0 * r / bsize;
        head.backward(tape, std::span<const double>(&dout, 1), sample_grads[b]);
      }

      double batch_sq = 0.0;
      for (int b = 0; b < bsize; ++b) batch_sq += residuals[b] * residuals[b];
      if (!std::isfinite(batch_sq)) {
        throw Error(Errc::non_finite_loss,
                    "non-finite loss in stage " + std::to_string(stage_tag) +
                        " epoch " + std::to_string(epoch) + " batch " +
                        std::to_string(start / batch_size));
      }
      sq_err += batch_sq;

      std::fill(grad.begin(), grad.end(), 0.0);
      for (int b = 0; b < bsize; ++b) {
        for (std::size_t p = 0; p < grad.size(); ++p) {
          grad[p] += sample_grads[b][p];
        }
      }
      adam_step(head.params(), grad, adam, lr);
    }
    metrics.emplace_back(epoch, sq_err / n);
  }
  return metrics;
}

}  // namespace

EmbeddingVector fuse_features(const Image& img,
                              const std::string& attribute_caption,
                              const AestheticTrainConfig& cfg,
                              const Embedder& embedder) {
  if (attribute_caption.empty()) {
    throw Error(Errc::empty_caption, "attribute caption is empty");
  }
  EmbeddingVector image_part = embedder.image(cfg.feature_backend, img);
  EmbeddingVector text_part = embedder.text(cfg.feature_backend, attribute_caption);
  EmbeddingVector fused;
  fused.backend_id = cfg.feature_backend + "+fused";
  fused.values.reserve(image_part.values.size() + text_part.values.size());
  fused.values.insert(fused.values.end(), image_part.values.begin(),
                      image_part.values.end());
  fused.values.insert(fused.values.end(), text_part.values.begin(),
                      text_part.values.end());
  return fused;
}

AestheticCheckpoint init_aesthetic_checkpoint(const AestheticTrainConfig& cfg,
                                              int input_dim) {
  validate_config(cfg);
  AestheticCheckpoint ckpt;
  ckpt.config = cfg;
  ckpt.backend_id = derive_backend_id(cfg);
  ckpt.head = Mlp(input_dim, cfg.head_dims);
  Rng init_rng(cfg.seed);
  ckpt.head.init(init_rng);
  return ckpt;
}

namespace {

// Fit on stage 1, freeze for stage 2 and scoring. Constant dimensions get
// scale 1 so they pass through centered.
void fit_standardizer(const DMat& f, std::vector<double>& mean,
                      std::vector<double>& scale) {
  mean.assign(f.cols, 0.0);
  scale.assign(f.cols, 1.0);
  if (f.rows == 0) return;
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) mean[c] += f.at(r, c);
  }
  for (double& m : mean) m /= f.rows;
  std::vector<double> var(f.cols, 0.0);
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      const double d = f.at(r, c) - mean[c];
      var[c] += d * d;
    }
  }
  for (int c = 0; c < f.cols; ++c) {
    const double sd = std::sqrt(var[c] / f.rows);
    scale[c] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
}

void apply_standardizer(DMat& f, const std::vector<double>& mean,
                        const std::vector<double>& scale) {
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      f.at(r, c) = (f.at(r, c) - mean[c]) * scale[c];
    }
  }
}

}  // namespace

AestheticCheckpoint train_aesthetic(const std::vector<RatedImage>& stage1,
                                    const std::vector<RatedImage>& stage2,
                                    const AestheticTrainConfig& cfg,
                                    const Embedder& embedder) {
  validate_config(cfg);
  if (stage1.empty()) {
    throw Error(Errc::bad_config, "stage-1 corpus is empty");
  }

  DMat f1 = fused_matrix(stage1, cfg, embedder);

  AestheticCheckpoint ckpt = init_aesthetic_checkpoint(cfg, f1.cols);
  fit_standardizer(f1, ckpt.feature_mean, ckpt.feature_scale);
  apply_standardizer(f1, ckpt.feature_mean, ckpt.feature_scale);

  AdamState adam(ckpt.head.params().size());
  std::vector<double> t1;
  for (const RatedImage& r : stage1) t1.push_back(r.score);

  if (cfg.epochs_stage1 > 0) {
    ckpt.stage_metrics.push_back(run_stage(ckpt.head, adam, f1, t1,
                                           cfg.epochs_stage1, cfg.learning_rate,
                                           cfg.batch_size, Rng(cfg.seed), 1));
  }

  if (!stage2.empty() && cfg.epochs_stage2 > 0) {
    DMat f2 = fused_matrix(stage2, cfg, embedder);
    apply_standardizer(f2, ckpt.feature_mean, ckpt.feature_scale);
    std::vector<double> t2;
    for (const RatedImage& r : stage2) t2.push_back(r.score);
    const double lr2 = cfg.learning_rate_stage2 >= 0.0
                           ? cfg.learning_rate_stage2
                           : cfg.learning_rate;
    // Same optimizer family, fresh state and learning rate for the
    // fine-tune stage.
    AdamState adam2(ckpt.head.params().size());
    ckpt.stage_metrics.push_back(run_stage(ckpt.head, adam2, f2, t2,
                                           cfg.epochs_stage2, lr2,
                                           cfg.batch_size, Rng(cfg.seed + 1), 2));
  }
  return ckpt;
}

double aesthetic_score(const Image& img, const AestheticCheckpoint& ckpt,
                       const Embedder& embedder) {
  const std::string caption =
      embedder.caption(ckpt.config.captioner_backend, img, ckpt.config.prompt);
  EmbeddingVector fused = fuse_features(img, caption, ckpt.config, embedder);
  if (fused.dim() != ckpt.head.input_dim()) {
    throw Error(Errc::dimension_mismatch,
                "fused feature dim " + std::to_string(fused.dim()) +
                    " does not match head input " +
                    std::to_string(ckpt.head.input_dim()));
  }
  std::vector<double> x(fused.values.begin(), fused.values.end());
  if (!ckpt.feature_mean.empty()) {
    for (std::size_t c = 0; c < x.size(); ++c) {
      x[c] = (x[c] - ckpt.feature_mean[c]) * ckpt.feature_scale[c];
    }
  }
  return ckpt.head.forward(x)[0];
}

void save_aesthetic_checkpoint(const AestheticCheckpoint& ckpt,
                               const std::filesystem::path& path) {
  nlohmann::json header;
  header["backend_id"] = ckpt.backend_id;
  header["config"] = {
      {"feature_backend", ckpt.config.feature_backend},
      {"captioner_backend", ckpt.config.captioner_backend},
      {"head_dims", ckpt.config.head_dims},
      {"learning_rate", ckpt.config.learning_rate},
      {"learning_rate_stage2", ckpt.config.learning_rate_stage2},
      {"epochs_stage1", ckpt.config.epochs_stage1},
      {"epochs_stage2", ckpt.config.epochs_stage2},
      {"batch_size", ckpt.config.batch_size},
      {"seed", ckpt.config.seed},
      {"prompt", ckpt.config.prompt},
  };
  header["input_dim"] = ckpt.head.input_dim();
  header["stage_metrics"] = ckpt.stage_metrics;
  header["feature_mean"] = ckpt.feature_mean;
  header["feature_scale"] = ckpt.feature_scale;
  save_checkpoint(path, "aesthetic", header, ckpt.head.params());
}

AestheticCheckpoint load_aesthetic_checkpoint(
    const std::filesystem::path& path) {
  auto [header, payload] = load_checkpoint(path, "aesthetic");
  AestheticCheckpoint ckpt;
  try {
    const auto& c = header.at("config");
    ckpt.config.feature_backend = c.at("feature_backend").get<std::string>();
    ckpt.config.captioner_backend = c.at("captioner_backend").get<std::string>();
    ckpt.config.head_dims = c.at("head_dims").get<std::vector<int>>();
    ckpt.config.learning_rate = c.at("learning_rate").get<double>();
    ckpt.config.learning_rate_stage2 =
        c.at("learning_rate_stage2").get<double>();
    ckpt.config.epochs_stage1 = c.at("epochs_stage1").get<int>();
    ckpt.config.epochs_stage2 = c.at("epochs_stage2").get<int>();
    ckpt.config.batch_size = c.at("batch_size").get<int>();
    ckpt.config.seed = c.at("seed").get<std::uint64_t>();
    ckpt.config.prompt = c.at("prompt").get<std::string>();
    ckpt.backend_id = header.at("backend_id").get<std::string>();
    ckpt.stage_metrics =
        header.at("stage_metrics")
            .get<std::vector<std::vector<std::pair<int, double>>>>();
    ckpt.feature_mean = header.value("feature_mean", std::vector<double>{});
    ckpt.feature_scale = header.value("feature_scale", std::vector<double>{});
    ckpt.head = Mlp(header.at("input_dim").get<int>(), ckpt.config.head_dims);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::checkpoint_corrupt,
                "aesthetic checkpoint header: " + std::string(e.what()));
  }
  if (payload.size() != ckpt.head.params().size()) {
    throw Error(Errc::checkpoint_corrupt, "aesthetic checkpoint payload size");
  }
  ckpt.head.params() = std::move(payload);
  return ckpt;
}

}  // namespace styleval
