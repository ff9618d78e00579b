#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "styleval/cache.hpp"
#include "styleval/manifest.hpp"
#include "styleval/mlp.hpp"

namespace styleval {

struct AestheticTrainConfig {
  std::string feature_backend = "ref-fuse";  // image+text feature extractor
  std::string captioner_backend = "ref-cap";
  std::vector<int> head_dims = {32, 16, 1};  // final width must be 1
  double learning_rate = 0.005;
  double learning_rate_stage2 = -1.0;  // < 0: reuse learning_rate
  int epochs_stage1 = 300;
  int epochs_stage2 = 100;
  int batch_size = 16;
  std::uint64_t seed = 42;
  std::string prompt;  // empty: the shipped attribute prompt
};

struct AestheticCheckpoint {
  AestheticTrainConfig config;
  // One (epoch, mse) series per executed stage.
  std::vector<std::vector<std::pair<int, double>>> stage_metrics;
  Mlp head;
  std::string backend_id;
  // Per-dimension standardization fitted on the stage-1 features and
  // frozen for stage 2 and scoring.
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
};

// [image features | caption text features], both from the feature backend.
EmbeddingVector fuse_features(const Image& img,
                              const std::string& attribute_caption,
                              const AestheticTrainConfig& cfg,
                              const Embedder& embedder);

// Stage 1 trains on the natural-image corpus, stage 2 continues from the
// stage-1 weights on the artistic corpus (empty stage2 skips it). MSE per
// epoch is recorded per stage; everything is seeded.
AestheticCheckpoint train_aesthetic(const std::vector<RatedImage>& stage1,
                                    const std::vector<RatedImage>& stage2,
                                    const AestheticTrainConfig& cfg,
                                    const Embedder& embedder);

// Seeded head initialization without training; input_dim is the fused
// feature dimension (image dim + text dim of the feature backend).
AestheticCheckpoint init_aesthetic_checkpoint(const AestheticTrainConfig& cfg,
                                              int input_dim);

// Caption via the captioner backend, fuse, regress. Deterministic given
// (image bytes, checkpoint).
double aesthetic_score(const Image& img, const AestheticCheckpoint& ckpt,
                       const Embedder& embedder);

void save_aesthetic_checkpoint(const AestheticCheckpoint& ckpt,
                               const std::filesystem::path& path);
AestheticCheckpoint load_aesthetic_checkpoint(const std::filesystem::path& path);

}  // namespace styleval
