#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "styleval/cache.hpp"
#include "styleval/kernels.hpp"
#include "styleval/manifest.hpp"
#include "styleval/mlp.hpp"

namespace styleval {

struct ContrastiveTrainConfig {
  std::string base_backend = "ref-stat";
  std::vector<int> head_dims = {32, 16};  // projection head widths, last = output
  double temperature = 0.07;
  int batch_size = 16;
  int epochs = 10;
  double learning_rate = 0.01;
  std::uint64_t seed = 42;
  // Full-encoder fine-tuning. Requires a trainable backend adapter; the
  // deterministic reference backends only support the projection head.
  bool finetune_base = false;
};

// Trained style head over a frozen base embedder. backend_id encodes the
// base backend, head shape, loss variant and seed, so scores produced by
// different training setups can never be compared silently.
struct StyleEncoderCheckpoint {
  ContrastiveTrainConfig config;
  std::vector<std::pair<int, double>> train_metrics;  // (epoch, mean loss)
  Mlp head;
  std::string backend_id;
};

// Seeded batch stream over a style-labeled corpus, returned as batches of
// corpus indices. Within each label images are shuffled and paired; pairs
// are interleaved round-robin across labels and chunked into batches of
// max(2, batch_size/2) pairs. Chunks left with fewer than two distinct
// labels are dropped, so every batch gives each anchor at least one
// positive and one negative. Throws Error(insufficient_labels) when fewer
// than two labels have two or more images.
std::vector<std::vector<int>> build_pairs(
    const std::vector<StyleLabeledImage>& corpus, std::uint64_t seed,
    int batch_size);

// Multi-positive normalized-temperature cross entropy over in-batch pairs:
//   s_ij = (z_i . z_j) / temperature
//   L_i  = -(1/|P(i)|) sum_{p in P(i)} [ s_ip - log sum_{a != i} exp(s_ia) ]
//   loss = mean of L_i over anchors with at least one positive.
// Inputs are treated as unit vectors (dot products are used unscaled).
// Throws Error(no_positive_pair) when no anchor has an in-batch positive.
double contrastive_loss(const std::vector<EmbeddingVector>& embeddings,
                        const std::vector<std::string>& labels,
                        double temperature);

// Loss of the whole trainable pipeline on a batch: head forward over the
// rows of base, L2 normalization, contrastive loss. Fills grad with
// d(loss)/d(head params) when non-null. This is the quantity the trainer
// descends; exposed so gradients can be checked against finite differences.
double style_head_loss(const Mlp& head, const kernels::DMat& base,
                       const std::vector<std::string>& labels,
                       double temperature, std::vector<double>* grad = nullptr);

StyleEncoderCheckpoint train_style_encoder(
    const std::vector<StyleLabeledImage>& corpus,
    const ContrastiveTrainConfig& cfg, const Embedder& embedder);

// Seeded head initialization without training (what epochs == 0 returns);
// input_dim is the base backend's embedding dimension.
StyleEncoderCheckpoint init_style_checkpoint(const ContrastiveTrainConfig& cfg,
                                             int input_dim);

// Unit-normalized style-head embedding of an image.
EmbeddingVector style_embed(const Image& img, const StyleEncoderCheckpoint& ckpt,
                            const Embedder& embedder);

// Cosine in the style-head space; symmetric, 1.0 for identical inputs.
double style_score(const Image& stylized, const Image& style_ref,
                   const StyleEncoderCheckpoint& ckpt, const Embedder& embedder);

struct RetrievalResult {
  double rank1 = 0.0;
  double rank5 = 0.0;
  double rank10 = 0.0;
};

// Fraction of queries whose first same-label key lands in the top-1/5/10
// by cosine. Ties keep key order; a key with the same image path as the
// query is excluded (distinct-key protocol). query_paths/key_paths may be
// null when no self-match exclusion is wanted.
RetrievalResult rank_at_k(const kernels::DMat& queries,
                          const std::vector<std::string>& query_labels,
                          const kernels::DMat& keys,
                          const std::vector<std::string>& key_labels,
                          const std::vector<std::string>* query_paths = nullptr,
                          const std::vector<std::string>* key_paths = nullptr);

RetrievalResult retrieval_eval(const std::vector<StyleLabeledImage>& queries,
                               const std::vector<StyleLabeledImage>& keys,
                               const StyleEncoderCheckpoint& ckpt,
                               const Embedder& embedder);

void save_style_checkpoint(const StyleEncoderCheckpoint& ckpt,
                           const std::filesystem::path& path);
StyleEncoderCheckpoint load_style_checkpoint(const std::filesystem::path& path);

}  // namespace styleval
