#pragma once

#include <string>

#include "styleval/cache.hpp"
#include "styleval/image.hpp"

namespace styleval {

struct ContentScoreConfig {
  double alpha = 0.5;  // weight of the semantic term, in [0, 1]
  std::string semantic_backend = "ref-joint";
  std::string structural_backend = "ref-stat";
};

// Cosine between the stylized image and the content caption in the joint
// space. The caption must come with the triplet; an empty caption is an
// error rather than an implicit re-captioning.
double semantic_score(const Image& stylized, const std::string& caption,
                      const ContentScoreConfig& cfg, const Embedder& embedder);

// Cosine between structural embeddings of the stylized and content images.
double structural_score(const Image& stylized, const Image& content,
                        const ContentScoreConfig& cfg,
                        const Embedder& embedder);

// alpha * semantic + (1 - alpha) * structural. Raw cosines go in unscaled;
// best-of-N selection is unaffected by any shared monotone rescaling.
double content_score(double s_semantic, double s_structural,
                     const ContentScoreConfig& cfg);

}  // namespace styleval
