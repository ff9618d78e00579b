#include "styleval/content.hpp"

#include <cmath>

#include "styleval/errors.hpp"

namespace styleval {

double semantic_score(const Image& stylized, const std::string& caption,
                      const ContentScoreConfig& cfg, const Embedder& embedder) {
  if (caption.empty()) {
    throw Error(Errc::empty_caption, "content caption is empty");
  }
  EmbeddingVector img = embedder.image(cfg.semantic_backend, stylized);
  EmbeddingVector txt = embedder.text(cfg.semantic_backend, caption);
  return cosine(img, txt);
}

double structural_score(const Image& stylized, const Image& content,
                        const ContentScoreConfig& cfg,
                        const Embedder& embedder) {
  EmbeddingVector a = embedder.image(cfg.structural_backend, stylized);
  EmbeddingVector b = embedder.image(cfg.structural_backend, content);
  return cosine(a, b);
}

double content_score(double s_semantic, double s_structural,
                     const ContentScoreConfig& cfg) {
  if (!std::isfinite(s_semantic) || !std::isfinite(s_structural)) {
    throw Error(Errc::non_finite_loss, "content score inputs must be finite");
  }
  return cfg.alpha * s_semantic + (1.0 - cfg.alpha) * s_structural;
}

}  // namespace styleval
