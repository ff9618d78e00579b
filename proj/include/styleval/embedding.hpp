#pragma once

#include <string>
#include <vector>

namespace styleval {

enum class Modality { image, text, image_text, captioner };

std::string to_string(Modality m);

struct BackendDescriptor {
  std::string backend_id;
  Modality modality = Modality::image;
  int dimension = 0;
  std::string preprocessing;
};

struct EmbeddingVector {
  std::vector<float> values;
  std::string backend_id;

  int dim() const { return static_cast<int>(values.size()); }
  bool is_zero() const;
  bool all_finite() const;
};

// Cosine similarity, accumulated in double, clamped to [-1, 1]. A zero
// vector on either side yields 0 and sets *degenerate instead of erroring,
// so blank inputs cannot abort a batch. Mismatched backend or dimension
// throws Error(dimension_mismatch).
double cosine(const EmbeddingVector& u, const EmbeddingVector& v,
              bool* degenerate = nullptr);

}  // namespace styleval
