#include "styleval/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "styleval/errors.hpp"

namespace styleval {

std::string to_string(Modality m) {
  switch (m) {
    case Modality::image: return "image";
    case Modality::text: return "text";
    case Modality::image_text: return "image+text";
    case Modality::captioner: return "captioner";
  }
  return "?";
}

bool EmbeddingVector::is_zero() const {
  return std::all_of(values.begin(), values.end(),
                     [](float v) { return v == 0.0f; });
}

bool EmbeddingVector::all_finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](float v) { return std::isfinite(v); });
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v,
              bool* degenerate) {
  if (degenerate) *degenerate = false;
  if (u.backend_id != v.backend_id) {
    throw Error(Errc::dimension_mismatch,
                "cosine across backends '" + u.backend_id + "' and '" +
                    v.backend_id + "'");
  }
  if (u.values.size() != v.values.size()) {
    throw Error(Errc::dimension_mismatch,
                "cosine dimension mismatch: " + std::to_string(u.dim()) +
                    " vs " + std::to_string(v.dim()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const double a = u.values[i];
    const double b = v.values[i];
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (nu == 0.0 || nv == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

}  // namespace styleval
