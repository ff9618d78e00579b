#pragma once

#include <string>
#include <vector>

#include "styleval/image.hpp"
#include "styleval/kernels.hpp"

namespace styleval {

// Feature extractor backing the Gram-matrix style loss. Layer l box-pools
// the image by 2^l (output cell (r,c) averages rows [r*2^l, min((r+1)*2^l,
// H)) and the matching columns, H_out = ceil(H / 2^l)), then emits 6
// channels per cell: R, G, B in [0,1], luminance (0.299/0.587/0.114), and
// the absolute horizontal/vertical luminance differences (last column/row
// zero).
struct StyleLossConfig {
  std::vector<int> layers = {0, 1, 2};
  std::string extractor_id = "ref-pyramid6";  // recorded in report metadata
};

inline constexpr int kFeatureChannels = 6;

// Feature map of one layer: channels x (H_out * W_out), row-major cells.
kernels::DMat extract_features(const Image& img, int layer);

// Gram matrix normalized by cell count: G = F F^T / cells.
kernels::DMat gram_matrix(const kernels::DMat& features);

// Mean over layers of (1/C^2) * ||G_a - G_b||_F^2 on normalized Grams.
// Zero iff the Gram matrices coincide on every layer; symmetric; image
// sizes may differ.
double style_loss(const Image& a, const Image& b,
                  const StyleLossConfig& cfg = {});

}  // namespace styleval
