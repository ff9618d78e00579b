#include "styleval/features.hpp"

#include <algorithm>
#include <cmath>

#include "styleval/errors.hpp"

namespace styleval {

using kernels::DMat;

namespace {

// Box pooling with ragged edge windows; all pixels contribute.
void pooled_rgb(const Image& img, int factor, DMat& rgb, int* h_out, int* w_out) {
  const int h = (img.height + factor - 1) / factor;
  const int w = (img.width + factor - 1) / factor;
  *h_out = h;
  *w_out = w;
  rgb = DMat(3, h * w);
  for (int r = 0; r < h; ++r) {
    const int y0 = r * factor;
    const int y1 = std::min(img.height, y0 + factor);
    for (int c = 0; c < w; ++c) {
      const int x0 = c * factor;
      const int x1 = std::min(img.width, x0 + factor);
      double acc[3] = {0.0, 0.0, 0.0};
      for (int y = y0; y < y1; ++y) {
        const std::uint8_t* p = img.at(y, x0);
        for (int x = x0; x < x1; ++x) {
          acc[0] += p[0] * (1.0 / 255.0);
          acc[1] += p[1] * (1.0 / 255.0);
          acc[2] += p[2] * (1.0 / 255.0);
          p += 3;
        }
      }
      const double n = static_cast<double>(y1 - y0) * (x1 - x0);
      for (int ch = 0; ch < 3; ++ch) {
        rgb.at(ch, r * w + c) = acc[ch] / n;
      }
    }
  }
}

}  // namespace

DMat extract_features(const Image& img, int layer) {
  if (layer < 0 || layer > 16) {
    throw Error(Errc::bad_config, "style loss layer out of range");
  }
  if (img.empty()) {
    throw Error(Errc::decode_error, "empty image in feature extraction");
  }
  const int factor = 1 << layer;
  DMat rgb;
  int h = 0, w = 0;
  pooled_rgb(img, factor, rgb, &h, &w);

  DMat f(kFeatureChannels, h * w);
  for (int i = 0; i < h * w; ++i) {
    f.at(0, i) = rgb.at(0, i);
    f.at(1, i) = rgb.at(1, i);
    f.at(2, i) = rgb.at(2, i);
    f.at(3, i) = 0.299 * rgb.at(0, i) + 0.587 * rgb.at(1, i) + 0.114 * rgb.at(2, i);
  }
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int i = r * w + c;
      f.at(4, i) = (c + 1 < w) ? std::abs(f.at(3, i + 1) - f.at(3, i)) : 0.0;
      f.at(5, i) = (r + 1 < h) ? std::abs(f.at(3, i + w) - f.at(3, i)) : 0.0;
    }
  }
  return f;
}

DMat gram_matrix(const DMat& features) {
  DMat g;
  kernels::matmul_nt(features, features, g);
  const double cells = static_cast<double>(features.cols);
  for (double& v : g.a) v /= cells;
  return g;
}

double style_loss(const Image& a, const Image& b, const StyleLossConfig& cfg) {
  if (cfg.layers.empty()) {
    throw Error(Errc::bad_config, "style loss needs at least one layer");
  }
  double total = 0.0;
  for (int layer : cfg.layers) {
    const DMat ga = gram_matrix(extract_features(a, layer));
    const DMat gb = gram_matrix(extract_features(b, layer));
    double acc = 0.0;
    for (std::size_t i = 0; i < ga.a.size(); ++i) {
      const double d = ga.a[i] - gb.a[i];
      acc += d * d;
    }
    total += acc / (kFeatureChannels * kFeatureChannels);
  }
  return total / cfg.layers.size();
}

}  // namespace styleval
