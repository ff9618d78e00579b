#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "styleval/image.hpp"
#include "styleval/kernels.hpp"
#include "styleval/manifest.hpp"
#include "styleval/rng.hpp"

namespace styleval::synthetic {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

Image solid(int w, int h, Rgb c);
Image hstripes(int w, int h, int period, Rgb a, Rgb b, int phase = 0);
Image vstripes(int w, int h, int period, Rgb a, Rgb b, int phase = 0);
Image checker(int w, int h, int cell, Rgb a, Rgb b);
Image vgradient(int w, int h, Rgb top, Rgb bottom);
Image noise(int w, int h, Rng& rng);
// pixel = (1 - t) * a + t * b, sizes must match.
Image blend(const Image& a, const Image& b, double t);

// Procedural texture for one of the four toy styles ("hstripes",
// "vstripes", "checker", "gradient"), each with its own palette so the
// styles are separable under the statistics embedder.
Image toy_style_image(const std::string& style, int size, Rng& rng);

inline const std::vector<std::string>& toy_style_labels() {
  static const std::vector<std::string> labels = {"checker", "gradient",
                                                  "hstripes", "vstripes"};
  return labels;
}

struct ToyStyleCorpus {
  std::vector<StyleLabeledImage> all;
  std::vector<StyleLabeledImage> train;
  std::vector<StyleLabeledImage> heldout;
};

// Writes <dir>/<label>/NNN.png for the four toy styles; the last
// heldout_per_style images of each label form the held-out split.
ToyStyleCorpus write_toy_style_corpus(const std::filesystem::path& dir,
                                      int per_style = 32,
                                      int heldout_per_style = 8,
                                      std::uint64_t seed = 7, int size = 32);

// The documented linear rating: 4 + 2*mean_R + 1*mean_G + 0.5*mean_B.
double toy_rating(const kernels::StatsVector& stats);

// Writes n rated PNGs plus ratings.csv. prototypes == 0 gives n distinct
// images with exact linear ratings; prototypes > 0 cycles that many
// distinct images and adds N(0, sigma) rating noise, so the best possible
// regression MSE is the within-prototype rating variance.
struct ToyRatedCorpus {
  std::vector<RatedImage> images;
  std::filesystem::path csv;
};
ToyRatedCorpus write_rated_corpus(const std::filesystem::path& dir, int n,
                                  std::uint64_t seed, double noise_sigma = 0.0,
                                  int prototypes = 0,
                                  const std::string& corpus_id = "ava-like");

// Toy filtering manifest: `groups` groups of `candidates` stylized blends
// between a content image and a style image, written under dir with
// relative paths; manifest.jsonl alongside.
struct ToyManifest {
  Manifest manifest;
  std::filesystem::path manifest_path;
};
ToyManifest write_toy_manifest(const std::filesystem::path& dir, int groups,
                               int candidates, std::uint64_t seed = 11,
                               int size = 32);

// Toy benchmark layout: contents/, styles/, spec.json, and two method
// output dirs: methods/copy-style (outputs equal the style image) and
// methods/copy-content (outputs equal the content image).
struct ToyBenchmark {
  std::filesystem::path spec_path;
  std::filesystem::path methods_dir;
  std::vector<std::string> method_ids;
};
ToyBenchmark write_toy_benchmark(const std::filesystem::path& dir,
                                 int contents = 2, int styles = 3,
                                 std::uint64_t seed = 5, int size = 32);

}  // namespace styleval::synthetic
