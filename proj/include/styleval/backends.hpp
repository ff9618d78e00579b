#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "styleval/embedding.hpp"
#include "styleval/image.hpp"

namespace styleval {

// An embedding provider. Implementations must be deterministic: the same
// input bytes always produce the same vector. Unsupported modalities throw
// Error(backend_unavailable).
class Backend {
 public:
  virtual ~Backend() = default;
  virtual const BackendDescriptor& descriptor() const = 0;
  virtual EmbeddingVector embed_image(const Image& img) const;
  virtual EmbeddingVector embed_text(const std::string& text) const;
  virtual std::string caption(const Image& img, const std::string& prompt) const;
};

class Registry {
 public:
  void add(std::shared_ptr<Backend> backend);
  bool has(const std::string& backend_id) const;
  const Backend& at(const std::string& backend_id) const;
  std::vector<BackendDescriptor> descriptors() const;

 private:
  std::map<std::string, std::shared_ptr<Backend>> backends_;
};

// Reference backends (always available, no model weights):
//   ref-stat   image       dim 54  statistics vector (kernels::image_stats)
//   ref-joint  image+text  dim 64  token hash bag; images go through their
//                                  attribute caption, so an image and its
//                                  own caption land on the same vector
//   ref-fuse   image+text  dim 54  image side = statistics vector, text
//                                  side = hash bag (feature fusion only,
//                                  not a shared similarity space)
//   ref-cap    captioner           bucketed attribute caption
// Plus descriptor-only entries for the published pretrained choices
// (clip-vit-large-patch14, dinov2-large, ...); using one throws
// Error(backend_unavailable) until a real adapter is linked in.
Registry make_default_registry();

inline constexpr int kJointDim = 64;

// Process-wide count of raw backend computations (embed/caption calls that
// actually ran, as opposed to cache hits). Test instrumentation.
std::uint64_t backend_compute_calls();
void reset_backend_compute_calls();

// Tokenization used by the hash-bag embedder: lowercase, tokens are maximal
// runs of [a-z0-9:]. Keeping ':' inside tokens makes "contrast:high" one
// token, so attribute captions differing only in bucket assignment do not
// collide.
std::vector<std::string> tokenize(const std::string& text);

// Bag of FNV-1a-hashed unigrams: values[fnv1a64(token) % dim] += 1.
EmbeddingVector hash_bag_embed(const std::string& text, int dim,
                               const std::string& backend_id);

// Deterministic attribute caption from statistics buckets. Tokens, in
// order: brightness:{low,medium,high} (luminance mean at 1/3 and 2/3),
// contrast:{low,medium,high} (mean channel stddev at 0.05 and 0.15),
// dominant:{red,green,blue} (largest channel mean, first wins ties),
// saturation:{low,medium,high} (channel-mean spread at 0.05 and 0.2),
// balance:{even,top-heavy,bottom-heavy} (patch-grid luminance, 0.05 gap),
// texture:{smooth,moderate,busy} (patch luminance variance at 0.002/0.02).
std::string reference_caption(const Image& img);

// The default captioning prompt listing the 40 visual attributes; also
// shipped at resources/attribute_prompt.txt.
const std::string& attribute_prompt();

}  // namespace styleval
