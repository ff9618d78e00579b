#include "styleval/backends.hpp"

#include <atomic>
#include <cmath>

#include "styleval/errors.hpp"
#include "styleval/hash.hpp"
#include "styleval/kernels.hpp"

namespace styleval {

namespace {

std::atomic<std::uint64_t> g_compute_calls{0};

void count_compute() { g_compute_calls.fetch_add(1, std::memory_order_relaxed); }

}  // namespace

std::uint64_t backend_compute_calls() { return g_compute_calls.load(); }
void reset_backend_compute_calls() { g_compute_calls.store(0); }

EmbeddingVector Backend::embed_image(const Image&) const {
  throw Error(Errc::backend_unavailable,
              "backend '" + descriptor().backend_id + "' has no image modality");
}

EmbeddingVector Backend::embed_text(const std::string&) const {
  throw Error(Errc::backend_unavailable,
              "backend '" + descriptor().backend_id + "' has no text modality");
}

std::string Backend::caption(const Image&, const std::string&) const {
  throw Error(Errc::backend_unavailable,
              "backend '" + descriptor().backend_id + "' is not a captioner");
}

void Registry::add(std::shared_ptr<Backend> backend) {
  const std::string id = backend->descriptor().backend_id;
  backends_[id] = std::move(backend);
}

bool Registry::has(const std::string& backend_id) const {
  return backends_.count(backend_id) != 0;
}

const Backend& Registry::at(const std::string& backend_id) const {
  auto it = backends_.find(backend_id);
  if (it == backends_.end()) {
    throw Error(Errc::backend_unavailable,
                "unknown backend '" + backend_id + "'");
  }
  return *it->second;
}

std::vector<BackendDescriptor> Registry::descriptors() const {
  std::vector<BackendDescriptor> out;
  out.reserve(backends_.size());
  for (const auto& [id, b] : backends_) out.push_back(b->descriptor());
  return out;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    char lc = static_cast<char>(std::tolower(c));
    if ((lc >= 'a' && lc <= 'z') || (lc >= '0' && lc <= '9') || lc == ':') {
      cur.push_back(lc);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

EmbeddingVector hash_bag_embed(const std::string& text, int dim,
                               const std::string& backend_id) {
  EmbeddingVector v;
  v.backend_id = backend_id;
  v.values.assign(static_cast<std::size_t>(dim), 0.0f);
  for (const std::string& tok : tokenize(text)) {
    v.values[fnv1a64(tok) % static_cast<std::uint64_t>(dim)] += 1.0f;
  }
  return v;
}

std::string reference_caption(const Image& img) {
  const kernels::StatsVector s = kernels::image_stats(img);
  const double lum = 0.299 * s[0] + 0.587 * s[1] + 0.114 * s[2];
  const double stddev = std::sqrt((s[3] + s[4] + s[5]) / 3.0);
  const double spread =
      std::max({s[0], s[1], s[2]}) - std::min({s[0], s[1], s[2]});

  auto bucket3 = [](double v, double lo, double hi, const char* a,
                    const char* b, const char* c) {
    return v < lo ? a : (v < hi ? b : c);
  };

  const char* dominant = "red";
  if (s[1] > s[0] && s[1] >= s[2]) dominant = "green";
  else if (s[2] > s[0] && s[2] > s[1]) dominant = "blue";

  // Patch-grid luminance: grid row means and overall variance.
  double patch_lum[kernels::kStatsPatchGrid][kernels::kStatsPatchGrid];
  double grid_mean = 0.0;
  for (int i = 0; i < kernels::kStatsPatchGrid; ++i) {
    for (int j = 0; j < kernels::kStatsPatchGrid; ++j) {
      const double* p = s.data() + 6 + (i * kernels::kStatsPatchGrid + j) * 3;
      patch_lum[i][j] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
      grid_mean += patch_lum[i][j];
    }
  }
  const int cells = kernels::kStatsPatchGrid * kernels::kStatsPatchGrid;
  grid_mean /= cells;
  double grid_var = 0.0, top = 0.0, bottom = 0.0;
  for (int i = 0; i < kernels::kStatsPatchGrid; ++i) {
    for (int j = 0; j < kernels::kStatsPatchGrid; ++j) {
      const double d = patch_lum[i][j] - grid_mean;
      grid_var += d * d;
      if (i < kernels::kStatsPatchGrid / 2) top += patch_lum[i][j];
      else bottom += patch_lum[i][j];
    }
  }
  grid_var /= cells;
  top /= cells / 2;
  bottom /= cells / 2;

  const char* balance = "even";
  if (top - bottom > 0.05) balance = "top-heavy";
  else if (bottom - top > 0.05) balance = "bottom-heavy";

  std::string out;
  out += "brightness:";
  out += bucket3(lum, 1.0 / 3.0, 2.0 / 3.0, "low", "medium", "high");
  out += " contrast:";
  out += bucket3(stddev, 0.05, 0.15, "low", "medium", "high");
  out += " dominant:";
  out += dominant;
  out += " saturation:";
  out += bucket3(spread, 0.05, 0.2, "low", "medium", "high");
  out += " balance:";
  out += balance;
  out += " texture:";
  out += bucket3(grid_var, 0.002, 0.02, "smooth", "moderate", "busy");
  return out;
}

const std::string& attribute_prompt() {
  static const std::string prompt =
      "Please provide a comprehensive description of the image based on the "
      "following visual attributes: Focus on how each attribute contributes "
      "to the overall aesthetic quality of the image, including aspects such "
      "as composition, balance, color harmony, lighting, contrast, texture, "
      "sharpness, depth of field, simplicity, symmetry and patterns, framing, "
      "leading lines, rule of thirds, perspective, emotional impact, "
      "uniqueness, visual storytelling, rhythm, harmony, proportion, "
      "gradation, tonal range, vibrance, clarity, negative space, detail, "
      "mood, geometric elements, visual hierarchy, light quality, visual "
      "tension, focus and depth, cultural significance, form and shape, "
      "saturation, motion blur, point of view (POV), symbolism, consistency, "
      "and foreground and background interaction. Summarize it in one "
      "paragraph.";
  return prompt;
}

namespace {

EmbeddingVector stats_embedding(const Image& img, const std::string& backend_id) {
  const kernels::StatsVector s = kernels::image_stats(img);
  EmbeddingVector v;
  v.backend_id = backend_id;
  v.values.reserve(s.size());
  for (double d : s) v.values.push_back(static_cast<float>(d));
  return v;
}

class StatBackend final : public Backend {
 public:
  StatBackend()
      : desc_{"ref-stat", Modality::image, kernels::kStatsDim,
              "8-bit RGB, no resize; channel means/variances + 4x4 patch means"} {}
  const BackendDescriptor& descriptor() const override { return desc_; }
  EmbeddingVector embed_image(const Image& img) const override {
    count_compute();
    return stats_embedding(img, desc_.backend_id);
  }

 private:
  BackendDescriptor desc_;
};

class JointBackend final : public Backend {
 public:
  JointBackend()
      : desc_{"ref-joint", Modality::image_text, kJointDim,
              "token hash bag; images embed via their attribute caption"} {}
  const BackendDescriptor& descriptor() const override { return desc_; }
  EmbeddingVector embed_image(const Image& img) const override {
    count_compute();
    return hash_bag_embed(reference_caption(img), desc_.dimension,
                          desc_.backend_id);
  }
  EmbeddingVector embed_text(const std::string& text) const override {
    count_compute();
    return hash_bag_embed(text, desc_.dimension, desc_.backend_id);
  }

 private:
  BackendDescriptor desc_;
};

class FuseBackend final : public Backend {
 public:
  FuseBackend()
      : desc_{"ref-fuse", Modality::image_text, kernels::kStatsDim,
              "image: statistics vector; text: token hash bag (fusion features)"} {}
  const BackendDescriptor& descriptor() const override { return desc_; }
  EmbeddingVector embed_image(const Image& img) const override {
    count_compute();
    return stats_embedding(img, desc_.backend_id);
  }
  EmbeddingVector embed_text(const std::string& text) const override {
    count_compute();
    return hash_bag_embed(text, desc_.dimension, desc_.backend_id);
  }

 private:
  BackendDescriptor desc_;
};

class CaptionBackend final : public Backend {
 public:
  CaptionBackend()
      : desc_{"ref-cap", Modality::captioner, 1,
              "bucketed attribute caption from image statistics"} {}
  const BackendDescriptor& descriptor() const override { return desc_; }
  std::string caption(const Image& img, const std::string&) const override {
    // The prompt selects the attribute vocabulary; the reference captioner
    // implements exactly the default vocabulary, whatever prompt is given.
    count_compute();
    return reference_caption(img);
  }

 private:
  BackendDescriptor desc_;
};

// Placeholder for a pretrained model referenced by configuration. Keeps the
// descriptor visible so configs can name it; any compute call reports the
// missing adapter.
class UnavailableBackend final : public Backend {
 public:
  explicit UnavailableBackend(BackendDescriptor desc) : desc_(std::move(desc)) {}
  const BackendDescriptor& descriptor() const override { return desc_; }
  EmbeddingVector embed_image(const Image&) const override { fail(); }
  EmbeddingVector embed_text(const std::string&) const override { fail(); }
  std::string caption(const Image&, const std::string&) const override { fail(); }

 private:
  [[noreturn]] void fail() const {
    throw Error(Errc::backend_unavailable,
                "backend '" + desc_.backend_id +
                    "' requires pretrained weights; no adapter is built in");
  }
  BackendDescriptor desc_;
};

}  // namespace

Registry make_default_registry() {
  Registry r;
  r.add(std::make_shared<StatBackend>());
  r.add(std::make_shared<JointBackend>());
  r.add(std::make_shared<FuseBackend>());
  r.add(std::make_shared<CaptionBackend>());
  r.add(std::make_shared<UnavailableBackend>(BackendDescriptor{
      "clip-vit-large-patch14", Modality::image_text, 768,
      "resize 224, center crop, CLIP normalization"}));
  r.add(std::make_shared<UnavailableBackend>(BackendDescriptor{
      "dinov2-large", Modality::image, 1024,
      "resize 224, center crop, ImageNet normalization; mean-pooled tokens"}));
  r.add(std::make_shared<UnavailableBackend>(BackendDescriptor{
      "internvl-14b-224px", Modality::image_text, 768,
      "resize 224; paired image/text feature extractor"}));
  r.add(std::make_shared<UnavailableBackend>(BackendDescriptor{
      "internvl2-1b", Modality::captioner, 1,
      "multimodal captioner; prompted attribute description"}));
  return r;
}

}  // namespace styleval
