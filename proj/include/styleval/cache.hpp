#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "styleval/backends.hpp"
#include "styleval/embedding.hpp"

namespace styleval {

// Content-addressed on-disk memoization. Entries live at
//   <root>/<backend_id>/<hash[0:2]>/<hash>.vec   (little-endian float32)
//   <root>/<backend_id>/<hash[0:2]>/<hash>.txt   (UTF-8 caption)
// Each file is "SVC1" + kind byte + u32 payload length + payload + FNV-1a64
// checksum. Writers go through a temp file and an atomic rename, so
// concurrent writers of the same key converge to one valid entry. A failed
// checksum means recompute, overwrite, and a warning on stderr.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path root);

  EmbeddingVector get_or_compute_vec(
      const std::string& backend_id, const std::string& content_hash,
      const std::function<EmbeddingVector()>& compute);

  std::string get_or_compute_text(const std::string& backend_id,
                                  const std::string& content_hash,
                                  const std::function<std::string()>& compute);

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path entry_path(const std::string& backend_id,
                                   const std::string& content_hash,
                                   const char* ext) const;

  std::filesystem::path root_;
};

// Binds a backend registry to an optional disk cache plus a per-process
// memo, and owns the cache keys: image embeddings are keyed by pixel
// content hash, text by the text hash, captions by image and prompt hash.
class Embedder {
 public:
  Embedder(const Registry* registry, EmbeddingCache* cache)
      : registry_(registry), cache_(cache) {}

  const Registry& registry() const { return *registry_; }

  EmbeddingVector image(const std::string& backend_id, const Image& img) const;
  EmbeddingVector text(const std::string& backend_id,
                       const std::string& text) const;
  // Empty prompt selects the default attribute prompt.
  std::string caption(const std::string& backend_id, const Image& img,
                      const std::string& prompt = "") const;

 private:
  const Registry* registry_;
  EmbeddingCache* cache_;  // may be null: compute-only

  mutable std::mutex mu_;
  mutable std::map<std::string, EmbeddingVector> memo_vec_;
  mutable std::map<std::string, std::string> memo_text_;
};

}  // namespace styleval
