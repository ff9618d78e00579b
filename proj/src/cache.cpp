#include "styleval/cache.hpp"

#include <unistd.h>

#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <vector>

#include "styleval/errors.hpp"
#include "styleval/hash.hpp"

namespace styleval {

namespace {

constexpr char kMagic[4] = {'S', 'V', 'C', '1'};
constexpr std::uint8_t kKindVec = 0;
constexpr std::uint8_t kKindText = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(p[i])) << (8 * i);
  return v;
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(p[i])) << (8 * i);
  return v;
}

std::string encode_entry(std::uint8_t kind, const std::string& payload) {
  std::string out(kMagic, 4);
  out.push_back(char(kind));
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out += payload;
  put_u64(out, fnv1a64(payload));
  return out;
}

// nullopt = missing or corrupt entry.
std::optional<std::string> decode_entry(const std::filesystem::path& path,
                                        std::uint8_t kind, bool* corrupt) {
  *corrupt = false;
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 4 + 1 + 4 + 8 ||
      std::memcmp(bytes.data(), kMagic, 4) != 0 ||
      std::uint8_t(bytes[4]) != kind) {
    *corrupt = true;
    return std::nullopt;
  }
  std::uint32_t len = get_u32(bytes.data() + 5);
  if (bytes.size() != 4 + 1 + 4 + std::size_t(len) + 8) {
    *corrupt = true;
    return std::nullopt;
  }
  std::string payload = bytes.substr(9, len);
  if (get_u64(bytes.data() + 9 + len) != fnv1a64(payload)) {
    *corrupt = true;
    return std::nullopt;
  }
  return payload;
}

std::string vec_payload(const EmbeddingVector& v) {
  std::string payload;
  put_u32(payload, static_cast<std::uint32_t>(v.values.size()));
  payload.resize(4 + v.values.size() * 4);
  static_assert(sizeof(float) == 4);
  std::memcpy(payload.data() + 4, v.values.data(), v.values.size() * 4);
  return payload;
}

std::optional<EmbeddingVector> vec_from_payload(const std::string& payload,
                                                const std::string& backend_id) {
  if (payload.size() < 4) return std::nullopt;
  std::uint32_t dim = get_u32(payload.data());
  if (payload.size() != 4 + std::size_t(dim) * 4) return std::nullopt;
  EmbeddingVector v;
  v.backend_id = backend_id;
  v.values.resize(dim);
  std::memcpy(v.values.data(), payload.data() + 4, std::size_t(dim) * 4);
  return v;
}

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(
      fnv1a64(path.string()) ^ std::uint64_t(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write cache: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io_error, "cache write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path root)
    : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::filesystem::path EmbeddingCache::entry_path(
    const std::string& backend_id, const std::string& content_hash,
    const char* ext) const {
  return root_ / backend_id / content_hash.substr(0, 2) / (content_hash + ext);
}

EmbeddingVector EmbeddingCache::get_or_compute_vec(
    const std::string& backend_id, const std::string& content_hash,
    const std::function<EmbeddingVector()>& compute) {
  const auto path = entry_path(backend_id, content_hash, ".vec");
  bool corrupt = false;
  if (auto payload = decode_entry(path, kKindVec, &corrupt)) {
    if (auto v = vec_from_payload(*payload, backend_id)) return *v;
    corrupt = true;
  }
  if (corrupt) {
    std::cerr << "[styleval] warning: corrupt cache entry " << path.string()
              << ", recomputing\n";
  }
  EmbeddingVector v = compute();
  atomic_write(path, encode_entry(kKindVec, vec_payload(v)));
  return v;
}

std::string EmbeddingCache::get_or_compute_text(
    const std::string& backend_id, const std::string& content_hash,
    const std::function<std::string()>& compute) {
  const auto path = entry_path(backend_id, content_hash, ".txt");
  bool corrupt = false;
  if (auto payload = decode_entry(path, kKindText, &corrupt)) {
    return *payload;
  }
  if (corrupt) {
    std::cerr << "[styleval] warning: corrupt cache entry " << path.string()
              << ", recomputing\n";
  }
  std::string text = compute();
  atomic_write(path, encode_entry(kKindText, text));
  return text;
}

EmbeddingVector Embedder::image(const std::string& backend_id,
                                const Image& img) const {
  const Backend& backend = registry_->at(backend_id);
  const std::string key = backend_id + "/img/" + img.content_hash();
  {
    std::lock_guard lock(mu_);
    if (auto it = memo_vec_.find(key); it != memo_vec_.end()) return it->second;
  }
  EmbeddingVector v;
  if (cache_) {
    v = cache_->get_or_compute_vec(backend_id, img.content_hash(),
                                   [&] { return backend.embed_image(img); });
  } else {
    v = backend.embed_image(img);
  }
  std::lock_guard lock(mu_);
  memo_vec_.emplace(key, v);
  return v;
}

EmbeddingVector Embedder::text(const std::string& backend_id,
                               const std::string& text) const {
  const Backend& backend = registry_->at(backend_id);
  const std::string key = backend_id + "/txt/" + sha256_hex(text);
  {
    std::lock_guard lock(mu_);
    if (auto it = memo_vec_.find(key); it != memo_vec_.end()) return it->second;
  }
  EmbeddingVector v;
  if (cache_) {
    v = cache_->get_or_compute_vec(backend_id, sha256_hex("text:" + text),
                                   [&] { return backend.embed_text(text); });
  } else {
    v = backend.embed_text(text);
  }
  std::lock_guard lock(mu_);
  memo_vec_.emplace(key, v);
  return v;
}

std::string Embedder::caption(const std::string& backend_id, const Image& img,
                              const std::string& prompt) const {
  const Backend& backend = registry_->at(backend_id);
  const std::string& effective_prompt =
      prompt.empty() ? attribute_prompt() : prompt;
  const std::string content_hash =
      sha256_hex(img.content_hash() + ":" + sha256_hex(effective_prompt));
  const std::string key = backend_id + "/cap/" + content_hash;
  {
    std::lock_guard lock(mu_);
    if (auto it = memo_text_.find(key); it != memo_text_.end()) return it->second;
  }
  std::string c;
  if (cache_) {
    c = cache_->get_or_compute_text(backend_id, content_hash, [&] {
      return backend.caption(img, effective_prompt);
    });
  } else {
    c = backend.caption(img, effective_prompt);
  }
  std::lock_guard lock(mu_);
  memo_text_.emplace(key, c);
  return c;
}

}  // namespace styleval
