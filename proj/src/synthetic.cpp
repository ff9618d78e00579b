#include "styleval/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "styleval/backends.hpp"
#include "styleval/errors.hpp"

namespace styleval::synthetic {

namespace {

std::uint8_t clamp8(double v) {
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

Rgb jitter(Rgb c, Rng& rng, double amount = 18.0) {
  return Rgb{clamp8(c.r + rng.uniform(-amount, amount)),
             clamp8(c.g + rng.uniform(-amount, amount)),
             clamp8(c.b + rng.uniform(-amount, amount))};
}

std::string zero_pad(int v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

Image solid(int w, int h, Rgb c) {
  Image img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (int i = 0; i < w * h; ++i) {
    img.pixels[3 * i] = c.r;
    img.pixels[3 * i + 1] = c.g;
    img.pixels[3 * i + 2] = c.b;
  }
  return img;
}

Image hstripes(int w, int h, int period, Rgb a, Rgb b, int phase) {
  Image img = solid(w, h, a);
  for (int y = 0; y < h; ++y) {
    const Rgb& c = ((y + phase) / period) % 2 == 0 ? a : b;
    for (int x = 0; x < w; ++x) {
      std::uint8_t* p = img.at(y, x);
      p[0] = c.r;
      p[1] = c.g;
      p[2] = c.b;
    }
  }
  return img;
}

Image vstripes(int w, int h, int period, Rgb a, Rgb b, int phase) {
  Image img = solid(w, h, a);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgb& c = ((x + phase) / period) % 2 == 0 ? a : b;
      std::uint8_t* p = img.at(y, x);
      p[0] = c.r;
      p[1] = c.g;
      p[2] = c.b;
    }
  }
  return img;
}

Image checker(int w, int h, int cell, Rgb a, Rgb b) {
  Image img = solid(w, h, a);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgb& c = ((y / cell) + (x / cell)) % 2 == 0 ? a : b;
      std::uint8_t* p = img.at(y, x);
      p[0] = c.r;
      p[1] = c.g;
      p[2] = c.b;
    }
  }
  return img;
}

Image vgradient(int w, int h, Rgb top, Rgb bottom) {
  Image img = solid(w, h, top);
  for (int y = 0; y < h; ++y) {
    const double t = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
    const Rgb c{clamp8(top.r + t * (bottom.r - top.r)),
                clamp8(top.g + t * (bottom.g - top.g)),
                clamp8(top.b + t * (bottom.b - top.b))};
    for (int x = 0; x < w; ++x) {
      std::uint8_t* p = img.at(y, x);
      p[0] = c.r;
      p[1] = c.g;
      p[2] = c.b;
    }
  }
  return img;
}

Image noise(int w, int h, Rng& rng) {
  Image img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::uint8_t& p : img.pixels) {
    p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  }
  return img;
}

Image blend(const Image& a, const Image& b, double t) {
  if (a.width != b.width || a.height != b.height) {
    throw Error(Errc::bad_config, "blend requires equal image sizes");
  }
  Image out = a;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = clamp8((1.0 - t) * a.pixels[i] + t * b.pixels[i]);
  }
  return out;
}

Image toy_style_image(const std::string& style, int size, Rng& rng) {
  // Distinct palettes keep the four styles linearly separable under the
  // statistics embedder, which is what the toy training contract needs.
  if (style == "hstripes") {
    const Rgb warm{220, 60, 40}, dark{120, 20, 20};
    return hstripes(size, size, rng.uniform_int(3, 6), jitter(warm, rng),
                    jitter(dark, rng), rng.uniform_int(0, 7));
  }
  if (style == "vstripes") {
    const Rgb cool{40, 70, 220}, pale{150, 180, 240};
    return vstripes(size, size, rng.uniform_int(3, 6), jitter(cool, rng),
                    jitter(pale, rng), rng.uniform_int(0, 7));
  }
  if (style == "checker") {
    const Rgb leaf{40, 180, 60}, moss{10, 90, 30};
    return checker(size, size, rng.uniform_int(2, 5), jitter(leaf, rng),
                   jitter(moss, rng));
  }
  if (style == "gradient") {
    const Rgb light{230, 230, 230}, dim{60, 60, 60};
    return vgradient(size, size, jitter(light, rng, 12), jitter(dim, rng, 12));
  }
  throw Error(Errc::bad_config, "unknown toy style '" + style + "'");
}

ToyStyleCorpus write_toy_style_corpus(const std::filesystem::path& dir,
                                      int per_style, int heldout_per_style,
                                      std::uint64_t seed, int size) {
  namespace fs = std::filesystem;
  ToyStyleCorpus corpus;
  Rng rng(seed);
  for (const std::string& label : toy_style_labels()) {
    fs::create_directories(dir / label);
    for (int i = 0; i < per_style; ++i) {
      Image img = toy_style_image(label, size, rng);
      fs::path path = dir / label / (zero_pad(i, 3) + ".png");
      save_png(img, path);
      StyleLabeledImage entry{path.string(), label};
      corpus.all.push_back(entry);
      if (i < per_style - heldout_per_style) {
        corpus.train.push_back(entry);
      } else {
        corpus.heldout.push_back(entry);
      }
    }
  }
  return corpus;
}

double toy_rating(const kernels::StatsVector& stats) {
  return 4.0 + 2.0 * stats[0] + 1.0 * stats[1] + 0.5 * stats[2];
}

ToyRatedCorpus write_rated_corpus(const std::filesystem::path& dir, int n,
                                  std::uint64_t seed, double noise_sigma,
                                  int prototypes,
                                  const std::string& corpus_id) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  Rng rng(seed);

  std::vector<Image> protos;
  const int distinct = prototypes > 0 ? prototypes : n;
  for (int i = 0; i < distinct; ++i) {
    // Flat color field plus a gradient wash: smooth variation in channel
    // means across the corpus.
    const Rgb base{static_cast<std::uint8_t>(rng.uniform_int(20, 235)),
                   static_cast<std::uint8_t>(rng.uniform_int(20, 235)),
                   static_cast<std::uint8_t>(rng.uniform_int(20, 235))};
    protos.push_back(vgradient(24, 24, jitter(base, rng, 25), jitter(base, rng, 25)));
  }

  ToyRatedCorpus out;
  out.csv = dir / "ratings.csv";
  std::vector<std::string> lines;
  for (int i = 0; i < n; ++i) {
    const Image& img = protos[i % distinct];
    fs::path path = dir / (zero_pad(i, 3) + ".png");
    save_png(img, path);
    double rating = toy_rating(kernels::image_stats(img));
    if (noise_sigma > 0.0) rating += noise_sigma * rng.normal();
    RatedImage r;
    r.image_path = path.string();
    r.score = rating;
    r.corpus_id = corpus_id;
    out.images.push_back(r);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", rating);
    lines.push_back(path.filename().string() + "," + buf + "," + corpus_id);
  }
  std::ofstream csv(out.csv, std::ios::binary);
  csv << "image_path,score,corpus_id\n";
  for (const std::string& line : lines) csv << line << "\n";
  return out;
}

ToyManifest write_toy_manifest(const std::filesystem::path& dir, int groups,
                               int candidates, std::uint64_t seed, int size) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  Rng rng(seed);
  ToyManifest out;
  out.manifest_path = dir / "manifest.jsonl";
  const auto& labels = toy_style_labels();

  for (int g = 0; g < groups; ++g) {
    const std::string gid = "g" + zero_pad(g, 3);
    // Content: a smooth two-tone scene; style: one of the toy textures.
    Image content = vgradient(size, size,
                              Rgb{static_cast<std::uint8_t>(rng.uniform_int(90, 230)),
                                  static_cast<std::uint8_t>(rng.uniform_int(90, 230)),
                                  static_cast<std::uint8_t>(rng.uniform_int(90, 230))},
                              Rgb{static_cast<std::uint8_t>(rng.uniform_int(10, 120)),
                                  static_cast<std::uint8_t>(rng.uniform_int(10, 120)),
                                  static_cast<std::uint8_t>(rng.uniform_int(10, 120))});
    Image style = toy_style_image(labels[g % labels.size()], size, rng);

    const std::string content_rel = "images/" + gid + "_content.png";
    const std::string style_rel = "images/" + gid + "_style.png";
    save_png(content, dir / content_rel);
    save_png(style, dir / style_rel);
    const std::string caption = reference_caption(content);

    for (int c = 0; c < candidates; ++c) {
      // Each generator blends a different amount of style in; quality
      // differs per candidate, which is the point of best-of-N.
      const double t = candidates > 1
                           ? 0.2 + 0.6 * static_cast<double>(c) / (candidates - 1)
                           : 0.5;
      Image stylized = blend(content, style, t);
      const std::string stylized_rel =
          "images/" + gid + "_cand" + std::to_string(c) + ".png";
      save_png(stylized, dir / stylized_rel);

      Triplet t3;
      t3.triplet_id = gid + "-c" + std::to_string(c);
      t3.content_path = content_rel;
      t3.style_path = style_rel;
      t3.stylized_path = stylized_rel;
      t3.content_caption = caption;
      t3.style_category = labels[g % labels.size()];
      t3.generator_id = "gen-" + std::to_string(c);
      t3.group_id = gid;
      out.manifest.entries.push_back(std::move(t3));
    }
  }
  out.manifest.metadata["source"] = "synthetic toy manifest";
  write_manifest(out.manifest, out.manifest_path);
  return out;
}

ToyBenchmark write_toy_benchmark(const std::filesystem::path& dir,
                                 int contents, int styles, std::uint64_t seed,
                                 int size) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "contents");
  fs::create_directories(dir / "styles");
  Rng rng(seed);
  const auto& labels = toy_style_labels();

  nlohmann::json spec;
  spec["mode"] = "image_guided";
  nlohmann::json content_arr = nlohmann::json::array();
  std::vector<Image> content_imgs, style_imgs;
  for (int i = 0; i < contents; ++i) {
    Image img = vgradient(size, size,
                          Rgb{static_cast<std::uint8_t>(rng.uniform_int(120, 240)),
                              static_cast<std::uint8_t>(rng.uniform_int(120, 240)),
                              static_cast<std::uint8_t>(rng.uniform_int(120, 240))},
                          Rgb{static_cast<std::uint8_t>(rng.uniform_int(10, 110)),
                              static_cast<std::uint8_t>(rng.uniform_int(10, 110)),
                              static_cast<std::uint8_t>(rng.uniform_int(10, 110))});
    const std::string id = "c" + std::to_string(i);
    const std::string rel = "contents/" + id + ".png";
    save_png(img, dir / rel);
    content_imgs.push_back(std::move(img));
    content_arr.push_back({{"id", id}, {"path", rel}});
  }
  nlohmann::json style_arr = nlohmann::json::array();
  for (int i = 0; i < styles; ++i) {
    Image img = toy_style_image(labels[i % labels.size()], size, rng);
    const std::string id = "s" + std::to_string(i);
    const std::string rel = "styles/" + id + ".png";
    save_png(img, dir / rel);
    style_imgs.push_back(std::move(img));
    style_arr.push_back({{"id", id}, {"path", rel}});
  }
  spec["content_images"] = std::move(content_arr);
  spec["style_images"] = std::move(style_arr);

  ToyBenchmark out;
  out.spec_path = dir / "spec.json";
  {
    std::ofstream f(out.spec_path, std::ios::binary);
    f << spec.dump(2) << "\n";
  }
  out.methods_dir = dir / "methods";
  out.method_ids = {"copy-content", "copy-style"};
  for (const std::string& method : out.method_ids) {
    fs::create_directories(out.methods_dir / method);
  }
  for (int ci = 0; ci < contents; ++ci) {
    for (int si = 0; si < styles; ++si) {
      const std::string name =
          "c" + std::to_string(ci) + "__s" + std::to_string(si) + ".png";
      save_png(content_imgs[ci], out.methods_dir / "copy-content" / name);
      save_png(style_imgs[si], out.methods_dir / "copy-style" / name);
    }
  }
  return out;
}

}  // namespace styleval::synthetic
