#include <doctest.h>

#include <cstring>
#include <fstream>

#include "styleval/backends.hpp"
#include "styleval/cache.hpp"
#include "styleval/errors.hpp"
#include "styleval/rng.hpp"
#include "styleval/synthetic.hpp"
#include "testutil.hpp"

using namespace styleval;

TEST_SUITE("embedding") {

TEST_CASE("reference image embedder equals the documented statistics vector") {
  Registry reg = make_default_registry();
  Image red = synthetic::solid(64, 64, {255, 0, 0});
  EmbeddingVector v = reg.at("ref-stat").embed_image(red);
  REQUIRE(v.dim() == kernels::kStatsDim);
  const auto oracle = testutil::stats_oracle(red);
  for (int i = 0; i < v.dim(); ++i) {
    CHECK(v.values[i] == doctest::Approx(oracle[i]).epsilon(1e-7));
  }
  // Solid red: mean_R = 1, variances 0, every patch mean (1,0,0).
  CHECK(v.values[0] == doctest::Approx(1.0));
  CHECK(v.values[3] == doctest::Approx(0.0));
  CHECK(v.values[6] == doctest::Approx(1.0));

  EmbeddingVector again = reg.at("ref-stat").embed_image(red);
  CHECK(v.values == again.values);
}

TEST_CASE("corrupted image file raises DecodeError") {
  testutil::TempDir tmp;
  const auto path = tmp / "broken.png";
  {
    std::ofstream out(path, std::ios::binary);
    out << "\x89PNG\r\n\x1a\nnot really a png";
  }
  CHECK_THROWS_AS(load_image(path), Error);
  try {
    load_image(path);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::decode_error);
  }
}

TEST_CASE("jpeg round-trips through the decoder") {
  testutil::TempDir tmp;
  Image img = synthetic::solid(32, 32, {200, 100, 50});
  save_jpeg(img, tmp / "x.jpg", 95);
  Image back = load_image(tmp / "x.jpg");
  CHECK(back.width == 32);
  CHECK(back.height == 32);
  // Lossy, but a solid field survives within a small tolerance.
  CHECK(std::abs(int(back.at(16, 16)[0]) - 200) <= 4);
}

TEST_CASE("hash-bag text embedding matches the hand-computed buckets") {
  const int dim = kJointDim;
  EmbeddingVector v = hash_bag_embed("a red square", dim, "ref-joint");
  std::vector<float> expected(dim, 0.0f);
  for (const std::string tok : {"a", "red", "square"}) {
    expected[testutil::fnv_oracle(tok) % dim] += 1.0f;
  }
  CHECK(v.values == expected);
}

TEST_CASE("empty text embeds to the zero vector; identical strings agree") {
  Registry reg = make_default_registry();
  EmbeddingVector zero = reg.at("ref-joint").embed_text("");
  CHECK(zero.dim() == kJointDim);
  CHECK(zero.is_zero());
  EmbeddingVector a = reg.at("ref-joint").embed_text("The Starry Night");
  EmbeddingVector b = reg.at("ref-joint").embed_text("The Starry Night");
  CHECK(a.values == b.values);
}

TEST_CASE("tokenizer keeps attribute tokens whole") {
  const auto tokens = tokenize("Brightness:HIGH, contrast:low (POV)");
  REQUIRE(tokens.size() == 3);
  CHECK(tokens[0] == "brightness:high");
  CHECK(tokens[1] == "contrast:low");
  CHECK(tokens[2] == "pov");
}

TEST_CASE("cosine basics") {
  auto vec = [](std::vector<float> v) {
    return EmbeddingVector{std::move(v), "t"};
  };
  CHECK(cosine(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
  CHECK(cosine(vec({2, 0}), vec({1, 0})) == doctest::Approx(1.0));

  bool degenerate = false;
  CHECK(cosine(vec({0, 0}), vec({1, 0}), &degenerate) == 0.0);
  CHECK(degenerate);

  EmbeddingVector other{{1, 0}, "other"};
  CHECK_THROWS_AS(cosine(vec({1, 0}), other), Error);
  EmbeddingVector longer{{1, 0, 0}, "t"};
  CHECK_THROWS_AS(cosine(vec({1, 0}), longer), Error);
}

TEST_CASE("cosine matches the formula oracle on random dim-8 vectors") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> u(8), v(8);
    EmbeddingVector eu, ev;
    eu.backend_id = ev.backend_id = "t";
    for (int i = 0; i < 8; ++i) {
      u[i] = rng.uniform(-1.0, 1.0);
      v[i] = rng.uniform(-1.0, 1.0);
      eu.values.push_back(static_cast<float>(u[i]));
      ev.values.push_back(static_cast<float>(v[i]));
    }
    // Oracle over the float-rounded values the implementation sees.
    std::vector<double> uf(eu.values.begin(), eu.values.end());
    std::vector<double> vf(ev.values.begin(), ev.values.end());
    CHECK(cosine(eu, ev) ==
          doctest::Approx(testutil::cosine_oracle(uf, vf)).epsilon(1e-9));
  }
}

TEST_CASE("cosine properties: symmetry, bounds, self-similarity, scale invariance") {
  Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = rng.uniform_int(2, 16);
    EmbeddingVector u, v;
    u.backend_id = v.backend_id = "t";
    for (int i = 0; i < dim; ++i) {
      u.values.push_back(static_cast<float>(rng.uniform(-3.0, 3.0)));
      v.values.push_back(static_cast<float>(rng.uniform(-3.0, 3.0)));
    }
    if (u.is_zero() || v.is_zero()) continue;
    const double c = cosine(u, v);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
    CHECK(cosine(v, u) == doctest::Approx(c).epsilon(1e-12));
    CHECK(cosine(u, u) == doctest::Approx(1.0).epsilon(1e-12));
    EmbeddingVector scaled = v;
    const float k = static_cast<float>(rng.uniform(0.1, 5.0));
    for (float& x : scaled.values) x *= k;
    CHECK(cosine(u, scaled) == doctest::Approx(c).epsilon(1e-6));
  }
}

TEST_CASE("reference captioner reports contrast buckets") {
  Registry reg = make_default_registry();
  // Half black / half white: high luminance stddev.
  Image hi = synthetic::hstripes(32, 32, 8, {255, 255, 255}, {0, 0, 0});
  const std::string cap_hi = reg.at("ref-cap").caption(hi, attribute_prompt());
  CHECK(cap_hi.find("contrast:high") != std::string::npos);

  Image flat = synthetic::solid(32, 32, {128, 128, 128});
  const std::string cap_flat = reg.at("ref-cap").caption(flat, attribute_prompt());
  CHECK(cap_flat.find("contrast:low") != std::string::npos);

  CHECK(reg.at("ref-cap").caption(hi, attribute_prompt()) == cap_hi);
}

TEST_CASE("default prompt ships as a resource file and names the attributes") {
  const std::string& prompt = attribute_prompt();
  CHECK(prompt.find("composition, balance, color harmony, lighting") !=
        std::string::npos);
  CHECK(prompt.find("foreground and background interaction") != std::string::npos);

  std::ifstream f(std::string(STYLEVAL_SOURCE_DIR) +
                  "/resources/attribute_prompt.txt");
  REQUIRE(f.good());
  std::string file_prompt((std::istreambuf_iterator<char>(f)), {});
  while (!file_prompt.empty() &&
         (file_prompt.back() == '\n' || file_prompt.back() == '\r')) {
    file_prompt.pop_back();
  }
  CHECK(file_prompt == prompt);
}

TEST_CASE("captioner path through Embedder uses the default prompt when omitted") {
  Registry reg = make_default_registry();
  Embedder emb(&reg, nullptr);
  Image img = synthetic::solid(16, 16, {30, 160, 90});
  CHECK(emb.caption("ref-cap", img) == emb.caption("ref-cap", img, attribute_prompt()));
}

TEST_CASE("unavailable pretrained backends are registered but refuse to run") {
  Registry reg = make_default_registry();
  REQUIRE(reg.has("clip-vit-large-patch14"));
  REQUIRE(reg.has("dinov2-large"));
  CHECK(reg.at("dinov2-large").descriptor().dimension == 1024);
  Image img = synthetic::solid(8, 8, {1, 2, 3});
  CHECK_THROWS_AS(reg.at("clip-vit-large-patch14").embed_image(img), Error);
  try {
    reg.at("dinov2-large").embed_image(img);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::backend_unavailable);
  }
  CHECK_THROWS_AS(reg.at("missing-backend"), Error);
}

TEST_CASE("cache memoizes: second call does no backend compute") {
  testutil::TempDir tmp;
  Registry reg = make_default_registry();
  EmbeddingCache cache(tmp / "cache");
  Embedder emb(&reg, &cache);
  Image img = synthetic::solid(24, 24, {9, 120, 200});

  reset_backend_compute_calls();
  EmbeddingVector first = emb.image("ref-stat", img);
  const auto after_first = backend_compute_calls();
  CHECK(after_first == 1);

  Embedder emb2(&reg, &cache);  // fresh memo, same disk cache
  EmbeddingVector second = emb2.image("ref-stat", img);
  CHECK(backend_compute_calls() == after_first);
  CHECK(first.values == second.values);
}

TEST_CASE("same image under different backends gets distinct cache entries") {
  testutil::TempDir tmp;
  Registry reg = make_default_registry();
  EmbeddingCache cache(tmp / "cache");
  Embedder emb(&reg, &cache);
  Image img = synthetic::solid(24, 24, {80, 80, 80});
  emb.image("ref-stat", img);
  emb.image("ref-fuse", img);
  const std::string hash = img.content_hash();
  CHECK(std::filesystem::exists(tmp.path() / "cache" / "ref-stat" /
                                hash.substr(0, 2) / (hash + ".vec")));
  CHECK(std::filesystem::exists(tmp.path() / "cache" / "ref-fuse" /
                                hash.substr(0, 2) / (hash + ".vec")));
}

TEST_CASE("corrupt cache entry is recomputed and repaired") {
  testutil::TempDir tmp;
  Registry reg = make_default_registry();
  EmbeddingCache cache(tmp / "cache");
  Embedder emb(&reg, &cache);
  Image img = synthetic::solid(24, 24, {50, 60, 70});
  EmbeddingVector good = emb.image("ref-stat", img);

  const std::string hash = img.content_hash();
  const auto entry = tmp.path() / "cache" / "ref-stat" / hash.substr(0, 2) /
                     (hash + ".vec");
  REQUIRE(std::filesystem::exists(entry));
  {
    std::ofstream out(entry, std::ios::binary);
    out << "garbage";
  }
  Embedder emb2(&reg, &cache);
  reset_backend_compute_calls();
  EmbeddingVector repaired = emb2.image("ref-stat", img);
  CHECK(backend_compute_calls() == 1);  // recomputed
  CHECK(repaired.values == good.values);

  Embedder emb3(&reg, &cache);
  reset_backend_compute_calls();
  EmbeddingVector cached = emb3.image("ref-stat", img);
  CHECK(backend_compute_calls() == 0);  // entry was repaired on disk
  CHECK(cached.values == good.values);
}

TEST_CASE("cache round-trip is bit-exact") {
  testutil::TempDir tmp;
  Registry reg = make_default_registry();
  EmbeddingCache cache(tmp / "cache");
  Rng rng(61);
  Embedder emb(&reg, &cache);
  for (int trial = 0; trial < 5; ++trial) {
    Image img = synthetic::noise(20, 20, rng);
    EmbeddingVector computed = emb.image("ref-stat", img);
    Embedder fresh(&reg, &cache);
    EmbeddingVector loaded = fresh.image("ref-stat", img);
    REQUIRE(loaded.values.size() == computed.values.size());
    for (std::size_t i = 0; i < loaded.values.size(); ++i) {
      CHECK(std::memcmp(&loaded.values[i], &computed.values[i], sizeof(float)) == 0);
    }
  }
}

}  // TEST_SUITE
