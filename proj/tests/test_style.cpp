#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "styleval/backends.hpp"
#include "styleval/errors.hpp"
#include "styleval/style.hpp"
#include "styleval/synthetic.hpp"
#include "testutil.hpp"

using namespace styleval;
using kernels::DMat;

namespace {

EmbeddingVector unit_vec(std::vector<float> v) {
  double sq = 0;
  for (float x : v) sq += double(x) * x;
  const double inv = 1.0 / std::sqrt(sq);
  for (float& x : v) x = static_cast<float>(x * inv);
  return EmbeddingVector{std::move(v), "test"};
}

// Shared toy corpus + trained checkpoint; training once keeps the suite fast.
struct ToyTraining {
  testutil::TempDir tmp;
  Registry reg = make_default_registry();
  Embedder emb{&reg, nullptr};
  synthetic::ToyStyleCorpus corpus;
  StyleEncoderCheckpoint ckpt;

  ToyTraining() {
    corpus = synthetic::write_toy_style_corpus(tmp / "styles", 32, 8, 7, 32);
    ContrastiveTrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 42;
    ckpt = train_style_encoder(corpus.train, cfg, emb);
  }
};

ToyTraining& toy() {
  static ToyTraining instance;
  return instance;
}

}  // namespace

TEST_SUITE("style") {

TEST_CASE("build_pairs: tiny corpus forces both labels into every batch") {
  std::vector<StyleLabeledImage> corpus = {
      {"a0.png", "a"}, {"a1.png", "a"}, {"b0.png", "b"}, {"b1.png", "b"}};
  const auto batches = build_pairs(corpus, 3, 4);
  REQUIRE(!batches.empty());
  for (const auto& batch : batches) {
    std::set<std::string> labels;
    for (int i : batch) labels.insert(corpus[i].style_label);
    CHECK(labels.size() == 2);
  }
}

TEST_CASE("build_pairs: single usable label is an error") {
  std::vector<StyleLabeledImage> corpus = {
      {"a0.png", "a"}, {"a1.png", "a"}, {"b0.png", "b"}};
  CHECK_THROWS_AS(build_pairs(corpus, 3, 4), Error);
  try {
    build_pairs(corpus, 3, 4);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::insufficient_labels);
  }
}

TEST_CASE("build_pairs: fixed seed reproduces the batch sequence") {
  std::vector<StyleLabeledImage> corpus;
  for (int label = 0; label < 3; ++label) {
    for (int i = 0; i < 8; ++i) {
      corpus.push_back({"img" + std::to_string(label * 8 + i) + ".png",
                        "style" + std::to_string(label)});
    }
  }
  CHECK(build_pairs(corpus, 99, 8) == build_pairs(corpus, 99, 8));
  CHECK(build_pairs(corpus, 99, 8) != build_pairs(corpus, 100, 8));

  // Every batch must expose a positive and a negative to each anchor.
  for (const auto& batch : build_pairs(corpus, 99, 8)) {
    for (int i : batch) {
      int positives = 0, negatives = 0;
      for (int j : batch) {
        if (j == i) continue;
        (corpus[j].style_label == corpus[i].style_label ? positives : negatives)++;
      }
      CHECK(positives >= 1);
      CHECK(negatives >= 1);
    }
  }
}

TEST_CASE("contrastive loss nears zero in the separated limit") {
  // One positive per anchor at cosine 1, negatives at cosine -1.
  std::vector<EmbeddingVector> embs = {
      unit_vec({1, 0}), unit_vec({1, 0}), unit_vec({-1, 0}), unit_vec({-1, 0})};
  std::vector<std::string> labels = {"a", "a", "b", "b"};
  const double loss = contrastive_loss(embs, labels, 0.01);
  CHECK(loss >= 0.0);
  CHECK(loss < 1e-12);
}

TEST_CASE("identical embeddings give log(K) for K candidates per anchor") {
  for (int n : {4, 6, 9}) {
    std::vector<EmbeddingVector> embs;
    std::vector<std::string> labels;
    for (int i = 0; i < n; ++i) {
      embs.push_back(unit_vec({0.6f, 0.8f}));
      labels.push_back(i % 2 == 0 ? "a" : "b");
    }
    const double loss = contrastive_loss(embs, labels, 0.07);
    CHECK(loss == doctest::Approx(std::log(n - 1)).epsilon(1e-9));
  }
}

TEST_CASE("contrastive loss matches the brute-force oracle on random batches") {
  Rng rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.uniform_int(4, 12);
    const int dim = rng.uniform_int(2, 8);
    std::vector<EmbeddingVector> embs;
    std::vector<std::vector<double>> z;
    std::vector<std::string> labels;
    for (int i = 0; i < n; ++i) {
      std::vector<float> v(dim);
      for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
      EmbeddingVector e = unit_vec(v);
      z.emplace_back(e.values.begin(), e.values.end());
      embs.push_back(std::move(e));
      labels.push_back("s" + std::to_string(rng.uniform_int(0, 2)));
    }
    // Ensure at least one positive pair exists.
    labels[1] = labels[0];
    const double got = contrastive_loss(embs, labels, 0.07);
    const double want = testutil::supcon_oracle(z, labels, 0.07);
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("no positive pair is an error") {
  std::vector<EmbeddingVector> embs = {unit_vec({1, 0}), unit_vec({0, 1})};
  std::vector<std::string> labels = {"a", "b"};
  CHECK_THROWS_AS(contrastive_loss(embs, labels, 0.07), Error);
}

TEST_CASE("head gradient matches finite differences") {
  Rng rng(73);
  const int n = 6, base_dim = 5;
  DMat base(n, base_dim);
  for (double& v : base.a) v = rng.uniform(-1.0, 1.0);
  std::vector<std::string> labels = {"a", "a", "b", "b", "c", "c"};

  Mlp head(base_dim, {4, 3});
  head.init(rng);
  std::vector<double> grad;
  style_head_loss(head, base, labels, 0.07, &grad);

  const double h = 1e-6;
  for (std::size_t p = 0; p < head.params().size(); p += 3) {
    const double saved = head.params()[p];
    head.params()[p] = saved + h;
    const double up = style_head_loss(head, base, labels, 0.07);
    head.params()[p] = saved - h;
    const double down = style_head_loss(head, base, labels, 0.07);
    head.params()[p] = saved;
    const double fd = (up - down) / (2 * h);
    CHECK(grad[p] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("toy training: loss shrinks and heldout Rank1 is perfect") {
  const auto& t = toy();
  REQUIRE(t.ckpt.train_metrics.size() == 10);
  CHECK(t.ckpt.train_metrics.back().second <= t.ckpt.train_metrics.front().second);

  const RetrievalResult res =
      retrieval_eval(t.corpus.heldout, t.corpus.heldout, t.ckpt, t.emb);
  CHECK(res.rank1 == doctest::Approx(1.0));
  CHECK(res.rank1 <= res.rank5);
  CHECK(res.rank5 <= res.rank10);
}

TEST_CASE("same seed reproduces train metrics exactly") {
  const auto& t = toy();
  ContrastiveTrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 42;
  StyleEncoderCheckpoint a = train_style_encoder(t.corpus.train, cfg, t.emb);
  StyleEncoderCheckpoint b = train_style_encoder(t.corpus.train, cfg, t.emb);
  CHECK(a.train_metrics == b.train_metrics);
  CHECK(a.head.params() == b.head.params());
}

TEST_CASE("epochs=0 equals the seeded head initialization") {
  const auto& t = toy();
  ContrastiveTrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 42;
  StyleEncoderCheckpoint trained = train_style_encoder(t.corpus.train, cfg, t.emb);
  StyleEncoderCheckpoint init = init_style_checkpoint(cfg, kernels::kStatsDim);
  CHECK(trained.head.params() == init.head.params());
  CHECK(trained.train_metrics.empty());
}

TEST_CASE("full-encoder fine-tuning flag is rejected for reference backends") {
  const auto& t = toy();
  ContrastiveTrainConfig cfg;
  cfg.finetune_base = true;
  CHECK_THROWS_AS(train_style_encoder(t.corpus.train, cfg, t.emb), Error);
}

TEST_CASE("style_score: identity, symmetry, and within/cross separation") {
  const auto& t = toy();
  Image x = load_image(t.corpus.heldout[0].image_path);
  CHECK(style_score(x, x, t.ckpt, t.emb) == doctest::Approx(1.0));

  Image y = load_image(t.corpus.heldout.back().image_path);
  CHECK(style_score(x, y, t.ckpt, t.emb) ==
        doctest::Approx(style_score(y, x, t.ckpt, t.emb)).epsilon(1e-9));

  // Exhaustive pairwise comparison over the heldout set: every same-style
  // pair must beat every cross-style pair.
  double min_within = 2.0, max_cross = -2.0;
  for (std::size_t i = 0; i < t.corpus.heldout.size(); ++i) {
    for (std::size_t j = i + 1; j < t.corpus.heldout.size(); ++j) {
      Image a = load_image(t.corpus.heldout[i].image_path);
      Image b = load_image(t.corpus.heldout[j].image_path);
      const double s = style_score(a, b, t.ckpt, t.emb);
      CHECK(s >= -1.0);
      CHECK(s <= 1.0);
      if (t.corpus.heldout[i].style_label == t.corpus.heldout[j].style_label) {
        min_within = std::min(min_within, s);
      } else {
        max_cross = std::max(max_cross, s);
      }
    }
  }
  CHECK(min_within > max_cross);
}

TEST_CASE("rank_at_k: constructed geometry puts the only match at rank 7") {
  // 12 keys with descending cosine against the query; the only same-label
  // key sits at sorted position 7.
  const int dim = 13;
  DMat query(1, dim);
  query.at(0, 0) = 1.0;
  DMat keys(12, dim);
  std::vector<std::string> key_labels;
  for (int j = 0; j < 12; ++j) {
    const double c = 0.95 - 0.1 * j;
    keys.at(j, 0) = c;
    keys.at(j, j + 1) = std::sqrt(1.0 - c * c);
    key_labels.push_back(j == 6 ? "target" : "other" + std::to_string(j));
  }
  std::vector<std::string> query_labels = {"target"};
  const RetrievalResult res = rank_at_k(query, query_labels, keys, key_labels);
  CHECK(res.rank1 == doctest::Approx(0.0));
  CHECK(res.rank5 == doctest::Approx(0.0));
  CHECK(res.rank10 == doctest::Approx(1.0));
}

TEST_CASE("rank_at_k: ties break by key order") {
  const int dim = 2;
  DMat query(1, dim);
  query.at(0, 0) = 1.0;
  DMat keys(3, dim);
  for (int j = 0; j < 3; ++j) keys.at(j, 0) = 1.0;  // all tied at cosine 1
  std::vector<std::string> key_labels = {"first", "second", "target"};
  std::vector<std::string> query_labels = {"second"};
  const RetrievalResult res = rank_at_k(query, query_labels, keys, key_labels);
  // The tied same-label key sits at index 1 -> rank 2.
  CHECK(res.rank1 == doctest::Approx(0.0));
  CHECK(res.rank5 == doctest::Approx(1.0));
}

TEST_CASE("rank_at_k: missing label among keys is an error") {
  DMat query(1, 2);
  query.at(0, 0) = 1.0;
  DMat keys(1, 2);
  keys.at(0, 0) = 1.0;
  std::vector<std::string> ql = {"absent"}, kl = {"present"};
  CHECK_THROWS_AS(rank_at_k(query, ql, keys, kl), Error);
}

TEST_CASE("rank1 <= rank5 <= rank10 on random geometries") {
  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const int dim = 6, nq = 8, nk = 15;
    DMat q(nq, dim), k(nk, dim);
    for (double& v : q.a) v = rng.uniform(-1.0, 1.0);
    for (double& v : k.a) v = rng.uniform(-1.0, 1.0);
    std::vector<std::string> ql, kl;
    for (int i = 0; i < nq; ++i) ql.push_back("l" + std::to_string(i % 3));
    for (int i = 0; i < nk; ++i) kl.push_back("l" + std::to_string(i % 3));
    const RetrievalResult res = rank_at_k(q, ql, k, kl);
    CHECK(res.rank1 <= res.rank5);
    CHECK(res.rank5 <= res.rank10);
  }
}

TEST_CASE("checkpoint save/load reproduces embeddings bit for bit") {
  const auto& t = toy();
  const auto path = t.tmp / "style.ckpt";
  save_style_checkpoint(t.ckpt, path);
  StyleEncoderCheckpoint loaded = load_style_checkpoint(path);
  CHECK(loaded.backend_id == t.ckpt.backend_id);
  CHECK(loaded.train_metrics == t.ckpt.train_metrics);
  CHECK(loaded.head.params() == t.ckpt.head.params());

  Image img = load_image(t.corpus.heldout[3].image_path);
  EmbeddingVector a = style_embed(img, t.ckpt, t.emb);
  EmbeddingVector b = style_embed(img, loaded, t.emb);
  CHECK(a.values == b.values);
  CHECK(a.backend_id == b.backend_id);
}

TEST_CASE("corrupt checkpoint is rejected") {
  const auto& t = toy();
  const auto path = t.tmp / "broken.ckpt";
  save_style_checkpoint(t.ckpt, path);
  // Flip one payload byte ahead of the checksum.
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(-9, std::ios::end);
  char c;
  f.read(&c, 1);
  f.seekp(-9, std::ios::end);
  c = static_cast<char>(c ^ 0x5a);
  f.write(&c, 1);
  f.close();
  try {
    load_style_checkpoint(path);
    FAIL("expected CheckpointCorrupt");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::checkpoint_corrupt);
  }
}

}  // TEST_SUITE
