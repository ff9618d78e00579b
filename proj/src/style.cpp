#include "styleval/style.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "styleval/checkpoint.hpp"
#include "styleval/errors.hpp"
#include "styleval/parallel.hpp"
#include "styleval/rng.hpp"

namespace styleval {

using kernels::DMat;

namespace {

std::string derive_backend_id(const ContrastiveTrainConfig& cfg) {
  std::ostringstream os;
  os << "style-head(" << cfg.base_backend;
  for (int d : cfg.head_dims) os << "." << d;
  os << ",supcon,t" << cfg.temperature << ",s" << cfg.seed << ")";
  return os.str();
}

void validate_config(const ContrastiveTrainConfig& cfg) {
  if (cfg.temperature <= 0.0) {
    throw Error(Errc::bad_config, "temperature must be > 0");
  }
  if (cfg.head_dims.empty()) {
    throw Error(Errc::bad_config, "head_dims must not be empty");
  }
  for (int d : cfg.head_dims) {
    if (d <= 0) throw Error(Errc::bad_config, "head dims must be positive");
  }
  if (cfg.batch_size < 4) {
    throw Error(Errc::bad_config, "batch_size must be at least 4 (two pairs)");
  }
  if (cfg.finetune_base) {
    throw Error(Errc::unsupported,
                "full-encoder fine-tuning requires a trainable backend "
                "adapter; reference backends train the projection head only");
  }
}

// Loss plus d(loss)/d(z) for already-normalized embeddings in Z (rows).
// Row gradients come out in dZ. Anchors without positives contribute no
// loss rows but still appear inside other anchors' denominators.
double supcon_loss_and_grad(const DMat& Z, const std::vector<int>& label_ids,
                            double temperature, DMat* dZ) {
  const int n = Z.rows;
  DMat sims;
  kernels::matmul_nt(Z, Z, sims);

  std::vector<int> pos_count(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i && label_ids[j] == label_ids[i]) ++pos_count[i];
    }
  }
  const int anchors = static_cast<int>(
      std::count_if(pos_count.begin(), pos_count.end(), [](int c) { return c > 0; }));
  if (anchors == 0) {
    throw Error(Errc::no_positive_pair, "batch has no positive pair");
  }

  // g_ij = softmax_ij - [j positive]/|P(i)| per anchor row.
  DMat g(n, n);
  std::vector<double> losses(n, 0.0);

#pragma omp parallel for schedule(static) if (parallel::enabled())
  for (int i = 0; i < n; ++i) {
    if (pos_count[i] == 0) continue;
    double row_max = -1e300;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      row_max = std::max(row_max, sims.at(i, j) / temperature);
    }
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      denom += std::exp(sims.at(i, j) / temperature - row_max);
    }
    const double log_denom = std::log(denom) + row_max;
    double loss_i = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double s = sims.at(i, j) / temperature;
      const double softmax = std::exp(s - row_max) / denom;
      const bool positive = label_ids[j] == label_ids[i];
      g.at(i, j) = softmax - (positive ? 1.0 / pos_count[i] : 0.0);
      if (positive) loss_i += s - log_denom;
    }
    losses[i] = -loss_i / pos_count[i];
  }

  double loss = 0.0;
  for (int i = 0; i < n; ++i) loss += losses[i];
  loss /= anchors;

  if (dZ) {
    *dZ = DMat(n, Z.cols);
    const double scale = 1.0 / (anchors * temperature);
#pragma omp parallel for schedule(static) if (parallel::enabled())
    for (int k = 0; k < n; ++k) {
      double* out = dZ->row(k);
      for (int j = 0; j < n; ++j) {
        if (j == k) continue;
        const double w = g.at(k, j);  // zero for anchors without positives
        if (w != 0.0) {
          const double* zj = Z.row(j);
          for (int c = 0; c < Z.cols; ++c) out[c] += scale * w * zj[c];
        }
      }
      for (int i = 0; i < n; ++i) {
        if (i == k) continue;
        const double w = g.at(i, k);
        if (w != 0.0) {
          const double* zi = Z.row(i);
          for (int c = 0; c < Z.cols; ++c) out[c] += scale * w * zi[c];
        }
      }
    }
  }
  return loss;
}

std::vector<int> label_ids_of(const std::vector<std::string>& labels) {
  std::map<std::string, int> ids;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const std::string& l : labels) {
    out.push_back(ids.try_emplace(l, static_cast<int>(ids.size())).first->second);
  }
  return out;
}

DMat embed_corpus(const std::vector<StyleLabeledImage>& corpus,
                  const std::string& backend_id, const Embedder& embedder,
                  int* dim_out) {
  DMat base;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EmbeddingVector v = embedder.image(backend_id, load_image(corpus[i].image_path));
    if (base.rows == 0) {
      base = DMat(static_cast<int>(corpus.size()), v.dim());
    }
    for (int c = 0; c < v.dim(); ++c) {
      base.at(static_cast<int>(i), c) = v.values[c];
    }
  }
  if (dim_out) *dim_out = base.cols;
  return base;
}

}  // namespace

std::vector<std::vector<int>> build_pairs(
    const std::vector<StyleLabeledImage>& corpus, std::uint64_t seed,
    int batch_size) {
  std::map<std::string, std::vector<int>> by_label;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].style_label.empty()) {
      throw Error(Errc::malformed_line,
                  "style label empty for " + corpus[i].image_path);
    }
    by_label[corpus[i].style_label].push_back(static_cast<int>(i));
  }
  std::vector<std::string> eligible;
  for (const auto& [label, idx] : by_label) {
    if (idx.size() >= 2) eligible.push_back(label);
  }
  if (eligible.size() < 2) {
    throw Error(Errc::insufficient_labels,
                "need at least 2 style labels with 2+ images, have " +
                    std::to_string(eligible.size()));
  }

  Rng rng(seed);
  // Pairs per label, images shuffled inside each label.
  std::vector<std::vector<std::pair<int, int>>> label_pairs;
  for (const std::string& label : eligible) {
    std::vector<int> idx = by_label[label];
    rng.shuffle(idx);
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t k = 0; k + 1 < idx.size(); k += 2) {
      pairs.emplace_back(idx[k], idx[k + 1]);
    }
    label_pairs.push_back(std::move(pairs));
  }
  rng.shuffle(label_pairs);

  // Round-robin across labels.
  std::vector<std::pair<int, int>> ordered;
  for (std::size_t round = 0;; ++round) {
    bool any = false;
    for (auto& pairs : label_pairs) {
      if (round < pairs.size()) {
        ordered.push_back(pairs[round]);
        any = true;
      }
    }
    if (!any) break;
  }

  const int pairs_per_batch = std::max(2, batch_size / 2);
  std::vector<std::vector<int>> batches;
  for (std::size_t start = 0; start < ordered.size();
       start += pairs_per_batch) {
    const std::size_t end =
        std::min(ordered.size(), start + pairs_per_batch);
    std::vector<int> batch;
    for (std::size_t k = start; k < end; ++k) {
      batch.push_back(ordered[k].first);
      batch.push_back(ordered[k].second);
    }
    // A batch must span two labels or every anchor sees no negative.
    std::set<std::string> labels_in;
    for (int i : batch) labels_in.insert(corpus[i].style_label);
    if (labels_in.size() >= 2) {
      batches.push_back(std::move(batch));
    }
  }
  return batches;
}

double style_head_loss(const Mlp& head, const DMat& base,
                       const std::vector<std::string>& labels,
                       double temperature, std::vector<double>* grad) {
  const int n = base.rows;
  if (n != static_cast<int>(labels.size())) {
    throw Error(Errc::bad_config, "labels must align with base rows");
  }
  std::vector<Mlp::Tape> tapes(n);
  std::vector<double> norms(n, 0.0);
  DMat z(n, head.output_dim());

#pragma omp parallel for schedule(static) if (parallel::enabled())
  for (int b = 0; b < n; ++b) {
    tapes[b] = head.forward_tape(std::span<const double>(base.row(b), base.cols));
    const std::vector<double>& u = tapes[b].output;
    double sq = 0.0;
    for (double v : u) sq += v * v;
    norms[b] = std::sqrt(sq);
    if (norms[b] > 0.0) {
      double* zr = z.row(b);
      for (int c = 0; c < z.cols; ++c) zr[c] = u[c] / norms[b];
    }
  }

  DMat dz;
  const double loss =
      supcon_loss_and_grad(z, label_ids_of(labels), temperature,
                           grad ? &dz : nullptr);
  if (!grad) return loss;

  grad->assign(head.params().size(), 0.0);
  std::vector<std::vector<double>> sample_grads(
      n, std::vector<double>(grad->size(), 0.0));
#pragma omp parallel for schedule(static) if (parallel::enabled())
  for (int b = 0; b < n; ++b) {
    // Through z = u / |u|: du = (dz - (dz . z) z) / |u|.
    std::vector<double> du(z.cols, 0.0);
    const double* zr = z.row(b);
    const double* dzr = dz.row(b);
    if (norms[b] > 0.0) {
      double dot = 0.0;
      for (int c = 0; c < z.cols; ++c) dot += dzr[c] * zr[c];
      for (int c = 0; c < z.cols; ++c) du[c] = (dzr[c] - dot * zr[c]) / norms[b];
    }
    head.backward(tapes[b], du, sample_grads[b]);
  }
  // Fixed-order reduction keeps the result independent of worker count.
  for (int b = 0; b < n; ++b) {
    for (std::size_t p = 0; p < grad->size(); ++p) {
      (*grad)[p] += sample_grads[b][p];
    }
  }
  return loss;
}

double contrastive_loss(const std::vector<EmbeddingVector>& embeddings,
                        const std::vector<std::string>& labels,
                        double temperature) {
  if (temperature <= 0.0) {
    throw Error(Errc::bad_config, "temperature must be > 0");
  }
  if (embeddings.size() != labels.size() || embeddings.empty()) {
    throw Error(Errc::bad_config, "embeddings and labels must align");
  }
  DMat Z(static_cast<int>(embeddings.size()), embeddings[0].dim());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].dim() != Z.cols) {
      throw Error(Errc::dimension_mismatch, "embedding dims differ in batch");
    }
    for (int c = 0; c < Z.cols; ++c) {
      Z.at(static_cast<int>(i), c) = embeddings[i].values[c];
    }
  }
  return supcon_loss_and_grad(Z, label_ids_of(labels), temperature, nullptr);
}

StyleEncoderCheckpoint init_style_checkpoint(const ContrastiveTrainConfig& cfg,
                                             int input_dim) {
  validate_config(cfg);
  StyleEncoderCheckpoint ckpt;
  ckpt.config = cfg;
  ckpt.backend_id = derive_backend_id(cfg);
  ckpt.head = Mlp(input_dim, cfg.head_dims);
  Rng init_rng(cfg.seed);
  ckpt.head.init(init_rng);
  return ckpt;
}

StyleEncoderCheckpoint train_style_encoder(
    const std::vector<StyleLabeledImage>& corpus,
    const ContrastiveTrainConfig& cfg, const Embedder& embedder) {
  validate_config(cfg);

  int base_dim = 0;
  DMat base = embed_corpus(corpus, cfg.base_backend, embedder, &base_dim);

  StyleEncoderCheckpoint ckpt = init_style_checkpoint(cfg, base_dim);

  if (cfg.epochs == 0) return ckpt;

  std::vector<double> grad(ckpt.head.params().size());
  AdamState adam(grad.size());
  Rng epoch_rng(cfg.seed);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches =
        build_pairs(corpus, epoch_rng.fork(epoch).next_u64(), cfg.batch_size);
    double epoch_loss = 0.0;
    int batch_index = 0;
    for (const std::vector<int>& batch : batches) {
      DMat batch_x(static_cast<int>(batch.size()), base.cols);
      std::vector<std::string> batch_labels;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        std::copy_n(base.row(batch[b]), base.cols, batch_x.row(static_cast<int>(b)));
        batch_labels.push_back(corpus[batch[b]].style_label);
      }
      const double loss = style_head_loss(ckpt.head, batch_x, batch_labels,
                                          cfg.temperature, &grad);
      if (!std::isfinite(loss)) {
        throw Error(Errc::non_finite_loss,
                    "non-finite loss at epoch " + std::to_string(epoch) +
                        " batch " + std::to_string(batch_index));
      }
      epoch_loss += loss;
      adam_step(ckpt.head.params(), grad, adam, cfg.learning_rate);
      ++batch_index;
    }
    ckpt.train_metrics.emplace_back(
        epoch, batches.empty() ? 0.0 : epoch_loss / batches.size());
  }
  return ckpt;
}

EmbeddingVector style_embed(const Image& img, const StyleEncoderCheckpoint& ckpt,
                            const Embedder& embedder) {
  EmbeddingVector base = embedder.image(ckpt.config.base_backend, img);
  std::vector<double> x(base.values.begin(), base.values.end());
  std::vector<double> u = ckpt.head.forward(x);
  double sq = 0.0;
  for (double v : u) sq += v * v;
  const double norm = std::sqrt(sq);
  EmbeddingVector out;
  out.backend_id = ckpt.backend_id;
  out.values.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    out.values[i] = static_cast<float>(norm > 0.0 ? u[i] / norm : 0.0);
  }
  return out;
}

double style_score(const Image& stylized, const Image& style_ref,
                   const StyleEncoderCheckpoint& ckpt, const Embedder& embedder) {
  EmbeddingVector a = style_embed(stylized, ckpt, embedder);
  EmbeddingVector b = style_embed(style_ref, ckpt, embedder);
  return cosine(a, b);
}

RetrievalResult rank_at_k(const kernels::DMat& queries,
                          const std::vector<std::string>& query_labels,
                          const kernels::DMat& keys,
                          const std::vector<std::string>& key_labels,
                          const std::vector<std::string>* query_paths,
                          const std::vector<std::string>* key_paths) {
  DMat q = queries, k = keys;
  kernels::normalize_rows(q);
  kernels::normalize_rows(k);
  DMat sims;
  kernels::matmul_nt(q, k, sims);

  RetrievalResult res;
  const int nq = q.rows;
  for (int i = 0; i < nq; ++i) {
    std::vector<int> order;
    order.reserve(k.rows);
    for (int j = 0; j < k.rows; ++j) {
      if (query_paths && key_paths && (*query_paths)[i] == (*key_paths)[j]) {
        continue;  // distinct-key protocol: drop the self match
      }
      order.push_back(j);
    }
    // Ties keep key order.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return sims.at(i, a) > sims.at(i, b);
    });
    int rank = -1;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (key_labels[order[pos]] == query_labels[i]) {
        rank = static_cast<int>(pos) + 1;
        break;
      }
    }
    if (rank < 0) {
      throw Error(Errc::label_missing_in_keys,
                  "no key shares label '" + query_labels[i] + "'");
    }
    if (rank <= 1) res.rank1 += 1.0;
    if (rank <= 5) res.rank5 += 1.0;
    if (rank <= 10) res.rank10 += 1.0;
  }
  if (nq > 0) {
    res.rank1 /= nq;
    res.rank5 /= nq;
    res.rank10 /= nq;
  }
  return res;
}

RetrievalResult retrieval_eval(const std::vector<StyleLabeledImage>& queries,
                               const std::vector<StyleLabeledImage>& keys,
                               const StyleEncoderCheckpoint& ckpt,
                               const Embedder& embedder) {
  auto embed_all = [&](const std::vector<StyleLabeledImage>& items, DMat& m,
                       std::vector<std::string>& labels,
                       std::vector<std::string>& paths) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      EmbeddingVector v = style_embed(load_image(items[i].image_path), ckpt, embedder);
      if (m.rows == 0) m = DMat(static_cast<int>(items.size()), v.dim());
      for (int c = 0; c < v.dim(); ++c) m.at(static_cast<int>(i), c) = v.values[c];
      labels.push_back(items[i].style_label);
      paths.push_back(items[i].image_path);
    }
  };
  DMat q, k;
  std::vector<std::string> ql, kl, qp, kp;
  embed_all(queries, q, ql, qp);
  embed_all(keys, k, kl, kp);
  return rank_at_k(q, ql, k, kl, &qp, &kp);
}

void save_style_checkpoint(const StyleEncoderCheckpoint& ckpt,
                           const std::filesystem::path& path) {
  nlohmann::json header;
  header["backend_id"] = ckpt.backend_id;
  header["config"] = {
      {"base_backend", ckpt.config.base_backend},
      {"head_dims", ckpt.config.head_dims},
      {"temperature", ckpt.config.temperature},
      {"batch_size", ckpt.config.batch_size},
      {"epochs", ckpt.config.epochs},
      {"learning_rate", ckpt.config.learning_rate},
      {"seed", ckpt.config.seed},
      {"finetune_base", ckpt.config.finetune_base},
  };
  header["input_dim"] = ckpt.head.input_dim();
  header["train_metrics"] = ckpt.train_metrics;
  save_checkpoint(path, "style", header, ckpt.head.params());
}

StyleEncoderCheckpoint load_style_checkpoint(const std::filesystem::path& path) {
  auto [header, payload] = load_checkpoint(path, "style");
  StyleEncoderCheckpoint ckpt;
  try {
    const auto& c = header.at("config");
    ckpt.config.base_backend = c.at("base_backend").get<std::string>();
    ckpt.config.head_dims = c.at("head_dims").get<std::vector<int>>();
    ckpt.config.temperature = c.at("temperature").get<double>();
    ckpt.config.batch_size = c.at("batch_size").get<int>();
    ckpt.config.epochs = c.at("epochs").get<int>();
    ckpt.config.learning_rate = c.at("learning_rate").get<double>();
    ckpt.config.seed = c.at("seed").get<std::uint64_t>();
    ckpt.config.finetune_base = c.value("finetune_base", false);
    ckpt.backend_id = header.at("backend_id").get<std::string>();
    ckpt.train_metrics =
        header.at("train_metrics").get<std::vector<std::pair<int, double>>>();
    ckpt.head = Mlp(header.at("input_dim").get<int>(), ckpt.config.head_dims);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::checkpoint_corrupt,
                "style checkpoint header: " + std::string(e.what()));
  }
  if (payload.size() != ckpt.head.params().size()) {
    throw Error(Errc::checkpoint_corrupt, "style checkpoint payload size");
  }
  ckpt.head.params() = std::move(payload);
  return ckpt;
}

}  // namespace styleval
