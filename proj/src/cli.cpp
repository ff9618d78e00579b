#include "styleval/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "styleval/benchmark.hpp"
#include "styleval/config.hpp"
#include "styleval/errors.hpp"
#include "styleval/hash.hpp"
#include "styleval/parallel.hpp"

namespace styleval::cli {

namespace {

using nlohmann::json;

bool g_quiet = false;

// Informational one-liners; suppressed by --log-level quiet.
std::ostream& info() {
  static std::ostream null_stream(nullptr);
  return g_quiet ? null_stream : std::cout;
}

// Checkpoints plus the scorer view over them. The checkpoints live on
// the heap so the pointers inside `scorers` survive moving the bundle.
struct ScorerBundle {
  std::unique_ptr<StyleEncoderCheckpoint> style =
      std::make_unique<StyleEncoderCheckpoint>();
  std::unique_ptr<AestheticCheckpoint> aesthetic =
      std::make_unique<AestheticCheckpoint>();
  TripletScorers scorers;
};

// Registry, cache and embedder wired together; the embedder points at the
// sibling members, so this type stays where it is constructed.
struct Context {
  explicit Context(const ToolConfig& config) : cfg(config) {
    registry = make_default_registry();
    if (!cfg.cache_dir.empty()) {
      cache.emplace(cfg.cache_dir);
    }
    embedder.emplace(&registry, cache ? &*cache : nullptr);
    parallel::set_jobs(cfg.jobs);
  }
  Context(const Context&) = delete;
  Context& operator=(const Context&) = delete;

  ToolConfig cfg;
  Registry registry;
  std::optional<EmbeddingCache> cache;
  std::optional<Embedder> embedder;
};

ScorerBundle make_scorers(Context& ctx, const std::filesystem::path& base_dir) {
  ScorerBundle bundle;
  const ToolConfig& cfg = ctx.cfg;
  if (!cfg.style_checkpoint.empty()) {
    *bundle.style = load_style_checkpoint(cfg.style_checkpoint);
  } else {
    // No trained checkpoint configured: seeded untrained head over the
    // reference base backend.
    const int dim =
        ctx.registry.at(cfg.style.base_backend).descriptor().dimension;
    *bundle.style = init_style_checkpoint(cfg.style, dim);
  }
  if (!cfg.aesthetic_checkpoint.empty()) {
    *bundle.aesthetic = load_aesthetic_checkpoint(cfg.aesthetic_checkpoint);
  } else {
    const int dim =
        ctx.registry.at(cfg.aesthetic.feature_backend).descriptor().dimension;
    *bundle.aesthetic = init_aesthetic_checkpoint(cfg.aesthetic, 2 * dim);
  }
  bundle.scorers.content = cfg.content;
  bundle.scorers.style = bundle.style.get();
  bundle.scorers.aesthetic = bundle.aesthetic.get();
  bundle.scorers.embedder = &*ctx.embedder;
  bundle.scorers.base_dir = base_dir;
  return bundle;
}

void write_meta_sidecar(const std::filesystem::path& artifact,
                        const ToolConfig& cfg, json extra = {}) {
  json meta;
  meta["config_hash"] = cfg.config_hash;
  meta["effective_config"] = cfg.stamped;
  meta["seed"] = cfg.seed;
  meta["artifact_sha256"] = sha256_file_hex(artifact);
  for (auto& [k, v] : extra.items()) meta[k] = v;
  std::filesystem::path path = artifact;
  path += ".meta.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(Errc::io_error, "cannot write " + path.string());
  }
  out << meta.dump(2) << "\n";
}

int cmd_score(Context& ctx, const std::string& manifest_path,
              const std::string& out_path) {
  Manifest m = load_manifest(manifest_path);
  ScorerBundle bundle =
      make_scorers(ctx, std::filesystem::path(manifest_path).parent_path());

  const int n = static_cast<int>(m.entries.size());
  std::vector<ScoreRecord> records(n);
  std::exception_ptr first_error;
  std::mutex mu;
#pragma omp parallel for schedule(dynamic) if (parallel::enabled())
  for (int i = 0; i < n; ++i) {
    try {
      records[i] = score_triplet(m.entries[i], bundle.scorers, ctx.cfg.filter);
    } catch (...) {
      std::lock_guard lock(mu);
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    throw Error(Errc::io_error, "cannot write scores: " + out_path);
  }
  json meta;
  meta["type"] = "meta";
  meta["config_hash"] = ctx.cfg.config_hash;
  meta["config"] = ctx.cfg.stamped.dump();
  meta["seed"] = ctx.cfg.seed;
  meta["weights"] = {ctx.cfg.filter.weight_a, ctx.cfg.filter.weight_b,
                     ctx.cfg.filter.weight_c};
  meta["alpha"] = ctx.cfg.filter.alpha;
  out << meta.dump() << "\n";
  for (const ScoreRecord& r : records) {
    out << score_record_to_json(r) << "\n";
  }
  info() << "scored " << n << " triplet(s) -> " << out_path << "\n";
  return 0;
}

int cmd_filter(Context& ctx, const std::string& manifest_path,
               const std::string& out_path, std::string scores_path,
               std::string journal_path) {
  Manifest m = load_manifest(manifest_path);
  ScorerBundle bundle =
      make_scorers(ctx, std::filesystem::path(manifest_path).parent_path());

  const std::filesystem::path out_dir =
      std::filesystem::path(out_path).parent_path();
  FilterPaths paths;
  paths.out_manifest = out_path;
  paths.scores = scores_path.empty() ? (out_dir / "scores.jsonl").string()
                                     : scores_path;
  paths.journal = journal_path.empty() ? (out_dir / "progress.jsonl").string()
                                       : journal_path;

  FilterResult result = filter_dataset(m, bundle.scorers, ctx.cfg.filter,
                                       paths, artifact_metadata(ctx.cfg));
  info() << "filtered " << result.groups_total << " group(s): "
            << result.filtered.entries.size() << " winner(s), "
            << result.groups_resumed << " resumed, " << result.groups_failed
            << " failed -> " << out_path << "\n";
  return 0;
}

int cmd_train_style(Context& ctx, const std::string& corpus_dir,
                    const std::string& out_path) {
  const auto corpus = load_style_corpus(corpus_dir);
  StyleEncoderCheckpoint ckpt =
      train_style_encoder(corpus, ctx.cfg.style, *ctx.embedder);
  save_style_checkpoint(ckpt, out_path);
  json extra;
  extra["backend_id"] = ckpt.backend_id;
  extra["corpus_images"] = corpus.size();
  if (!ckpt.train_metrics.empty()) {
    extra["final_loss"] = ckpt.train_metrics.back().second;
  }
  write_meta_sidecar(out_path, ctx.cfg, extra);
  info() << "trained style encoder on " << corpus.size() << " image(s)";
  if (!ckpt.train_metrics.empty()) {
    info() << ", final loss " << ckpt.train_metrics.back().second;
  }
  info() << " -> " << out_path << "\n";
  return 0;
}

int cmd_train_aesthetic(Context& ctx, const std::string& stage1_csv,
                        const std::string& stage2_csv,
                        const std::string& out_path) {
  const auto stage1 = load_rated_corpus(stage1_csv);
  std::vector<RatedImage> stage2;
  if (!stage2_csv.empty()) {
    stage2 = load_rated_corpus(stage2_csv);
  }
  AestheticCheckpoint ckpt =
      train_aesthetic(stage1, stage2, ctx.cfg.aesthetic, *ctx.embedder);
  save_aesthetic_checkpoint(ckpt, out_path);
  json extra;
  extra["backend_id"] = ckpt.backend_id;
  extra["stage1_images"] = stage1.size();
  extra["stage2_images"] = stage2.size();
  if (!ckpt.stage_metrics.empty() && !ckpt.stage_metrics.back().empty()) {
    extra["final_mse"] = ckpt.stage_metrics.back().back().second;
  }
  write_meta_sidecar(out_path, ctx.cfg, extra);
  info() << "trained aesthetic head on " << stage1.size() << "+"
            << stage2.size() << " image(s)";
  if (!ckpt.stage_metrics.empty() && !ckpt.stage_metrics.back().empty()) {
    info() << ", final mse " << ckpt.stage_metrics.back().back().second;
  }
  info() << " -> " << out_path << "\n";
  return 0;
}

int cmd_retrieval_eval(Context& ctx, const std::string& queries_dir,
                       const std::string& keys_dir,
                       const std::string& ckpt_path,
                       const std::string& out_path) {
  const auto queries = load_style_corpus(queries_dir);
  const auto keys = load_style_corpus(keys_dir);
  StyleEncoderCheckpoint ckpt = load_style_checkpoint(ckpt_path);
  RetrievalResult res = retrieval_eval(queries, keys, ckpt, *ctx.embedder);
  char line[128];
  std::snprintf(line, sizeof(line), "Rank1=%.3f Rank5=%.3f Rank10=%.3f",
                res.rank1, res.rank5, res.rank10);
  std::cout << line << "\n";
  info() << "config_hash=" << ctx.cfg.config_hash << " backend=" << ckpt.backend_id
         << " queries=" << queries.size() << " keys=" << keys.size() << "\n";
  if (!out_path.empty()) {
    json j;
    j["rank1"] = res.rank1;
    j["rank5"] = res.rank5;
    j["rank10"] = res.rank10;
    j["queries"] = queries.size();
    j["keys"] = keys.size();
    j["config_hash"] = ctx.cfg.config_hash;
    j["backend_id"] = ckpt.backend_id;
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + out_path);
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_benchmark(Context& ctx, const std::string& spec_path,
                  const std::string& methods_dir, const std::string& out_path,
                  const std::string& format, const std::string& json_out) {
  BenchmarkSpec spec = load_benchmark_spec(spec_path);
  ScorerBundle bundle = make_scorers(ctx, spec.base_dir);

  std::vector<std::string> methods;
  for (const auto& e : std::filesystem::directory_iterator(methods_dir)) {
    if (e.is_directory()) methods.push_back(e.path().filename().string());
  }
  std::sort(methods.begin(), methods.end());
  if (methods.empty()) {
    throw Error(Errc::io_error,
                "no method directories under " + methods_dir);
  }

  BenchmarkReport report;
  report.metadata["config"] = ctx.cfg.stamped.dump();
  report.metadata["config_hash"] = ctx.cfg.config_hash;
  report.metadata["seed"] = std::to_string(ctx.cfg.seed);
  report.metadata["style_loss_extractor"] = ctx.cfg.style_loss.extractor_id;
  report.metadata["style_backend"] = bundle.style->backend_id;
  report.metadata["aesthetic_backend"] = bundle.aesthetic->backend_id;
  report.metadata["semantic_backend"] = ctx.cfg.content.semantic_backend;
  report.metadata["structural_backend"] = ctx.cfg.content.structural_backend;
  for (const std::string& method : methods) {
    MethodOutputs outputs = discover_method_outputs(
        std::filesystem::path(methods_dir) / method, method);
    report.rows.push_back(
        evaluate_method(spec, outputs, bundle.scorers, ctx.cfg.style_loss));
  }

  const ReportFormat fmt =
      format == "markdown" ? ReportFormat::markdown : ReportFormat::csv;
  emit_report(report, fmt, out_path);
  json extra;
  extra["spec"] = spec_path;
  extra["methods"] = methods;
  write_meta_sidecar(out_path, ctx.cfg, extra);
  if (!json_out.empty()) {
    std::ofstream out(json_out, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + json_out);
    out << report_to_json(report).dump(2) << "\n";
  }
  info() << "evaluated " << methods.size() << " method(s) over "
            << spec.contents.size() << "x" << spec.styles.size()
            << " pairs -> " << out_path << "\n";
  return 0;
}

int cmd_report(const ToolConfig& cfg, const std::string& in_path,
               const std::string& out_path, const std::string& format) {
  std::ifstream in(in_path);
  if (!in) throw Error(Errc::io_error, "cannot open report: " + in_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_line,
                "report parse error: " + std::string(e.what()));
  }
  BenchmarkReport report = report_from_json(j);
  const ReportFormat fmt =
      format == "markdown" ? ReportFormat::markdown : ReportFormat::csv;
  emit_report(report, fmt, out_path);
  write_meta_sidecar(out_path, cfg, json{{"source_report", in_path}});
  info() << "report with " << report.rows.size() << " method row(s) -> "
            << out_path << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"quality scoring, filtering and benchmarking for "
               "style-transfer triplets"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, cache_dir, weights, log_level = "info";
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool resume = false;
  app.add_option("--config", config_path, "config file (JSON)");
  app.add_option("--cache-dir", cache_dir, "embedding cache directory");
  app.add_option("--jobs", jobs, "worker cap (0 = hardware default)");
  app.add_option("--seed", seed, "seed override");
  app.add_option("--alpha", alpha, "content score alpha override");
  app.add_option("--weights", weights, "filter weights a,b,c");
  app.add_option("--log-level", log_level, "log level (quiet|info)")
      ->check(CLI::IsMember({"quiet", "info"}));

  auto* score = app.add_subcommand("score", "score every triplet in a manifest");
  std::string manifest_path, out_path;
  score->add_option("--manifest", manifest_path, "triplet manifest JSONL")
      ->required();
  score->add_option("--out", out_path, "scores JSONL output")->required();

  auto* filter = app.add_subcommand(
      "filter", "select the best candidate per group and write the filtered manifest");
  std::string f_manifest, f_out, f_scores, f_journal;
  filter->add_option("--manifest", f_manifest, "triplet manifest JSONL")
      ->required();
  filter->add_option("--out", f_out, "filtered manifest output")->required();
  filter->add_option("--scores-out", f_scores, "scores sidecar (default: scores.jsonl)");
  filter->add_option("--journal", f_journal, "journal path (default: progress.jsonl)");
  filter->add_flag("--resume", resume, "skip groups already in the journal");

  auto* train_style = app.add_subcommand(
      "train-style", "contrastive-train the style embedding head");
  std::string ts_corpus, ts_out;
  train_style->add_option("--corpus", ts_corpus, "style corpus root dir")
      ->required();
  train_style->add_option("--out", ts_out, "checkpoint output")->required();

  auto* train_aes = app.add_subcommand(
      "train-aesthetic", "train the aesthetic regression head");
  std::string ta_stage1, ta_stage2, ta_out;
  train_aes->add_option("--stage1", ta_stage1, "stage-1 rated corpus CSV")
      ->required();
  train_aes->add_option("--stage2", ta_stage2, "stage-2 rated corpus CSV");
  train_aes->add_option("--out", ta_out, "checkpoint output")->required();

  auto* retrieval = app.add_subcommand(
      "retrieval-eval", "rank@k retrieval over a trained style encoder");
  std::string re_queries, re_keys, re_ckpt, re_out;
  retrieval->add_option("--queries", re_queries, "query corpus dir")->required();
  retrieval->add_option("--keys", re_keys, "key corpus dir")->required();
  retrieval->add_option("--checkpoint", re_ckpt, "style checkpoint")->required();
  retrieval->add_option("--out", re_out, "result JSON output");

  auto* benchmark = app.add_subcommand(
      "benchmark", "evaluate method outputs with the four metrics");
  std::string b_spec, b_methods, b_out, b_format = "csv", b_json;
  benchmark->add_option("--spec", b_spec, "benchmark spec JSON")->required();
  benchmark->add_option("--methods", b_methods, "directory of per-method output dirs")
      ->required();
  benchmark->add_option("--out", b_out, "report output path")->required();
  benchmark->add_option("--format", b_format, "csv|markdown")
      ->check(CLI::IsMember({"csv", "markdown"}));
  benchmark->add_option("--report-json", b_json, "also write the full report JSON");

  auto* report = app.add_subcommand("report", "re-emit a report JSON as CSV or markdown");
  std::string r_in, r_out, r_format = "markdown";
  report->add_option("--in", r_in, "report JSON")->required();
  report->add_option("--out", r_out, "output path")->required();
  report->add_option("--format", r_format, "csv|markdown")
      ->check(CLI::IsMember({"csv", "markdown"}));

  std::vector<const char*> argv;
  argv.push_back("styleval");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  g_quiet = log_level == "quiet";

  try {
    std::vector<std::pair<std::string, std::string>> overrides;
    if (!cache_dir.empty()) overrides.emplace_back("cache_dir", cache_dir);
    if (jobs) overrides.emplace_back("jobs", std::to_string(*jobs));
    if (seed) overrides.emplace_back("seed", std::to_string(*seed));
    if (alpha) overrides.emplace_back("content.alpha", std::to_string(*alpha));
    if (!weights.empty()) overrides.emplace_back("filter.weights", weights);
    if (resume) overrides.emplace_back("filter.resume", "true");

    std::optional<std::filesystem::path> config_file;
    if (!config_path.empty()) config_file = config_path;
    ToolConfig cfg = load_tool_config(config_file, overrides);

    if (app.got_subcommand(report)) {
      return cmd_report(cfg, r_in, r_out, r_format);
    }

    Context ctx(cfg);
    if (app.got_subcommand(score)) {
      return cmd_score(ctx, manifest_path, out_path);
    }
    if (app.got_subcommand(filter)) {
      return cmd_filter(ctx, f_manifest, f_out, f_scores, f_journal);
    }
    if (app.got_subcommand(train_style)) {
      return cmd_train_style(ctx, ts_corpus, ts_out);
    }
    if (app.got_subcommand(train_aes)) {
      return cmd_train_aesthetic(ctx, ta_stage1, ta_stage2, ta_out);
    }
    if (app.got_subcommand(retrieval)) {
      return cmd_retrieval_eval(ctx, re_queries, re_keys, re_ckpt, re_out);
    }
    if (app.got_subcommand(benchmark)) {
      return cmd_benchmark(ctx, b_spec, b_methods, b_out, b_format, b_json);
    }
    throw Error(Errc::bad_config, "no subcommand selected");
  } catch (const Error& e) {
    json err;
    err["error"] = {{"code", e.code_name()},
                    {"kind", e.kind() == ErrorKind::config    ? "config"
                             : e.kind() == ErrorKind::backend ? "backend"
                                                              : "data"},
                    {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    json err;
    err["error"] = {{"code", "Internal"}, {"kind", "internal"},
                    {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
}

}  // namespace styleval::cli
