#include <doctest.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "styleval/backends.hpp"
#include "styleval/cli.hpp"
#include "styleval/filter.hpp"
#include "styleval/manifest.hpp"
#include "styleval/synthetic.hpp"
#include "testutil.hpp"

using namespace styleval;

namespace {

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), {});
}

int count_lines(const std::filesystem::path& p) {
  std::ifstream f(p);
  int n = 0;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty()) ++n;
  }
  return n;
}

// Runs the CLI in-process, capturing stdout and stderr.
struct CliResult {
  int exit_code;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = cli::run(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("score: toy manifest produces one record line per triplet") {
  testutil::TempDir tmp;
  auto toy = synthetic::write_toy_manifest(tmp / "toy", 1, 6);
  const auto out = tmp / "scores.jsonl";
  CliResult r = run_cli({"score", "--manifest", toy.manifest_path.string(),
                         "--out", out.string()});
  CHECK(r.exit_code == 0);
  // 6 records + 1 meta line.
  CHECK(count_lines(out) == 7);
  const auto records = load_score_records(out);
  REQUIRE(records.size() == 6);
  for (const auto& rec : records) {
    CHECK(std::abs(rec.total - rec.recompute_total()) < 1e-9);
  }
  // Meta line carries the effective config hash.
  std::ifstream f(out);
  std::string meta;
  std::getline(f, meta);
  CHECK(meta.find("config_hash") != std::string::npos);
}

TEST_CASE("score: missing image exits 3 and names the triplet") {
  testutil::TempDir tmp;
  auto toy = synthetic::write_toy_manifest(tmp / "toy", 1, 3);
  std::filesystem::remove(tmp.path() / "toy" / "images" / "g000_cand1.png");
  CliResult r = run_cli({"score", "--manifest", toy.manifest_path.string(),
                         "--out", (tmp / "s.jsonl").string()});
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("g000-c1") != std::string::npos);
  CHECK(r.err.find("\"error\"") != std::string::npos);
}

TEST_CASE("score: warm cache rerun is byte-identical with zero backend calls") {
  testutil::TempDir tmp;
  auto toy = synthetic::write_toy_manifest(tmp / "toy", 2, 3);
  const auto cache = tmp / "cache";
  const auto out1 = tmp / "s1.jsonl";
  const auto out2 = tmp / "s2.jsonl";

  reset_backend_compute_calls();
  CHECK(run_cli({"score", "--manifest", toy.manifest_path.string(), "--out",
                 out1.string(), "--cache-dir", cache.string()})
            .exit_code == 0);
  const auto cold_calls = backend_compute_calls();
  CHECK(cold_calls > 0);

  reset_backend_compute_calls();
  CHECK(run_cli({"score", "--manifest", toy.manifest_path.string(), "--out",
                 out2.string(), "--cache-dir", cache.string()})
            .exit_code == 0);
  CHECK(backend_compute_calls() == 0);
  CHECK(read_bytes(out1) == read_bytes(out2));
}

TEST_CASE("filter: 5-group toy manifest yields 5 winners; resume skips work") {
  testutil::TempDir tmp;
  auto toy = synthetic::write_toy_manifest(tmp / "toy", 5, 6);
  const auto out = tmp / "filtered.jsonl";
  CliResult r = run_cli({"filter", "--manifest", toy.manifest_path.string(),
                         "--out", out.string(), "--journal",
                         (tmp / "progress.jsonl").string()});
  CHECK(r.exit_code == 0);
  Manifest filtered = load_manifest(out);
  CHECK(filtered.entries.size() == 5);
  CHECK(filtered.metadata.count("config_hash") == 1);
  CHECK(std::filesystem::exists(tmp / "progress.jsonl"));

  // Resume rerun replays the journal without scoring anything.
  const auto out2 = tmp / "filtered2.jsonl";
  reset_backend_compute_calls();
  CliResult r2 = run_cli({"filter", "--manifest", toy.manifest_path.string(),
                          "--out", out2.string(), "--journal",
                          (tmp / "progress.jsonl").string(), "--resume",
                          "--scores-out", (tmp / "scores2.jsonl").string()});
  CHECK(r2.exit_code == 0);
  CHECK(backend_compute_calls() == 0);
  CHECK(read_bytes(out) == read_bytes(out2));
}

TEST_CASE("filter: explicit default weights match the built-in defaults") {
  testutil::TempDir tmp;
  auto toy = synthetic::write_toy_manifest(tmp / "toy", 2, 4);
  const auto out1 = tmp / "a.jsonl";
  const auto out2 = tmp / "b.jsonl";
  CHECK(run_cli({"filter", "--manifest", toy.manifest_path.string(), "--out",
                 out1.string(), "--scores-out", (tmp / "sa.jsonl").string(),
                 "--journal", (tmp / "ja.jsonl").string()})
            .exit_code == 0);
  CHECK(run_cli({"filter", "--manifest", toy.manifest_path.string(), "--out",
                 out2.string(), "--scores-out", (tmp / "sb.jsonl").string(),
                 "--journal", (tmp / "jb.jsonl").string(), "--weights",
                 "0.2,0.6,0.2"})
            .exit_code == 0);
  CHECK(read_bytes(tmp / "sa.jsonl") == read_bytes(tmp / "sb.jsonl"));
}

TEST_CASE("train-style then retrieval-eval prints perfect toy ranks") {
  testutil::TempDir tmp;
  synthetic::write_toy_style_corpus(tmp / "train", 24, 0, 7);
  synthetic::write_toy_style_corpus(tmp / "heldout", 8, 0, 8);
  const auto ckpt = tmp / "style.ckpt";
  CliResult train = run_cli(
      {"train-style", "--corpus", (tmp / "train").string(), "--out", ckpt.string()});
  CHECK(train.exit_code == 0);
  CHECK(std::filesystem::exists(ckpt));
  CHECK(std::filesystem::exists(tmp / "style.ckpt.meta.json"));

  CliResult eval = run_cli({"retrieval-eval", "--queries",
                            (tmp / "heldout").string(), "--keys",
                            (tmp / "heldout").string(), "--checkpoint",
                            ckpt.string(), "--out", (tmp / "rr.json").string()});
  CHECK(eval.exit_code == 0);
  CHECK(eval.out.find("Rank1=1.000") != std::string::npos);
  CHECK(std::filesystem::exists(tmp / "rr.json"));
}

TEST_CASE("train-aesthetic runs two stages and writes a checkpoint") {
  testutil::TempDir tmp;
  auto nat = synthetic::write_rated_corpus(tmp / "nat", 24, 3, 0.0, 0, "ava-like");
  auto art = synthetic::write_rated_corpus(tmp / "art", 12, 4, 0.0, 0, "baid-like");
  const auto ckpt = tmp / "aes.ckpt";
  CliResult r = run_cli({"train-aesthetic", "--stage1", nat.csv.string(),
                         "--stage2", art.csv.string(), "--out", ckpt.string(),
                         "--config", "/dev/null"});
  // /dev/null is not valid JSON -> config error.
  CHECK(r.exit_code == 2);

  CliResult ok = run_cli({"train-aesthetic", "--stage1", nat.csv.string(),
                          "--stage2", art.csv.string(), "--out", ckpt.string()});
  CHECK(ok.exit_code == 0);
  CHECK(std::filesystem::exists(ckpt));
}

TEST_CASE("benchmark emits a 4-metric CSV; report re-emits markdown") {
  testutil::TempDir tmp;
  auto toy = synthetic::write_toy_benchmark(tmp / "bench", 2, 3);
  const auto csv = tmp / "report.csv";
  const auto json = tmp / "report.json";
  CliResult r = run_cli({"benchmark", "--spec", toy.spec_path.string(),
                         "--methods", toy.methods_dir.string(), "--out",
                         csv.string(), "--report-json", json.string()});
  CHECK(r.exit_code == 0);
  std::ifstream f(csv);
  std::string header;
  std::getline(f, header);
  CHECK(header ==
        "method,content_preservation,style_consistency,aesthetic_appeal,style_loss");
  int rows = 0;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 2);  // copy-content and copy-style

  CliResult rep = run_cli({"report", "--in", json.string(), "--out",
                           (tmp / "report.md").string(), "--format", "markdown"});
  CHECK(rep.exit_code == 0);
  CHECK(read_bytes(tmp / "report.md").find("Style Loss ↓") != std::string::npos);
}

TEST_CASE("determinism: identical runs produce byte-identical outputs") {
  testutil::TempDir tmp;
  auto toy = synthetic::write_toy_manifest(tmp / "toy", 3, 4);
  const auto out1 = tmp / "r1.jsonl";
  const auto out2 = tmp / "r2.jsonl";
  CHECK(run_cli({"score", "--manifest", toy.manifest_path.string(), "--out",
                 out1.string(), "--seed", "17"})
            .exit_code == 0);
  CHECK(run_cli({"score", "--manifest", toy.manifest_path.string(), "--out",
                 out2.string(), "--seed", "17"})
            .exit_code == 0);
  CHECK(read_bytes(out1) == read_bytes(out2));
}

TEST_CASE("jobs flag does not change score output bytes") {
  testutil::TempDir tmp;
  auto toy = synthetic::write_toy_manifest(tmp / "toy", 4, 3);
  const auto out1 = tmp / "j1.jsonl";
  const auto out2 = tmp / "j2.jsonl";
  CHECK(run_cli({"score", "--manifest", toy.manifest_path.string(), "--out",
                 out1.string(), "--jobs", "1"})
            .exit_code == 0);
  CHECK(run_cli({"score", "--manifest", toy.manifest_path.string(), "--out",
                 out2.string(), "--jobs", "0"})
            .exit_code == 0);
  CHECK(read_bytes(out1) == read_bytes(out2));
}

TEST_CASE("exit codes: usage 2, data 3, backend 4") {
  testutil::TempDir tmp;
  CliResult unknown = run_cli({"frobnicate"});
  CHECK(unknown.exit_code == 2);

  CliResult no_sub = run_cli({});
  CHECK(no_sub.exit_code == 2);

  CliResult missing_manifest =
      run_cli({"score", "--manifest", (tmp / "nope.jsonl").string(), "--out",
               (tmp / "o.jsonl").string()});
  CHECK(missing_manifest.exit_code == 3);

  // Unknown backend in config -> backend error.
  auto toy = synthetic::write_toy_manifest(tmp / "toy", 1, 2);
  std::ofstream cfg(tmp / "cfg.json");
  cfg << R"({"content":{"structural_backend":"not-a-backend"}})";
  cfg.close();
  CliResult backend = run_cli({"score", "--manifest", toy.manifest_path.string(),
                               "--out", (tmp / "o.jsonl").string(), "--config",
                               (tmp / "cfg.json").string()});
  CHECK(backend.exit_code == 4);

  // Pretrained placeholder backends are config-visible but unavailable.
  std::ofstream cfg2(tmp / "cfg2.json");
  cfg2 << R"({"content":{"structural_backend":"dinov2-large"}})";
  cfg2.close();
  CliResult pretrained = run_cli({"score", "--manifest", toy.manifest_path.string(),
                                  "--out", (tmp / "o2.jsonl").string(), "--config",
                                  (tmp / "cfg2.json").string()});
  CHECK(pretrained.exit_code == 4);

  CliResult help = run_cli({"--help"});
  CHECK(help.exit_code == 0);
  CHECK(help.out.find("score") != std::string::npos);
}

TEST_CASE("config file values apply and flags override them") {
  testutil::TempDir tmp;
  auto toy = synthetic::write_toy_manifest(tmp / "toy", 1, 3);
  std::ofstream cfg(tmp / "cfg.json");
  cfg << R"({"filter":{"weights":[0.5,0.3,0.2]},"content":{"alpha":0.25}})";
  cfg.close();

  const auto out = tmp / "s.jsonl";
  CHECK(run_cli({"score", "--manifest", toy.manifest_path.string(), "--out",
                 out.string(), "--config", (tmp / "cfg.json").string()})
            .exit_code == 0);
  auto records = load_score_records(out);
  REQUIRE(!records.empty());
  CHECK(records[0].weight_a == doctest::Approx(0.5));
  CHECK(records[0].alpha == doctest::Approx(0.25));

  // Flag beats file.
  CHECK(run_cli({"score", "--manifest", toy.manifest_path.string(), "--out",
                 out.string(), "--config", (tmp / "cfg.json").string(),
                 "--weights", "0.1,0.8,0.1", "--alpha", "0.75"})
            .exit_code == 0);
  records = load_score_records(out);
  CHECK(records[0].weight_b == doctest::Approx(0.8));
  CHECK(records[0].alpha == doctest::Approx(0.75));
}

}  // TEST_SUITE
