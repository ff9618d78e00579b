#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "styleval/backends.hpp"
#include "styleval/benchmark.hpp"
#include "styleval/errors.hpp"
#include "styleval/synthetic.hpp"
#include "testutil.hpp"

using namespace styleval;

namespace {

struct BenchFixture {
  testutil::TempDir tmp;
  Registry reg = make_default_registry();
  Embedder emb{&reg, nullptr};
  StyleEncoderCheckpoint style;
  AestheticCheckpoint aes;
  TripletScorers scorers;

  BenchFixture() {
    ContrastiveTrainConfig scfg;
    style = init_style_checkpoint(scfg, kernels::kStatsDim);
    AestheticTrainConfig acfg;
    aes = init_aesthetic_checkpoint(acfg, 2 * kernels::kStatsDim);
    scorers.style = &style;
    scorers.aesthetic = &aes;
    scorers.embedder = &emb;
  }
};

}  // namespace

TEST_SUITE("benchmark") {

TEST_CASE("style loss is zero for identical images and symmetric") {
  Rng rng(11);
  Image a = synthetic::noise(40, 40, rng);
  Image b = synthetic::checker(36, 28, 4, {200, 40, 40}, {30, 30, 180});
  CHECK(style_loss(a, a) == 0.0);
  CHECK(style_loss(b, b) == 0.0);
  CHECK(style_loss(a, b) == doctest::Approx(style_loss(b, a)).epsilon(1e-12));
  CHECK(style_loss(a, b) > 0.0);
}

TEST_CASE("style loss matches the brute-force gram oracle on random pairs") {
  Rng rng(12);
  StyleLossConfig cfg;
  for (int trial = 0; trial < 8; ++trial) {
    Image a = synthetic::noise(16 + 3 * trial, 20 + 2 * trial, rng);
    Image b = synthetic::noise(24, 18 + trial, rng);
    const double got = style_loss(a, b, cfg);
    const double want = testutil::style_loss_oracle(a, b, cfg.layers);
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("gram matrices of different image sizes are comparable") {
  // Same texture rendered at two sizes: small loss. Different textures:
  // larger loss.
  Image small = synthetic::checker(24, 24, 4, {220, 30, 30}, {20, 20, 20});
  Image large = synthetic::checker(48, 48, 8, {220, 30, 30}, {20, 20, 20});
  Image other = synthetic::vgradient(32, 32, {240, 240, 240}, {10, 10, 10});
  CHECK(style_loss(small, large) < style_loss(small, other));
}

TEST_CASE("evaluate_method: outputs equal to style images") {
  BenchFixture f;
  auto toy = synthetic::write_toy_benchmark(f.tmp / "bench", 2, 3);
  BenchmarkSpec spec = load_benchmark_spec(toy.spec_path);
  REQUIRE(spec.contents.size() == 2);
  REQUIRE(spec.styles.size() == 3);

  MethodOutputs outputs =
      discover_method_outputs(toy.methods_dir / "copy-style", "copy-style");
  MethodReport report = evaluate_method(spec, outputs, f.scorers);
  REQUIRE(report.pairs.size() == 6);
  CHECK(!report.partial);
  for (const PairMetrics& p : report.pairs) {
    CHECK(p.style_consistency == doctest::Approx(1.0));
    CHECK(p.style_loss == 0.0);
  }
  CHECK(report.mean_style == doctest::Approx(1.0));
  CHECK(report.mean_style_loss == 0.0);
}

TEST_CASE("evaluate_method: outputs equal to content images score structural 1.0") {
  BenchFixture f;
  // alpha = 0 isolates the structural component inside content preservation.
  f.scorers.content.alpha = 0.0;
  auto toy = synthetic::write_toy_benchmark(f.tmp / "bench", 2, 3);
  BenchmarkSpec spec = load_benchmark_spec(toy.spec_path);
  MethodOutputs outputs =
      discover_method_outputs(toy.methods_dir / "copy-content", "copy-content");
  MethodReport report = evaluate_method(spec, outputs, f.scorers);
  REQUIRE(report.pairs.size() == 6);
  for (const PairMetrics& p : report.pairs) {
    CHECK(p.content_preservation == doctest::Approx(1.0));
  }
}

TEST_CASE("two methods: means recompute from detail rows; order is spec order") {
  BenchFixture f;
  auto toy = synthetic::write_toy_benchmark(f.tmp / "bench", 2, 3);
  BenchmarkSpec spec = load_benchmark_spec(toy.spec_path);

  BenchmarkReport report;
  for (const std::string& method : toy.method_ids) {
    report.rows.push_back(evaluate_method(
        spec, discover_method_outputs(toy.methods_dir / method, method),
        f.scorers));
  }
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].method_id == "copy-content");
  CHECK(report.rows[1].method_id == "copy-style");

  for (const MethodReport& m : report.rows) {
    // Independent mean recomputation.
    double c = 0, s = 0, a = 0, l = 0;
    for (const PairMetrics& p : m.pairs) {
      c += p.content_preservation;
      s += p.style_consistency;
      a += p.aesthetic_appeal;
      l += p.style_loss;
    }
    const double n = static_cast<double>(m.pairs.size());
    CHECK(std::abs(m.mean_content - c / n) < 1e-9);
    CHECK(std::abs(m.mean_style - s / n) < 1e-9);
    CHECK(std::abs(m.mean_aesthetic - a / n) < 1e-9);
    CHECK(std::abs(m.mean_style_loss - l / n) < 1e-9);

    // Pair rows follow the spec cross-product order.
    std::size_t idx = 0;
    for (const auto& content : spec.contents) {
      for (const auto& style : spec.styles) {
        CHECK(m.pairs[idx].content_id == content.id);
        CHECK(m.pairs[idx].style_id == style.id);
        ++idx;
      }
    }
  }

  // Means are invariant under pair order permutation.
  MethodReport shuffled = report.rows[0];
  std::reverse(shuffled.pairs.begin(), shuffled.pairs.end());
  shuffled.recompute_means();
  CHECK(shuffled.mean_content ==
        doctest::Approx(report.rows[0].mean_content).epsilon(1e-12));
  CHECK(shuffled.mean_style_loss ==
        doctest::Approx(report.rows[0].mean_style_loss).epsilon(1e-12));
}

TEST_CASE("missing outputs mark the report partial and are listed") {
  BenchFixture f;
  auto toy = synthetic::write_toy_benchmark(f.tmp / "bench", 2, 3);
  BenchmarkSpec spec = load_benchmark_spec(toy.spec_path);
  std::filesystem::remove(toy.methods_dir / "copy-style" / "c0__s1.png");
  MethodOutputs outputs =
      discover_method_outputs(toy.methods_dir / "copy-style", "copy-style");
  MethodReport report = evaluate_method(spec, outputs, f.scorers);
  CHECK(report.partial);
  REQUIRE(report.missing.size() == 1);
  CHECK(report.missing[0].first == "c0");
  CHECK(report.missing[0].second == "s1");
  CHECK(report.pairs.size() == 5);
}

TEST_CASE("instruction mode requires an instruction per style") {
  testutil::TempDir tmp;
  std::ofstream spec_file(tmp / "spec.json");
  spec_file << R"({"mode":"instruction_guided",
    "content_images":[{"id":"c0","path":"c0.png"}],
    "style_images":[{"id":"s0","path":"s0.png"},{"id":"s1","path":"s1.png"}],
    "instructions":{"s0":"make it a sketch"}})";
  spec_file.close();
  CHECK_THROWS_AS(load_benchmark_spec(tmp / "spec.json"), Error);
}

TEST_CASE("report emission: csv rows, markdown arrows, parse-back") {
  testutil::TempDir tmp;
  BenchmarkReport report;
  for (int i = 0; i < 2; ++i) {
    MethodReport m;
    m.method_id = "method" + std::to_string(i);
    for (int p = 0; p < 3; ++p) {
      PairMetrics pm;
      pm.content_id = "c" + std::to_string(p);
      pm.style_id = "s0";
      pm.content_preservation = 0.5 + 0.01 * i + 0.001 * p;
      pm.style_consistency = 0.7 - 0.02 * i;
      pm.aesthetic_appeal = 5.7 + 0.1 * i;
      pm.style_loss = 0.15 - 0.01 * i;
      m.pairs.push_back(pm);
    }
    m.recompute_means();
    report.rows.push_back(m);
  }

  emit_report(report, ReportFormat::csv, tmp / "r.csv");
  {
    std::ifstream csv(tmp / "r.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line ==
          "method,content_preservation,style_consistency,aesthetic_appeal,style_loss");
    int rows = 0;
    while (std::getline(csv, line)) {
      if (!line.empty()) ++rows;
    }
    CHECK(rows == 2);
  }

  emit_report(report, ReportFormat::markdown, tmp / "r.md");
  {
    std::ifstream md(tmp / "r.md");
    std::string header;
    std::getline(md, header);
    CHECK(header.find("Content Preservation ↑") != std::string::npos);
    CHECK(header.find("Style Loss ↓") != std::string::npos);
    std::string sep;
    std::getline(md, sep);
    // Parse the table back and compare at emitted precision.
    std::string line;
    std::size_t row = 0;
    while (std::getline(md, line)) {
      if (line.empty() || line[0] != '|') break;
      std::istringstream is(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(is, cell, '|')) cells.push_back(cell);
      REQUIRE(cells.size() >= 6);
      const MethodReport& m = report.rows[row];
      CHECK(std::abs(std::stod(cells[2]) - m.mean_content) <= 5e-7);
      CHECK(std::abs(std::stod(cells[3]) - m.mean_style) <= 5e-7);
      CHECK(std::abs(std::stod(cells[4]) - m.mean_aesthetic) <= 5e-7);
      CHECK(std::abs(std::stod(cells[5]) - m.mean_style_loss) <= 5e-7);
      ++row;
    }
    CHECK(row == 2);
  }

  // Empty report: header only.
  BenchmarkReport empty;
  emit_report(empty, ReportFormat::csv, tmp / "empty.csv");
  std::ifstream empty_csv(tmp / "empty.csv");
  std::string header, rest;
  std::getline(empty_csv, header);
  CHECK(!header.empty());
  CHECK(!std::getline(empty_csv, rest));
}

TEST_CASE("report json round-trip preserves rows and means") {
  BenchmarkReport report;
  MethodReport m;
  m.method_id = "x";
  PairMetrics pm{"c0", "s0", 0.51, 0.72, 5.75, 0.109};
  m.pairs.push_back(pm);
  m.missing.emplace_back("c1", "s0");
  m.partial = true;
  m.recompute_means();
  report.rows.push_back(m);
  report.metadata["config_hash"] = "deadbeef";

  BenchmarkReport back = report_from_json(report_to_json(report));
  REQUIRE(back.rows.size() == 1);
  CHECK(back.rows[0].method_id == "x");
  CHECK(back.rows[0].partial);
  CHECK(back.rows[0].missing == m.missing);
  CHECK(back.rows[0].mean_style_loss == doctest::Approx(0.109));
  CHECK(back.metadata.at("config_hash") == "deadbeef");
}

TEST_CASE("ablation: component subsets pick different winners, full set matches filter") {
  testutil::TempDir tmp;
  auto toy = synthetic::write_toy_manifest(tmp / "toy", 3, 4);

  // Candidate k: content-best at k=0, style-best at k=3.
  TripletScorers scorers;
  scorers.base_dir = tmp / "toy";
  scorers.custom = [](const Triplet& t, const FilterConfig& cfg) {
    const int k = t.generator_id.back() - '0';
    ScoreRecord r;
    r.triplet_id = t.triplet_id;
    r.c_score = 1.0 - 0.1 * k;
    r.s_score = 0.2 + 0.1 * k;
    r.a_score = 5.0;
    r.weight_a = cfg.weight_a;
    r.weight_b = cfg.weight_b;
    r.weight_c = cfg.weight_c;
    r.alpha = cfg.alpha;
    r.total = r.recompute_total();
    return r;
  };

  FilterConfig cfg;
  const std::vector<std::set<Component>> subsets = {
      {Component::content},
      {Component::content, Component::style},
      {Component::content, Component::style, Component::aesthetic},
  };
  const auto rows = ablation_report(toy.manifest, scorers, cfg, subsets);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].label == "content");
  CHECK(rows[1].label == "content+style");
  CHECK(rows[2].label == "content+style+aesthetic");

  // Oracle: content-only picks candidate 0; content+style picks the last.
  for (const auto& [gid, winner] : rows[0].winners) {
    CHECK(winner == gid + "-c0");
  }
  for (const auto& [gid, winner] : rows[1].winners) {
    CHECK(winner == gid + "-c3");
  }
  CHECK(rows[0].winners != rows[1].winners);

  // Full component set reproduces filter_dataset winners exactly.
  FilterPaths paths{tmp / "full.jsonl", "", ""};
  FilterResult full = filter_dataset(toy.manifest, scorers, cfg, paths);
  for (const Triplet& w : full.filtered.entries) {
    CHECK(rows[2].winners.at(w.group_id) == w.triplet_id);
  }

  // Mean style loss is a real gram mean over winners.
  CHECK(rows[0].mean_style_loss >= 0.0);

  // Groups of one candidate are rejected.
  auto tiny = synthetic::write_toy_manifest(tmp / "tiny", 1, 1);
  CHECK_THROWS_AS(ablation_report(tiny.manifest, scorers, cfg, subsets), Error);
}

}  // TEST_SUITE
