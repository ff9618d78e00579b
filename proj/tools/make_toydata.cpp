// Generates a self-contained synthetic dataset for trying the pipeline:
// a triplet manifest, train/heldout style corpora, two rated corpora and
// a small benchmark layout. Everything is procedural and seeded.
#include <cstdint>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "styleval/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate synthetic toy data for the styleval pipeline"};
  std::string out_dir;
  int groups = 5, candidates = 6, per_style = 16, heldout = 4;
  std::uint64_t seed = 11;
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--groups", groups, "manifest groups");
  app.add_option("--candidates", candidates, "candidates per group");
  app.add_option("--per-style", per_style, "train images per style label");
  app.add_option("--heldout", heldout, "heldout images per style label");
  app.add_option("--seed", seed, "generation seed");
  CLI11_PARSE(app, argc, argv);

  namespace fs = std::filesystem;
  using namespace styleval;

  const fs::path root = out_dir;
  auto manifest = synthetic::write_toy_manifest(root / "triplets", groups,
                                                candidates, seed);
  synthetic::write_toy_style_corpus(root / "styles" / "train", per_style, 0,
                                    seed + 1);
  synthetic::write_toy_style_corpus(root / "styles" / "heldout", heldout, 0,
                                    seed + 2);
  synthetic::write_rated_corpus(root / "rated" / "natural", 48, seed + 3, 0.0,
                                0, "ava-like");
  synthetic::write_rated_corpus(root / "rated" / "artistic", 24, seed + 4, 0.0,
                                0, "baid-like");
  auto bench = synthetic::write_toy_benchmark(root / "benchmark");

  std::cout << "manifest:   " << manifest.manifest_path.string() << "\n"
            << "styles:     " << (root / "styles").string() << "\n"
            << "rated:      " << (root / "rated").string() << "\n"
            << "benchmark:  " << bench.spec_path.string() << "\n";
  return 0;
}
