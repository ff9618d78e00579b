#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace styleval {

// One content-style-stylized record. group_id ties together all candidate
// stylizations of the same content/style pair; generator_id says which
// model produced this candidate.
struct Triplet {
  std::string triplet_id;
  std::string content_path;
  std::string style_path;
  std::string stylized_path;
  std::string content_caption;
  std::string style_category;
  std::optional<std::string> instruction;
  std::string generator_id;
  std::string group_id;

  bool operator==(const Triplet&) const = default;
};

// Per-triplet axis scores plus the exact weights they were combined with,
// so every record can be re-audited without the config that produced it.
struct ScoreRecord {
  std::string triplet_id;
  double c_score = 0.0;
  double s_score = 0.0;
  double a_score = 0.0;
  double total = 0.0;
  double weight_a = 0.0;
  double weight_b = 0.0;
  double weight_c = 0.0;
  double alpha = 0.0;
  std::map<std::string, std::string> backend_ids;  // scorer role -> backend

  double recompute_total() const {
    return weight_a * c_score + weight_b * s_score + weight_c * a_score;
  }

  bool operator==(const ScoreRecord&) const = default;
};

struct Manifest {
  int version = 1;
  std::vector<Triplet> entries;
  std::map<std::string, std::string> metadata;

  bool operator==(const Manifest&) const = default;
};

// Ground-truth rated image for aesthetic regression; corpus_id tells the
// natural-image stage from the artistic fine-tune stage apart.
struct RatedImage {
  std::string image_path;
  double score = 0.0;
  std::string corpus_id;

  bool operator==(const RatedImage&) const = default;
};

struct StyleLabeledImage {
  std::string image_path;
  std::string style_label;

  bool operator==(const StyleLabeledImage&) const = default;
};

// JSONL, one triplet per line. An optional first line holds
// {"version":..., "metadata":{...}}; any line carrying "triplet_id" is an
// entry. Errors cite the 1-based line number of the offender.
Manifest load_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& m, const std::filesystem::path& path);

// Partition by group_id, groups ordered by first appearance, entries in
// manifest order within each group.
std::vector<std::pair<std::string, std::vector<Triplet>>> group_candidates(
    const Manifest& m);

// ScoreRecord JSONL round-trip (scores sidecar, journal payloads).
std::string score_record_to_json(const ScoreRecord& r);
ScoreRecord score_record_from_json(const std::string& line);

// Ingest: style-labeled corpus laid out as <root>/<style_label>/*.png|jpg,
// labels and filenames in lexicographic order.
std::vector<StyleLabeledImage> load_style_corpus(
    const std::filesystem::path& root);

// Ingest: rated corpus CSV with header "image_path,score,corpus_id".
// Relative image paths are resolved against the CSV's directory.
std::vector<RatedImage> load_rated_corpus(const std::filesystem::path& csv);

}  // namespace styleval
