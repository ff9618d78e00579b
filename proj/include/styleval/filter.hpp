#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "styleval/aesthetic.hpp"
#include "styleval/cache.hpp"
#include "styleval/content.hpp"
#include "styleval/manifest.hpp"
#include "styleval/style.hpp"

namespace styleval {

struct FilterConfig {
  double weight_a = 0.2;  // content preservation
  double weight_b = 0.6;  // style consistency
  double weight_c = 0.2;  // aesthetic appeal
  double alpha = 0.5;
  enum class TieBreak { lowest_index } tie_break = TieBreak::lowest_index;
  bool resume = false;
  // Min-max normalize each component within a group before selecting.
  // Off by default: the stated weights apply to the raw scales, aesthetic
  // included. Records always keep raw values.
  bool normalize_per_group = false;
};

// weight_a * c + weight_b * s + weight_c * a.
double combine(double c_score, double s_score, double a_score,
               const FilterConfig& cfg);

struct TripletScorers {
  ContentScoreConfig content;
  const StyleEncoderCheckpoint* style = nullptr;
  const AestheticCheckpoint* aesthetic = nullptr;
  const Embedder* embedder = nullptr;
  std::filesystem::path base_dir;  // resolves relative triplet paths
  // Test/diagnostic hook: replaces the real scorers entirely when set.
  std::function<ScoreRecord(const Triplet&, const FilterConfig&)> custom;
};

// Scores one triplet on all three axes. Any failure is rethrown with the
// triplet_id attached.
ScoreRecord score_triplet(const Triplet& t, const TripletScorers& scorers,
                          const FilterConfig& cfg);

// Highest total wins; ties go to the lowest group index. Throws
// Error(empty_group) for an empty group.
std::string select_best(const std::vector<ScoreRecord>& group,
                        const FilterConfig& cfg);

struct FilterPaths {
  std::filesystem::path out_manifest;
  std::filesystem::path scores;   // all candidate records (sidecar)
  std::filesystem::path journal;  // per-group completion journal
};

struct FilterResult {
  Manifest filtered;
  std::vector<ScoreRecord> scores;
  int groups_total = 0;
  int groups_resumed = 0;  // restored from the journal
  int groups_failed = 0;   // skipped after errors (resume mode only)
};

// Scores every group, selects one winner per group, and writes the
// filtered manifest plus the scores sidecar treating groups as independent
// work units (parallel when jobs != 1). Completed groups are appended to
// the journal as they finish; a rerun with cfg.resume set skips them and
// produces byte-identical outputs because all outputs are rebuilt sorted
// by group_id at the end. artifact_metadata is echoed into both outputs.
FilterResult filter_dataset(
    const Manifest& m, const TripletScorers& scorers, const FilterConfig& cfg,
    const FilterPaths& paths,
    const std::map<std::string, std::string>& artifact_metadata = {});

// Reads a scores sidecar (meta line skipped).
std::vector<ScoreRecord> load_score_records(const std::filesystem::path& path);

}  // namespace styleval
