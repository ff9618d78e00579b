#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "styleval/aesthetic.hpp"
#include "styleval/content.hpp"
#include "styleval/features.hpp"
#include "styleval/filter.hpp"
#include "styleval/style.hpp"

namespace styleval {

// One structured config file drives every stage; flag overrides win over
// file values. The effective (merged) config and its hash are stamped into
// every output artifact.
struct ToolConfig {
  nlohmann::json effective;
  // `effective` minus execution-mode keys (jobs, cache_dir, resume): the
  // version stamped into artifacts, so reruns under different worker
  // counts or resume states stay byte-identical.
  nlohmann::json stamped;
  std::string config_hash;  // sha256 of the canonical stamped dump, first 16 hex

  std::string cache_dir;
  std::uint64_t seed = 42;
  int jobs = 1;

  ContentScoreConfig content;
  FilterConfig filter;
  ContrastiveTrainConfig style;
  AestheticTrainConfig aesthetic;
  StyleLossConfig style_loss;

  std::string style_checkpoint;      // path; empty selects the seeded
  std::string aesthetic_checkpoint;  // untrained default head
};

nlohmann::json default_config_json();

// Overrides use dotted keys ("content.alpha", "filter.weights", "seed");
// values parse as JSON when possible, otherwise as strings.
// "filter.weights" additionally accepts "a,b,c".
ToolConfig load_tool_config(
    const std::optional<std::filesystem::path>& file,
    const std::vector<std::pair<std::string, std::string>>& overrides);

// Standard artifact stamp: config hash, seed, jobs.
std::map<std::string, std::string> artifact_metadata(const ToolConfig& cfg);

}  // namespace styleval
