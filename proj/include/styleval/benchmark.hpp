#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "styleval/features.hpp"
#include "styleval/filter.hpp"
#include "styleval/manifest.hpp"

namespace styleval {

enum class BenchmarkMode { image_guided, instruction_guided };

struct BenchmarkEntry {
  std::string id;
  std::string path;
  std::string caption;  // contents only; auto-captioned when empty
};

struct BenchmarkSpec {
  std::vector<BenchmarkEntry> contents;
  std::vector<BenchmarkEntry> styles;
  BenchmarkMode mode = BenchmarkMode::image_guided;
  std::map<std::string, std::string> instructions;  // style_id -> instruction
  std::filesystem::path base_dir;                   // resolves relative paths
};

// JSON spec file: {"mode": "image_guided"|"instruction_guided",
// "content_images": [{"id","path","caption"?}, ...],
// "style_images": [{"id","path"}, ...], "instructions": {style_id: text}}.
// Instruction mode requires an instruction for every style.
BenchmarkSpec load_benchmark_spec(const std::filesystem::path& path);

struct MethodOutputs {
  std::string method_id;
  // (content_id, style_id) -> stylized image path
  std::map<std::pair<std::string, std::string>, std::string> outputs;
};

// Scans <dir> for files named <content_id>__<style_id>.png|.jpg|.jpeg.
MethodOutputs discover_method_outputs(const std::filesystem::path& dir,
                                      const std::string& method_id);

struct PairMetrics {
  std::string content_id;
  std::string style_id;
  double content_preservation = 0.0;
  double style_consistency = 0.0;
  double aesthetic_appeal = 0.0;
  double style_loss = 0.0;
};

struct MethodReport {
  std::string method_id;
  std::vector<PairMetrics> pairs;
  double mean_content = 0.0;
  double mean_style = 0.0;
  double mean_aesthetic = 0.0;
  double mean_style_loss = 0.0;
  std::vector<std::pair<std::string, std::string>> missing;
  bool partial = false;

  void recompute_means();
};

// Scores every (content, style) pair the method produced; missing pairs are
// listed and excluded and mark the report partial. Per-pair work runs in
// parallel; rows always come out in spec order.
MethodReport evaluate_method(const BenchmarkSpec& spec,
                             const MethodOutputs& outputs,
                             const TripletScorers& scorers,
                             const StyleLossConfig& loss_cfg = {});

struct BenchmarkReport {
  std::vector<MethodReport> rows;
  std::map<std::string, std::string> metadata;
};

nlohmann::json report_to_json(const BenchmarkReport& report);
BenchmarkReport report_from_json(const nlohmann::json& j);

enum class ReportFormat { csv, markdown };

// CSV columns: method,content_preservation,style_consistency,
// aesthetic_appeal,style_loss. Markdown headers carry the metric arrows.
void emit_report(const BenchmarkReport& report, ReportFormat format,
                 const std::filesystem::path& path);

// Score components for the selection-ablation harness.
enum class Component { content, style, aesthetic };

struct AblationRow {
  std::set<Component> components;
  std::string label;
  double mean_style_loss = 0.0;
  std::map<std::string, std::string> winners;  // group_id -> triplet_id
};

// Re-selects winners per group using only the given component subsets
// (other weights zeroed) and reports the mean Gram style loss of each
// subset's winners. All candidates are scored once; subsets reuse the
// per-component scores.
std::vector<AblationRow> ablation_report(
    const Manifest& m, const TripletScorers& scorers, const FilterConfig& cfg,
    const std::vector<std::set<Component>>& component_sets,
    const StyleLossConfig& loss_cfg = {});

}  // namespace styleval
