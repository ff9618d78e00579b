#include "styleval/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include "styleval/errors.hpp"
#include "styleval/parallel.hpp"

namespace styleval {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

std::vector<BenchmarkEntry> parse_entries(const json& arr, const char* what) {
  if (!arr.is_array()) {
    throw Error(Errc::bad_config, std::string(what) + " must be an array");
  }
  std::vector<BenchmarkEntry> out;
  for (const auto& e : arr) {
    BenchmarkEntry entry;
    if (e.is_string()) {
      entry.path = e.get<std::string>();
      entry.id = std::filesystem::path(entry.path).stem().string();
    } else if (e.is_object()) {
      entry.id = e.value("id", "");
      entry.path = e.value("path", "");
      entry.caption = e.value("caption", "");
      if (entry.id.empty()) {
        entry.id = std::filesystem::path(entry.path).stem().string();
      }
    } else {
      throw Error(Errc::bad_config,
                  std::string(what) + " entries must be strings or objects");
    }
    if (entry.path.empty()) {
      throw Error(Errc::bad_config, std::string(what) + " entry missing path");
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace

BenchmarkSpec load_benchmark_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::io_error, "cannot open benchmark spec: " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::bad_config,
                "benchmark spec parse error: " + std::string(e.what()));
  }
  BenchmarkSpec spec;
  spec.base_dir = path.parent_path();
  const std::string mode = j.value("mode", "image_guided");
  if (mode == "image_guided") {
    spec.mode = BenchmarkMode::image_guided;
  } else if (mode == "instruction_guided") {
    spec.mode = BenchmarkMode::instruction_guided;
  } else {
    throw Error(Errc::bad_config, "unknown benchmark mode '" + mode + "'");
  }
  spec.contents = parse_entries(j.at("content_images"), "content_images");
  spec.styles = parse_entries(j.at("style_images"), "style_images");
  if (auto it = j.find("instructions"); it != j.end() && it->is_object()) {
    for (auto& [k, v] : it->items()) {
      spec.instructions[k] = v.get<std::string>();
    }
  }
  if (spec.mode == BenchmarkMode::instruction_guided) {
    for (const BenchmarkEntry& s : spec.styles) {
      if (!spec.instructions.count(s.id)) {
        throw Error(Errc::bad_config,
                    "instruction mode requires an instruction for style '" +
                        s.id + "'");
      }
    }
  }
  return spec;
}

MethodOutputs discover_method_outputs(const std::filesystem::path& dir,
                                      const std::string& method_id) {
  namespace fs = std::filesystem;
  MethodOutputs out;
  out.method_id = method_id;
  if (!fs::is_directory(dir)) {
    throw Error(Errc::io_error, "method output dir missing: " + dir.string());
  }
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") continue;
    const std::string stem = e.path().stem().string();
    const std::size_t sep = stem.find("__");
    if (sep == std::string::npos) continue;
    out.outputs[{stem.substr(0, sep), stem.substr(sep + 2)}] =
        e.path().string();
  }
  return out;
}

void MethodReport::recompute_means() {
  mean_content = mean_style = mean_aesthetic = mean_style_loss = 0.0;
  if (pairs.empty()) return;
  for (const PairMetrics& p : pairs) {
    mean_content += p.content_preservation;
    mean_style += p.style_consistency;
    mean_aesthetic += p.aesthetic_appeal;
    mean_style_loss += p.style_loss;
  }
  const double n = static_cast<double>(pairs.size());
  mean_content /= n;
  mean_style /= n;
  mean_aesthetic /= n;
  mean_style_loss /= n;
}

MethodReport evaluate_method(const BenchmarkSpec& spec,
                             const MethodOutputs& outputs,
                             const TripletScorers& scorers,
                             const StyleLossConfig& loss_cfg) {
  if (!scorers.style || !scorers.aesthetic || !scorers.embedder) {
    throw Error(Errc::bad_config, "evaluate_method: scorers incomplete");
  }
  const Embedder& emb = *scorers.embedder;

  MethodReport report;
  report.method_id = outputs.method_id;

  struct Task {
    const BenchmarkEntry* content;
    const BenchmarkEntry* style;
    std::string output_path;
  };
  std::vector<Task> tasks;
  for (const BenchmarkEntry& c : spec.contents) {
    for (const BenchmarkEntry& s : spec.styles) {
      auto it = outputs.outputs.find({c.id, s.id});
      if (it == outputs.outputs.end()) {
        report.missing.emplace_back(c.id, s.id);
        continue;
      }
      tasks.push_back(Task{&c, &s, it->second});
    }
  }
  report.partial = !report.missing.empty();

  const int n = static_cast<int>(tasks.size());
  std::vector<PairMetrics> rows(n);
  std::exception_ptr first_error;
  std::mutex mu;

#pragma omp parallel for schedule(dynamic) if (parallel::enabled())
  for (int i = 0; i < n; ++i) {
    try {
      const Task& task = tasks[i];
      Image stylized = load_image(task.output_path);
      Image content = load_image(resolve(spec.base_dir, task.content->path));
      Image style_ref = load_image(resolve(spec.base_dir, task.style->path));

      std::string caption = task.content->caption;
      if (caption.empty()) {
        // No caption in the spec file: generate one for the content image
        // with the configured captioner (recorded in report metadata).
        caption = emb.caption(scorers.aesthetic->config.captioner_backend,
                              content);
      }
      const double s_sem = semantic_score(stylized, caption, scorers.content, emb);
      const double s_struct =
          structural_score(stylized, content, scorers.content, emb);

      PairMetrics pm;
      pm.content_id = task.content->id;
      pm.style_id = task.style->id;
      pm.content_preservation = content_score(s_sem, s_struct, scorers.content);
      pm.style_consistency = style_score(stylized, style_ref, *scorers.style, emb);
      pm.aesthetic_appeal = aesthetic_score(stylized, *scorers.aesthetic, emb);
      pm.style_loss = style_loss(stylized, style_ref, loss_cfg);
      rows[i] = pm;
    } catch (...) {
      std::lock_guard lock(mu);
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  report.pairs = std::move(rows);
  report.recompute_means();
  return report;
}

json report_to_json(const BenchmarkReport& report) {
  json j;
  j["metadata"] = report.metadata;
  json rows = json::array();
  for (const MethodReport& m : report.rows) {
    json r;
    r["method"] = m.method_id;
    r["content_preservation"] = m.mean_content;
    r["style_consistency"] = m.mean_style;
    r["aesthetic_appeal"] = m.mean_aesthetic;
    r["style_loss"] = m.mean_style_loss;
    r["partial"] = m.partial;
    json missing = json::array();
    for (const auto& [c, s] : m.missing) missing.push_back({c, s});
    r["missing"] = std::move(missing);
    json pairs = json::array();
    for (const PairMetrics& p : m.pairs) {
      pairs.push_back({{"content_id", p.content_id},
                       {"style_id", p.style_id},
                       {"content_preservation", p.content_preservation},
                       {"style_consistency", p.style_consistency},
                       {"aesthetic_appeal", p.aesthetic_appeal},
                       {"style_loss", p.style_loss}});
    }
    r["pairs"] = std::move(pairs);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

BenchmarkReport report_from_json(const json& j) {
  BenchmarkReport report;
  if (auto it = j.find("metadata"); it != j.end() && it->is_object()) {
    for (auto& [k, v] : it->items()) {
      report.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  for (const auto& r : j.at("rows")) {
    MethodReport m;
    m.method_id = r.at("method").get<std::string>();
    m.partial = r.value("partial", false);
    if (auto it = r.find("missing"); it != r.end()) {
      for (const auto& pair : *it) {
        m.missing.emplace_back(pair.at(0).get<std::string>(),
                               pair.at(1).get<std::string>());
      }
    }
    for (const auto& p : r.at("pairs")) {
      PairMetrics pm;
      pm.content_id = p.at("content_id").get<std::string>();
      pm.style_id = p.at("style_id").get<std::string>();
      pm.content_preservation = p.at("content_preservation").get<double>();
      pm.style_consistency = p.at("style_consistency").get<double>();
      pm.aesthetic_appeal = p.at("aesthetic_appeal").get<double>();
      pm.style_loss = p.at("style_loss").get<double>();
      m.pairs.push_back(std::move(pm));
    }
    m.recompute_means();
    report.rows.push_back(std::move(m));
  }
  return report;
}

void emit_report(const BenchmarkReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(Errc::io_error, "cannot write report: " + path.string());
  }
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  if (format == ReportFormat::csv) {
    out << "method,content_preservation,style_consistency,aesthetic_appeal,"
           "style_loss\n";
    for (const MethodReport& m : report.rows) {
      out << m.method_id << "," << fmt(m.mean_content) << ","
          << fmt(m.mean_style) << "," << fmt(m.mean_aesthetic) << ","
          << fmt(m.mean_style_loss) << "\n";
    }
  } else {
    out << "| Method | Content Preservation ↑ | Style Consistency ↑ | "
           "Aesthetic Appeal ↑ | Style Loss ↓ |\n";
    out << "|---|---|---|---|---|\n";
    for (const MethodReport& m : report.rows) {
      out << "| " << m.method_id << " | " << fmt(m.mean_content) << " | "
          << fmt(m.mean_style) << " | " << fmt(m.mean_aesthetic) << " | "
          << fmt(m.mean_style_loss) << " |\n";
    }
    for (const MethodReport& m : report.rows) {
      if (m.partial) {
        out << "\n*" << m.method_id << " is partial: " << m.missing.size()
            << " missing pair(s).*\n";
      }
    }
  }
  if (!out) {
    throw Error(Errc::io_error, "report write failed: " + path.string());
  }
}

std::vector<AblationRow> ablation_report(
    const Manifest& m, const TripletScorers& scorers, const FilterConfig& cfg,
    const std::vector<std::set<Component>>& component_sets,
    const StyleLossConfig& loss_cfg) {
  const auto groups = group_candidates(m);
  for (const auto& [gid, triplets] : groups) {
    if (triplets.size() < 2) {
      throw Error(Errc::bad_config,
                  "ablation needs 2+ candidates per group; group '" + gid +
                      "' has " + std::to_string(triplets.size()));
    }
  }

  // Score every candidate once; subsets recombine the component scores.
  std::map<std::string, std::vector<ScoreRecord>> scored;
  std::map<std::string, const Triplet*> by_id;
  for (const auto& [gid, triplets] : groups) {
    for (const Triplet& t : triplets) {
      scored[gid].push_back(score_triplet(t, scorers, cfg));
      by_id[t.triplet_id] = &t;
    }
  }

  auto component_label = [](const std::set<Component>& set) {
    std::string label;
    for (Component c : set) {
      if (!label.empty()) label += "+";
      switch (c) {
        case Component::content: label += "content"; break;
        case Component::style: label += "style"; break;
        case Component::aesthetic: label += "aesthetic"; break;
      }
    }
    return label.empty() ? "none" : label;
  };

  std::vector<AblationRow> rows;
  for (const std::set<Component>& subset : component_sets) {
    if (subset.empty()) {
      throw Error(Errc::bad_config, "empty component subset");
    }
    FilterConfig sub = cfg;
    sub.weight_a = subset.count(Component::content) ? cfg.weight_a : 0.0;
    sub.weight_b = subset.count(Component::style) ? cfg.weight_b : 0.0;
    sub.weight_c = subset.count(Component::aesthetic) ? cfg.weight_c : 0.0;

    AblationRow row;
    row.components = subset;
    row.label = component_label(subset);
    double loss_sum = 0.0;
    int count = 0;
    for (const auto& [gid, records] : scored) {
      // Recombine totals under the subset weights.
      std::vector<ScoreRecord> adjusted = records;
      for (ScoreRecord& r : adjusted) {
        r.weight_a = sub.weight_a;
        r.weight_b = sub.weight_b;
        r.weight_c = sub.weight_c;
        r.total = r.recompute_total();
      }
      const std::string winner = select_best(adjusted, sub);
      row.winners[gid] = winner;
      const Triplet& t = *by_id.at(winner);
      Image stylized = load_image(
          scorers.base_dir.empty() || std::filesystem::path(t.stylized_path).is_absolute()
              ? std::filesystem::path(t.stylized_path)
              : scorers.base_dir / t.stylized_path);
      Image style_ref = load_image(
          scorers.base_dir.empty() || std::filesystem::path(t.style_path).is_absolute()
              ? std::filesystem::path(t.style_path)
              : scorers.base_dir / t.style_path);
      loss_sum += style_loss(stylized, style_ref, loss_cfg);
      count += 1;
    }
    row.mean_style_loss = count > 0 ? loss_sum / count : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace styleval
