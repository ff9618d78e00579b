#include "styleval/filter.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "styleval/errors.hpp"
#include "styleval/parallel.hpp"

namespace styleval {

using nlohmann::json;

double combine(double c_score, double s_score, double a_score,
               const FilterConfig& cfg) {
  if (!std::isfinite(c_score) || !std::isfinite(s_score) ||
      !std::isfinite(a_score)) {
    throw Error(Errc::non_finite_loss, "combine inputs must be finite");
  }
  return cfg.weight_a * c_score + cfg.weight_b * s_score +
         cfg.weight_c * a_score;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

}  // namespace

ScoreRecord score_triplet(const Triplet& t, const TripletScorers& scorers,
                          const FilterConfig& cfg) {
  if (scorers.custom) {
    return scorers.custom(t, cfg);
  }
  try {
    if (!scorers.style || !scorers.aesthetic || !scorers.embedder) {
      throw Error(Errc::bad_config, "score_triplet: scorers incomplete");
    }
    const Embedder& emb = *scorers.embedder;
    Image stylized = load_image(resolve(scorers.base_dir, t.stylized_path));
    Image content = load_image(resolve(scorers.base_dir, t.content_path));
    Image style_ref = load_image(resolve(scorers.base_dir, t.style_path));

    const double s_sem =
        semantic_score(stylized, t.content_caption, scorers.content, emb);
    const double s_struct =
        structural_score(stylized, content, scorers.content, emb);
    ContentScoreConfig ccfg = scorers.content;
    ccfg.alpha = cfg.alpha;
    const double c = content_score(s_sem, s_struct, ccfg);
    const double s = style_score(stylized, style_ref, *scorers.style, emb);
    const double a = aesthetic_score(stylized, *scorers.aesthetic, emb);

    ScoreRecord rec;
    rec.triplet_id = t.triplet_id;
    rec.c_score = c;
    rec.s_score = s;
    rec.a_score = a;
    rec.weight_a = cfg.weight_a;
    rec.weight_b = cfg.weight_b;
    rec.weight_c = cfg.weight_c;
    rec.alpha = cfg.alpha;
    rec.total = combine(c, s, a, cfg);
    rec.backend_ids["semantic"] = scorers.content.semantic_backend;
    rec.backend_ids["structural"] = scorers.content.structural_backend;
    rec.backend_ids["style"] = scorers.style->backend_id;
    rec.backend_ids["aesthetic"] = scorers.aesthetic->backend_id;
    rec.backend_ids["captioner"] = scorers.aesthetic->config.captioner_backend;
    return rec;
  } catch (const Error& e) {
    throw Error(e.code(), "triplet '" + t.triplet_id + "': " + e.what());
  }
}

std::string select_best(const std::vector<ScoreRecord>& group,
                        const FilterConfig& cfg) {
  if (group.empty()) {
    throw Error(Errc::empty_group, "select_best on empty group");
  }
  std::vector<double> totals(group.size());
  if (cfg.normalize_per_group) {
    auto norm = [&](auto get) {
      double lo = get(group[0]), hi = get(group[0]);
      for (const ScoreRecord& r : group) {
        lo = std::min(lo, get(r));
        hi = std::max(hi, get(r));
      }
      std::vector<double> out(group.size());
      for (std::size_t i = 0; i < group.size(); ++i) {
        out[i] = hi > lo ? (get(group[i]) - lo) / (hi - lo) : 0.0;
      }
      return out;
    };
    const auto c = norm([](const ScoreRecord& r) { return r.c_score; });
    const auto s = norm([](const ScoreRecord& r) { return r.s_score; });
    const auto a = norm([](const ScoreRecord& r) { return r.a_score; });
    for (std::size_t i = 0; i < group.size(); ++i) {
      totals[i] = combine(c[i], s[i], a[i], cfg);
    }
  } else {
    for (std::size_t i = 0; i < group.size(); ++i) {
      totals[i] = group[i].total;
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < group.size(); ++i) {
    if (totals[i] > totals[best]) best = i;  // strict: ties keep lowest index
  }
  return group[best].triplet_id;
}

namespace {

struct GroupOutcome {
  std::string winner;
  std::vector<ScoreRecord> records;
};

// progress.jsonl line: {"group_id":..., "winner":..., "records":[...]}.
std::map<std::string, GroupOutcome> load_journal(
    const std::filesystem::path& path) {
  std::map<std::string, GroupOutcome> done;
  std::ifstream in(path);
  if (!in) return done;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      continue;  // torn tail write from an interrupted run
    }
    GroupOutcome g;
    g.winner = j.value("winner", "");
    if (auto it = j.find("records"); it != j.end() && it->is_array()) {
      for (const auto& r : *it) {
        g.records.push_back(score_record_from_json(r.dump()));
      }
    }
    if (!g.winner.empty()) {
      done[j.value("group_id", "")] = std::move(g);
    }
  }
  return done;
}

}  // namespace

FilterResult filter_dataset(
    const Manifest& m, const TripletScorers& scorers, const FilterConfig& cfg,
    const FilterPaths& paths,
    const std::map<std::string, std::string>& artifact_metadata) {
  const auto groups = group_candidates(m);

  // Snapshot of finished groups; read-only inside the parallel loop.
  std::map<std::string, GroupOutcome> journal_done;
  if (cfg.resume && !paths.journal.empty()) {
    journal_done = load_journal(paths.journal);
  }

  FilterResult result;
  result.groups_total = static_cast<int>(groups.size());

  std::ofstream journal;
  if (!paths.journal.empty()) {
    journal.open(paths.journal, cfg.resume ? std::ios::app : std::ios::trunc);
    if (!journal) {
      throw Error(Errc::io_error, "cannot open journal: " + paths.journal.string());
    }
  }

  const int n = static_cast<int>(groups.size());
  enum class State { pending, computed, resumed, failed };
  std::vector<GroupOutcome> outcomes(n);
  std::vector<State> states(n, State::pending);
  std::mutex mu;
  std::exception_ptr first_error;
  std::atomic<bool> stop{false};

#pragma omp parallel for schedule(dynamic) if (parallel::enabled())
  for (int gi = 0; gi < n; ++gi) {
    if (stop.load(std::memory_order_relaxed)) continue;
    const auto& [group_id, triplets] = groups[gi];
    if (auto it = journal_done.find(group_id); it != journal_done.end()) {
      outcomes[gi] = it->second;
      states[gi] = State::resumed;
      continue;
    }
    GroupOutcome outcome;
    try {
      for (const Triplet& t : triplets) {
        outcome.records.push_back(score_triplet(t, scorers, cfg));
      }
      outcome.winner = select_best(outcome.records, cfg);
    } catch (...) {
      states[gi] = State::failed;
      if (cfg.resume) {
        std::lock_guard lock(mu);
        try {
          std::rethrow_exception(std::current_exception());
        } catch (const std::exception& e) {
          std::cerr << "[styleval] group '" << group_id
                    << "' failed, skipped: " << e.what() << "\n";
        }
      } else {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
        stop.store(true, std::memory_order_relaxed);
      }
      continue;
    }
    outcomes[gi] = std::move(outcome);
    states[gi] = State::computed;
    std::lock_guard lock(mu);
    if (journal.is_open()) {
      json line;
      line["group_id"] = group_id;
      line["winner"] = outcomes[gi].winner;
      json records = json::array();
      for (const ScoreRecord& r : outcomes[gi].records) {
        records.push_back(json::parse(score_record_to_json(r)));
      }
      line["records"] = std::move(records);
      journal << line.dump() << "\n" << std::flush;
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  // Deterministic assembly independent of completion order: sort by
  // group_id, winners into the manifest, every record into the sidecar.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return groups[a].first < groups[b].first;
  });

  std::map<std::string, const Triplet*> by_id;
  for (const Triplet& t : m.entries) by_id[t.triplet_id] = &t;

  result.filtered.version = m.version;
  result.filtered.metadata = m.metadata;
  for (const auto& [k, v] : artifact_metadata) result.filtered.metadata[k] = v;

  for (int gi : order) {
    switch (states[gi]) {
      case State::resumed:
        result.groups_resumed += 1;
        break;
      case State::failed:
      case State::pending:
        result.groups_failed += 1;
        continue;
      case State::computed:
        break;
    }
    const GroupOutcome& outcome = outcomes[gi];
    auto it = by_id.find(outcome.winner);
    if (it == by_id.end()) {
      throw Error(Errc::malformed_line,
                  "journal winner '" + outcome.winner + "' not in manifest");
    }
    result.filtered.entries.push_back(*it->second);
    for (const ScoreRecord& r : outcome.records) {
      result.scores.push_back(r);
    }
  }

  if (!paths.out_manifest.empty()) {
    write_manifest(result.filtered, paths.out_manifest);
  }
  if (!paths.scores.empty()) {
    std::ofstream out(paths.scores, std::ios::binary);
    if (!out) {
      throw Error(Errc::io_error, "cannot write scores: " + paths.scores.string());
    }
    json meta;
    meta["type"] = "meta";
    meta["weights"] = {cfg.weight_a, cfg.weight_b, cfg.weight_c};
    meta["alpha"] = cfg.alpha;
    for (const auto& [k, v] : artifact_metadata) meta[k] = v;
    out << meta.dump() << "\n";
    for (const ScoreRecord& r : result.scores) {
      out << score_record_to_json(r) << "\n";
    }
  }
  return result;
}

std::vector<ScoreRecord> load_score_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::io_error, "cannot open scores: " + path.string());
  }
  std::vector<ScoreRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(Errc::malformed_line, "bad scores line in " + path.string());
    }
    if (!j.contains("triplet_id")) continue;  // meta line
    out.push_back(score_record_from_json(line));
  }
  return out;
}

}  // namespace styleval
