#include "styleval/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "styleval/errors.hpp"

namespace styleval {

using nlohmann::json;

namespace {

json triplet_to_json(const Triplet& t) {
  json j;
  j["triplet_id"] = t.triplet_id;
  j["content_path"] = t.content_path;
  j["style_path"] = t.style_path;
  j["stylized_path"] = t.stylized_path;
  j["content_caption"] = t.content_caption;
  j["style_category"] = t.style_category;
  if (t.instruction) j["instruction"] = *t.instruction;
  j["generator_id"] = t.generator_id;
  j["group_id"] = t.group_id;
  return j;
}

Triplet triplet_from_json(const json& j, int line_no) {
  auto field = [&](const char* name) -> std::string {
    auto it = j.find(name);
    if (it == j.end() || !it->is_string()) {
      throw Error(Errc::malformed_line,
                  "line " + std::to_string(line_no) + ": missing field '" +
                      name + "'");
    }
    return it->get<std::string>();
  };
  Triplet t;
  t.triplet_id = field("triplet_id");
  t.content_path = field("content_path");
  t.style_path = field("style_path");
  t.stylized_path = field("stylized_path");
  t.content_caption = field("content_caption");
  t.style_category = field("style_category");
  if (auto it = j.find("instruction"); it != j.end() && it->is_string()) {
    t.instruction = it->get<std::string>();
  }
  t.generator_id = field("generator_id");
  t.group_id = field("group_id");
  return t;
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::io_error, "cannot open manifest: " + path.string());
  }
  Manifest m;
  std::set<std::string> seen_ids;
  // group_id -> (content_path, style_path) of the group's first member
  std::map<std::string, std::pair<std::string, std::string>> group_key;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(Errc::malformed_line,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) {
      throw Error(Errc::malformed_line,
                  "line " + std::to_string(line_no) + ": not a JSON object");
    }
    if (!j.contains("triplet_id")) {
      // Header record: only legal as the first line.
      if (line_no != 1) {
        throw Error(Errc::malformed_line,
                    "line " + std::to_string(line_no) +
                        ": header record past line 1");
      }
      m.version = j.value("version", 1);
      if (auto it = j.find("metadata"); it != j.end() && it->is_object()) {
        for (auto& [k, v] : it->items()) {
          m.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
      }
      continue;
    }
    Triplet t = triplet_from_json(j, line_no);
    if (!seen_ids.insert(t.triplet_id).second) {
      throw Error(Errc::duplicate_id,
                  "line " + std::to_string(line_no) +
                      ": duplicate triplet_id '" + t.triplet_id + "'");
    }
    auto [it, inserted] = group_key.try_emplace(
        t.group_id, std::make_pair(t.content_path, t.style_path));
    if (!inserted && (it->second.first != t.content_path ||
                      it->second.second != t.style_path)) {
      throw Error(Errc::inconsistent_group,
                  "line " + std::to_string(line_no) + ": group '" +
                      t.group_id +
                      "' mixes different content/style paths");
    }
    m.entries.push_back(std::move(t));
  }
  return m;
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(Errc::io_error, "cannot write manifest: " + path.string());
  }
  json header;
  header["version"] = m.version;
  header["metadata"] = m.metadata;
  out << header.dump() << "\n";
  for (const Triplet& t : m.entries) {
    out << triplet_to_json(t).dump() << "\n";
  }
  if (!out) {
    throw Error(Errc::io_error, "write failed: " + path.string());
  }
}

std::vector<std::pair<std::string, std::vector<Triplet>>> group_candidates(
    const Manifest& m) {
  std::vector<std::pair<std::string, std::vector<Triplet>>> groups;
  std::map<std::string, std::size_t> index;
  for (const Triplet& t : m.entries) {
    auto [it, inserted] = index.try_emplace(t.group_id, groups.size());
    if (inserted) {
      groups.emplace_back(t.group_id, std::vector<Triplet>{});
    }
    groups[it->second].second.push_back(t);
  }
  return groups;
}

std::string score_record_to_json(const ScoreRecord& r) {
  json j;
  j["triplet_id"] = r.triplet_id;
  j["c_score"] = r.c_score;
  j["s_score"] = r.s_score;
  j["a_score"] = r.a_score;
  j["total"] = r.total;
  j["weights"] = {r.weight_a, r.weight_b, r.weight_c};
  j["alpha"] = r.alpha;
  j["backend_ids"] = r.backend_ids;
  return j.dump();
}

ScoreRecord score_record_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_line, std::string("bad score record: ") + e.what());
  }
  ScoreRecord r;
  r.triplet_id = j.at("triplet_id").get<std::string>();
  r.c_score = j.at("c_score").get<double>();
  r.s_score = j.at("s_score").get<double>();
  r.a_score = j.at("a_score").get<double>();
  r.total = j.at("total").get<double>();
  auto w = j.at("weights");
  if (!w.is_array() || w.size() != 3) {
    throw Error(Errc::malformed_line, "score record weights must be [a,b,c]");
  }
  r.weight_a = w[0].get<double>();
  r.weight_b = w[1].get<double>();
  r.weight_c = w[2].get<double>();
  r.alpha = j.at("alpha").get<double>();
  if (auto it = j.find("backend_ids"); it != j.end() && it->is_object()) {
    for (auto& [k, v] : it->items()) r.backend_ids[k] = v.get<std::string>();
  }
  return r;
}

std::vector<StyleLabeledImage> load_style_corpus(
    const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) {
    throw Error(Errc::io_error, "style corpus root not a directory: " + root.string());
  }
  std::vector<std::string> labels;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) labels.push_back(e.path().filename().string());
  }
  std::sort(labels.begin(), labels.end());

  std::vector<StyleLabeledImage> out;
  for (const std::string& label : labels) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(root / label)) {
      if (!e.is_regular_file()) continue;
      std::string ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
        files.push_back(e.path().string());
      }
    }
    std::sort(files.begin(), files.end());
    for (std::string& f : files) {
      out.push_back(StyleLabeledImage{std::move(f), label});
    }
  }
  return out;
}

std::vector<RatedImage> load_rated_corpus(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) {
    throw Error(Errc::io_error, "cannot open rated corpus: " + csv.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(Errc::malformed_line, "rated corpus is empty: " + csv.string());
  }
  if (line != "image_path,score,corpus_id") {
    throw Error(Errc::malformed_line,
                "rated corpus header must be 'image_path,score,corpus_id'");
  }
  std::vector<RatedImage> out;
  int line_no = 1;
  const std::filesystem::path base = csv.parent_path();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t c1 = line.find(',');
    std::size_t c2 = line.rfind(',');
    if (c1 == std::string::npos || c2 == c1) {
      throw Error(Errc::malformed_line,
                  "line " + std::to_string(line_no) + ": expected 3 fields");
    }
    RatedImage r;
    std::filesystem::path p = line.substr(0, c1);
    r.image_path = (p.is_absolute() ? p : base / p).string();
    try {
      r.score = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    } catch (const std::exception&) {
      throw Error(Errc::malformed_line,
                  "line " + std::to_string(line_no) + ": bad score");
    }
    if (!std::isfinite(r.score)) {
      throw Error(Errc::malformed_line,
                  "line " + std::to_string(line_no) + ": score not finite");
    }
    r.corpus_id = line.substr(c2 + 1);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace styleval
