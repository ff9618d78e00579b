#include "styleval/config.hpp"

#include <fstream>
#include <sstream>

#include "styleval/errors.hpp"
#include "styleval/hash.hpp"

namespace styleval {

using nlohmann::json;

json default_config_json() {
  json j;
  j["cache_dir"] = "";
  j["seed"] = 42;
  j["jobs"] = 1;
  j["content"] = {{"alpha", 0.5},
                  {"semantic_backend", "ref-joint"},
                  {"structural_backend", "ref-stat"}};
  j["filter"] = {{"weights", {0.2, 0.6, 0.2}},
                 {"normalize_per_group", false},
                 {"resume", false}};
  j["style"] = {{"base_backend", "ref-stat"},
                {"head_dims", {32, 16}},
                {"temperature", 0.07},
                {"batch_size", 16},
                {"epochs", 10},
                {"learning_rate", 0.01},
                {"finetune_base", false},
                {"checkpoint", ""}};
  j["aesthetic"] = {{"feature_backend", "ref-fuse"},
                    {"captioner_backend", "ref-cap"},
                    {"head_dims", {32, 16, 1}},
                    {"learning_rate", 0.005},
                    {"learning_rate_stage2", -1.0},
                    {"epochs_stage1", 300},
                    {"epochs_stage2", 100},
                    {"batch_size", 16},
                    {"prompt_path", ""},
                    {"checkpoint", ""}};
  j["benchmark"] = {{"style_loss_layers", {0, 1, 2}}};
  return j;
}

namespace {

void merge_into(json& base, const json& overlay) {
  for (auto& [key, value] : overlay.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      merge_into(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

json parse_override_value(const std::string& key, const std::string& value) {
  if (key == "filter.weights" && value.find(',') != std::string::npos) {
    json arr = json::array();
    std::istringstream is(value);
    std::string part;
    while (std::getline(is, part, ',')) {
      try {
        arr.push_back(std::stod(part));
      } catch (const std::exception&) {
        throw Error(Errc::bad_config, "bad weights component '" + part + "'");
      }
    }
    if (arr.size() != 3) {
      throw Error(Errc::bad_config, "weights must be a,b,c");
    }
    return arr;
  }
  json parsed = json::parse(value, nullptr, false);
  if (!parsed.is_discarded() && !parsed.is_object() && !parsed.is_array()) {
    return parsed;
  }
  if (!parsed.is_discarded()) return parsed;
  return json(value);
}

void apply_override(json& cfg, const std::string& key, const std::string& value) {
  json::json_pointer ptr;
  std::istringstream is(key);
  std::string part;
  while (std::getline(is, part, '.')) ptr /= part;
  cfg[ptr] = parse_override_value(key, value);
}

template <class T>
T get_or_throw(const json& j, const char* key, const char* where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::bad_config, std::string("config ") + where + "." + key +
                                      ": " + e.what());
  }
}

}  // namespace

ToolConfig load_tool_config(
    const std::optional<std::filesystem::path>& file,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  json cfg = default_config_json();
  if (file) {
    std::ifstream in(*file);
    if (!in) {
      throw Error(Errc::bad_config, "cannot open config: " + file->string());
    }
    json user;
    try {
      in >> user;
    } catch (const json::exception& e) {
      throw Error(Errc::bad_config,
                  "config parse error in " + file->string() + ": " + e.what());
    }
    if (!user.is_object()) {
      throw Error(Errc::bad_config, "config root must be an object");
    }
    merge_into(cfg, user);
  }
  for (const auto& [key, value] : overrides) {
    apply_override(cfg, key, value);
  }

  ToolConfig out;
  out.effective = cfg;
  out.stamped = cfg;
  out.stamped.erase("jobs");
  out.stamped.erase("cache_dir");
  if (out.stamped.contains("filter")) out.stamped["filter"].erase("resume");
  out.config_hash = sha256_hex(out.stamped.dump()).substr(0, 16);
  out.cache_dir = get_or_throw<std::string>(cfg, "cache_dir", "");
  out.seed = get_or_throw<std::uint64_t>(cfg, "seed", "");
  out.jobs = get_or_throw<int>(cfg, "jobs", "");

  const json& content = cfg.at("content");
  out.content.alpha = get_or_throw<double>(content, "alpha", "content");
  out.content.semantic_backend =
      get_or_throw<std::string>(content, "semantic_backend", "content");
  out.content.structural_backend =
      get_or_throw<std::string>(content, "structural_backend", "content");
  if (out.content.alpha < 0.0 || out.content.alpha > 1.0) {
    throw Error(Errc::bad_config, "content.alpha must be in [0, 1]");
  }

  const json& filter = cfg.at("filter");
  const auto weights = get_or_throw<std::vector<double>>(filter, "weights", "filter");
  if (weights.size() != 3) {
    throw Error(Errc::bad_config, "filter.weights must have 3 entries");
  }
  out.filter.weight_a = weights[0];
  out.filter.weight_b = weights[1];
  out.filter.weight_c = weights[2];
  out.filter.alpha = out.content.alpha;
  out.filter.normalize_per_group =
      get_or_throw<bool>(filter, "normalize_per_group", "filter");
  out.filter.resume = get_or_throw<bool>(filter, "resume", "filter");

  const json& style = cfg.at("style");
  out.style.base_backend = get_or_throw<std::string>(style, "base_backend", "style");
  out.style.head_dims = get_or_throw<std::vector<int>>(style, "head_dims", "style");
  out.style.temperature = get_or_throw<double>(style, "temperature", "style");
  out.style.batch_size = get_or_throw<int>(style, "batch_size", "style");
  out.style.epochs = get_or_throw<int>(style, "epochs", "style");
  out.style.learning_rate = get_or_throw<double>(style, "learning_rate", "style");
  out.style.finetune_base = get_or_throw<bool>(style, "finetune_base", "style");
  out.style.seed = out.seed;
  out.style_checkpoint = get_or_throw<std::string>(style, "checkpoint", "style");

  const json& aes = cfg.at("aesthetic");
  out.aesthetic.feature_backend =
      get_or_throw<std::string>(aes, "feature_backend", "aesthetic");
  out.aesthetic.captioner_backend =
      get_or_throw<std::string>(aes, "captioner_backend", "aesthetic");
  out.aesthetic.head_dims =
      get_or_throw<std::vector<int>>(aes, "head_dims", "aesthetic");
  out.aesthetic.learning_rate =
      get_or_throw<double>(aes, "learning_rate", "aesthetic");
  out.aesthetic.learning_rate_stage2 =
      get_or_throw<double>(aes, "learning_rate_stage2", "aesthetic");
  out.aesthetic.epochs_stage1 =
      get_or_throw<int>(aes, "epochs_stage1", "aesthetic");
  out.aesthetic.epochs_stage2 =
      get_or_throw<int>(aes, "epochs_stage2", "aesthetic");
  out.aesthetic.batch_size = get_or_throw<int>(aes, "batch_size", "aesthetic");
  out.aesthetic.seed = out.seed;
  const std::string prompt_path =
      get_or_throw<std::string>(aes, "prompt_path", "aesthetic");
  if (!prompt_path.empty()) {
    std::ifstream pf(prompt_path);
    if (!pf) {
      throw Error(Errc::bad_config, "cannot open prompt file: " + prompt_path);
    }
    std::ostringstream ss;
    ss << pf.rdbuf();
    out.aesthetic.prompt = ss.str();
  }
  out.aesthetic_checkpoint = get_or_throw<std::string>(aes, "checkpoint", "aesthetic");

  const json& bench = cfg.at("benchmark");
  out.style_loss.layers =
      get_or_throw<std::vector<int>>(bench, "style_loss_layers", "benchmark");

  return out;
}

std::map<std::string, std::string> artifact_metadata(const ToolConfig& cfg) {
  return {
      {"config", cfg.stamped.dump()},
      {"config_hash", cfg.config_hash},
      {"seed", std::to_string(cfg.seed)},
  };
}

}  // namespace styleval
