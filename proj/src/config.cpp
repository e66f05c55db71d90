#include "racov/config.hpp"

#include <fstream>

#include <json.hpp>

#include "racov/error.hpp"

namespace racov {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& p) {
  if (p.is_absolute()) return p.lexically_normal();
  return (base / p).lexically_normal();
}

std::optional<std::filesystem::path> opt_path(const json& obj, const char* key,
                                              const std::filesystem::path& base) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return resolve(base, obj[key].get<std::string>());
}

}  // namespace

void RunConfig::validate() const {
  if (dataset_path.empty())
    throw Error(ErrorKind::config, "config: dataset.path is required");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorKind::config, "config: split.train_fraction must lie in (0,1)");
  if (k < 1) throw Error(ErrorKind::config, "config: features.k must be >= 1");
  if (matchers.empty())
    throw Error(ErrorKind::config, "config: at least one matcher must be enabled");
  edit_policy.validate();
  if (n_resamples < 1000)
    throw Error(ErrorKind::config, "config: bootstrap.n_resamples must be >= 1000");
  if (lr.max_iter < 1 || lr.tol <= 0.0 || lr.l2 < 0.0)
    throw Error(ErrorKind::config, "config: invalid lr parameters");

  const bool has_replay = replay_path.has_value();
  const bool has_endpoint = endpoint.has_value();
  if (has_replay == has_endpoint)
    throw Error(ErrorKind::config,
                "config: exactly one of llm.replay_path and llm.endpoint must be set");
  if (llm_mode == LlmMode::replay && !has_replay)
    throw Error(ErrorKind::config, "config: llm.mode is replay but no replay_path");
  if (llm_mode == LlmMode::live && (!has_endpoint || !model))
    throw Error(ErrorKind::config,
                "config: llm.mode is live but endpoint/model are missing");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open config file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse,
                "malformed config " + path.string() + ": " + e.what());
  }
  const std::filesystem::path base =
      std::filesystem::absolute(path).parent_path();

  RunConfig cfg;
  try {
    const json& ds = doc.at("dataset");
    cfg.dataset_path = resolve(base, ds.at("path").get<std::string>());
    std::string format = ds.value("format", "jsonl");
    if (format == "jsonl")
      cfg.dataset_format = DatasetFormat::jsonl;
    else if (format == "csv")
      cfg.dataset_format = DatasetFormat::csv;
    else
      throw Error(ErrorKind::config, "config: unknown dataset format " + format);
    cfg.labels_manifest = opt_path(ds, "labels_manifest", base);

    if (doc.contains("split")) {
      cfg.train_fraction = doc["split"].value("train_fraction", cfg.train_fraction);
      cfg.split_seed = doc["split"].value("seed", cfg.split_seed);
    }
    if (doc.contains("vectorizer")) {
      const json& v = doc["vectorizer"];
      cfg.vectorizer.ngram_min = v.value("ngram_min", 1);
      cfg.vectorizer.ngram_max = v.value("ngram_max", 2);
      cfg.vectorizer.min_df = v.value("min_df", 1);
      cfg.stopword_file = opt_path(v, "stopword_file", base);
      cfg.vectorizer.stopword_list_id =
          cfg.stopword_file ? "file:" + cfg.stopword_file->filename().string()
                            : "builtin-v1";
    }
    if (doc.contains("lr")) {
      const json& l = doc["lr"];
      cfg.lr.l2 = l.value("l2", cfg.lr.l2);
      cfg.lr.tol = l.value("tol", cfg.lr.tol);
      cfg.lr.max_iter = l.value("max_iter", cfg.lr.max_iter);
      cfg.lr.seed = l.value("seed", cfg.lr.seed);
    }
    if (doc.contains("features")) {
      cfg.k = doc["features"].value("k", cfg.k);
      std::string source = doc["features"].value("class_source", "lr");
      if (source == "lr")
        cfg.class_source = RunConfig::ClassSource::lr;
      else if (source == "llm")
        cfg.class_source = RunConfig::ClassSource::llm;
      else
        throw Error(ErrorKind::config,
                    "config: features.class_source must be lr or llm");
    }
    if (doc.contains("matchers")) {
      cfg.matchers.clear();
      for (const auto& name : doc["matchers"]) {
        auto m = matcher_from_name(name.get<std::string>());
        if (!m)
          throw Error(ErrorKind::config,
                      "config: unknown matcher " + name.get<std::string>());
        cfg.matchers.push_back(*m);
      }
    }
    if (doc.contains("edit_policy")) {
      const json& e = doc["edit_policy"];
      cfg.edit_policy.zero_below = e.value("zero_below", cfg.edit_policy.zero_below);
      cfg.edit_policy.scale_from = e.value("scale_from", cfg.edit_policy.scale_from);
      cfg.edit_policy.long_ratio = e.value("long_ratio", cfg.edit_policy.long_ratio);
    }
    if (doc.contains("llm")) {
      const json& l = doc["llm"];
      std::string mode = l.value("mode", "replay");
      if (mode == "replay")
        cfg.llm_mode = RunConfig::LlmMode::replay;
      else if (mode == "live")
        cfg.llm_mode = RunConfig::LlmMode::live;
      else
        throw Error(ErrorKind::config, "config: llm.mode must be replay or live");
      cfg.replay_path = opt_path(l, "replay_path", base);
      if (l.contains("endpoint") && !l["endpoint"].is_null())
        cfg.endpoint = l["endpoint"].get<std::string>();
      if (l.contains("model") && !l["model"].is_null())
        cfg.model = l["model"].get<std::string>();
      cfg.api_key_env = l.value("api_key_env", cfg.api_key_env);
      if (l.contains("prompt_template") && !l["prompt_template"].is_null())
        cfg.prompt_template = l["prompt_template"].get<std::string>();
      cfg.temperature = l.value("temperature", 0.0);
      cfg.cache_dir = opt_path(l, "cache_dir", base);
      cfg.offline = l.value("offline", false);
      cfg.max_retries = l.value("max_retries", cfg.max_retries);
      cfg.retry_backoff_ms = l.value("retry_backoff_ms", cfg.retry_backoff_ms);
      cfg.min_request_interval_ms =
          l.value("min_request_interval_ms", cfg.min_request_interval_ms);
      cfg.timeout_s = l.value("timeout_s", cfg.timeout_s);
    }
    if (doc.contains("bootstrap")) {
      cfg.n_resamples = doc["bootstrap"].value("n_resamples", cfg.n_resamples);
      cfg.bootstrap_seed = doc["bootstrap"].value("seed", cfg.bootstrap_seed);
    }
    if (doc.contains("evaluate")) {
      cfg.audit = doc["evaluate"].value("audit", false);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config,
                "config " + path.string() + " is missing required fields: " + e.what());
  }
  cfg.validate();
  return cfg;
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["dataset"] = {{"path", cfg.dataset_path.string()},
                    {"format", cfg.dataset_format == DatasetFormat::jsonl ? "jsonl" : "csv"},
                    {"labels_manifest", cfg.labels_manifest
                                            ? json(cfg.labels_manifest->string())
                                            : json(nullptr)}};
  doc["split"] = {{"train_fraction", cfg.train_fraction}, {"seed", cfg.split_seed}};
  doc["vectorizer"] = {{"ngram_min", cfg.vectorizer.ngram_min},
                       {"ngram_max", cfg.vectorizer.ngram_max},
                       {"min_df", cfg.vectorizer.min_df},
                       {"stopword_file", cfg.stopword_file
                                             ? json(cfg.stopword_file->string())
                                             : json(nullptr)}};
  doc["lr"] = {{"l2", cfg.lr.l2},
               {"tol", cfg.lr.tol},
               {"max_iter", cfg.lr.max_iter},
               {"seed", cfg.lr.seed}};
  doc["features"] = {{"k", cfg.k},
                     {"class_source",
                      cfg.class_source == RunConfig::ClassSource::lr ? "lr" : "llm"}};
  json matchers = json::array();
  for (MatcherKind m : cfg.matchers) matchers.push_back(std::string(matcher_name(m)));
  doc["matchers"] = matchers;
  doc["edit_policy"] = {{"zero_below", cfg.edit_policy.zero_below},
                        {"scale_from", cfg.edit_policy.scale_from},
                        {"long_ratio", cfg.edit_policy.long_ratio}};
  doc["llm"] = {{"mode", cfg.llm_mode == RunConfig::LlmMode::replay ? "replay" : "live"},
                {"replay_path",
                 cfg.replay_path ? json(cfg.replay_path->string()) : json(nullptr)},
                {"endpoint", cfg.endpoint ? json(*cfg.endpoint) : json(nullptr)},
                {"model", cfg.model ? json(*cfg.model) : json(nullptr)},
                {"api_key_env", cfg.api_key_env},
                {"prompt_template",
                 cfg.prompt_template ? json(*cfg.prompt_template) : json(nullptr)},
                {"temperature", cfg.temperature},
                {"cache_dir", cfg.cache_dir ? json(cfg.cache_dir->string()) : json(nullptr)},
                {"offline", cfg.offline},
                {"max_retries", cfg.max_retries},
                {"retry_backoff_ms", cfg.retry_backoff_ms},
                {"min_request_interval_ms", cfg.min_request_interval_ms},
                {"timeout_s", cfg.timeout_s}};
  doc["bootstrap"] = {{"n_resamples", cfg.n_resamples}, {"seed", cfg.bootstrap_seed}};
  doc["evaluate"] = {{"audit", cfg.audit}};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write config file: " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace racov
