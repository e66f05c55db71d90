#include "racov/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "racov/coverage.hpp"
#include "racov/error.hpp"
#include "racov/llm.hpp"
#include "racov/report.hpp"
#include "racov/rng.hpp"
#include "racov/stats.hpp"

namespace racov {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << content;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "missing artifact: " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded())
    throw Error(ErrorKind::parse, "malformed artifact: " + path.string());
  return doc;
}

std::unordered_set<std::string> resolve_stopwords(const RunConfig& cfg) {
  if (cfg.stopword_file) return load_stopwords(*cfg.stopword_file);
  return builtin_stopwords();
}

Dataset load_configured_dataset(const RunConfig& cfg) {
  return load_dataset(cfg.dataset_path, cfg.dataset_format, cfg.labels_manifest);
}

struct SplitManifest {
  std::vector<std::string> train_ids;
  std::vector<std::string> eval_ids;
};

SplitManifest read_split(const std::filesystem::path& run_dir) {
  json doc = read_json(run_dir / runfiles::split);
  SplitManifest m;
  m.train_ids = doc.at("train_ids").get<std::vector<std::string>>();
  m.eval_ids = doc.at("eval_ids").get<std::vector<std::string>>();
  return m;
}

ordered_json summary_to_json(const GroupSummary& s) {
  ordered_json j;
  j["dataset"] = s.dataset;
  j["condition"] = std::string(condition_name(s.condition));
  j["matcher"] = std::string(matcher_name(s.matcher));
  j["mean_support"] = s.mean_support ? json(*s.mean_support) : json(nullptr);
  j["mean_contradict"] = s.mean_contradict ? json(*s.mean_contradict) : json(nullptr);
  j["n"] = s.n;
  j["n_absent_support"] = s.n_absent_support;
  j["n_absent_contradict"] = s.n_absent_contradict;
  return j;
}

GroupSummary summary_from_json(const json& j) {
  GroupSummary s;
  s.dataset = j.at("dataset").get<std::string>();
  s.condition = j.at("condition").get<std::string>() == "match" ? Condition::match
                                                                : Condition::mismatch;
  s.matcher = *matcher_from_name(j.at("matcher").get<std::string>());
  if (!j.at("mean_support").is_null()) s.mean_support = j["mean_support"].get<double>();
  if (!j.at("mean_contradict").is_null())
    s.mean_contradict = j["mean_contradict"].get<double>();
  s.n = j.at("n").get<int>();
  s.n_absent_support = j.at("n_absent_support").get<int>();
  s.n_absent_contradict = j.at("n_absent_contradict").get<int>();
  return s;
}

ordered_json bootstrap_to_json(const BootstrapResult& b) {
  ordered_json j;
  j["statistic"] = b.statistic;
  j["matcher"] = std::string(matcher_name(b.matcher));
  j["point_estimate"] = b.point_estimate;
  j["ci_low"] = b.ci_low;
  j["ci_high"] = b.ci_high;
  j["n_resamples"] = b.n_resamples;
  j["seed"] = b.seed;
  j["significant"] = b.significant;
  j["side_proportion"] = b.side_proportion;
  return j;
}

BootstrapResult bootstrap_from_json(const json& j) {
  BootstrapResult b;
  b.statistic = j.at("statistic").get<std::string>();
  b.matcher = *matcher_from_name(j.at("matcher").get<std::string>());
  b.point_estimate = j.at("point_estimate").get<double>();
  b.ci_low = j.at("ci_low").get<double>();
  b.ci_high = j.at("ci_high").get<double>();
  b.n_resamples = j.at("n_resamples").get<int>();
  b.seed = j.at("seed").get<std::uint64_t>();
  b.significant = j.at("significant").get<bool>();
  b.side_proportion = j.at("side_proportion").get<double>();
  return b;
}

}  // namespace

RunConfig run_dir_config(const std::filesystem::path& run_dir) {
  return load_run_config(run_dir / runfiles::config);
}

void cmd_train(const RunConfig& cfg, const std::filesystem::path& run_dir,
               std::ostream& log) {
  cfg.validate();
  std::filesystem::create_directories(run_dir);

  Dataset full = load_configured_dataset(cfg);
  auto [train, eval] = split(full, cfg.train_fraction, cfg.split_seed);

  const auto stopwords = resolve_stopwords(cfg);
  Vocabulary vocab = fit_vectorizer(train, cfg.vectorizer, &stopwords);

  std::vector<SparseVector> X;
  std::vector<int> y;
  X.reserve(train.size());
  for (const auto& inst : train.instances) {
    X.push_back(transform(vocab, inst.text));
    y.push_back(full.label_index(inst.gold_label));
  }
  LrWeights model = train_lr(X, y, full.labels, cfg.lr, nullptr, vocab.size());
  if (!model.converged)
    log << "train: warning: gradient descent hit max_iter without reaching tol\n";

  int correct = 0;
  for (const auto& inst : eval.instances) {
    Prediction p = predict(model, transform(vocab, inst.text));
    if (p.label == inst.gold_label) ++correct;
  }
  const double accuracy =
      static_cast<double>(correct) / static_cast<double>(eval.size());

  save_model(vocab, model, run_dir / runfiles::model);

  ordered_json manifest;
  manifest["format"] = "racov.split/1";
  manifest["train_fraction"] = cfg.train_fraction;
  manifest["seed"] = cfg.split_seed;
  json train_ids = json::array(), eval_ids = json::array();
  for (const auto& inst : train.instances) train_ids.push_back(inst.id);
  for (const auto& inst : eval.instances) eval_ids.push_back(inst.id);
  manifest["train_ids"] = train_ids;
  manifest["eval_ids"] = eval_ids;
  write_text(run_dir / runfiles::split, manifest.dump(2) + "\n");

  save_run_config(cfg, run_dir / runfiles::config);

  char acc_buf[32];
  std::snprintf(acc_buf, sizeof(acc_buf), "%.3f", accuracy);
  log << "train: " << train.size() << " train / " << eval.size()
      << " eval instances, vocabulary " << vocab.size() << ", lr eval accuracy "
      << acc_buf << "\n";
}

void cmd_annotate(const RunConfig& cfg, const std::filesystem::path& run_dir,
                  std::ostream& log) {
  cfg.validate();
  Dataset full = load_configured_dataset(cfg);
  SplitManifest manifest = read_split(run_dir);

  std::unordered_map<std::string, const Instance*> by_id;
  for (const auto& inst : full.instances) by_id.emplace(inst.id, &inst);

  AnnotateOutput out;
  if (cfg.llm_mode == RunConfig::LlmMode::replay) {
    auto replay = replay_load(*cfg.replay_path, full.labels);
    std::unordered_map<std::string, const LlmRecord*> replay_by_id;
    for (const auto& rec : replay) replay_by_id.emplace(rec.instance_id, &rec);
    for (const auto& id : manifest.eval_ids) {
      auto it = replay_by_id.find(id);
      if (it == replay_by_id.end()) {
        log << "annotate: warning: no replay record for instance " << id << "\n";
        out.skipped_ids.push_back(id);
        continue;
      }
      out.records.push_back(*it->second);
    }
  } else {
    EndpointConfig endpoint;
    endpoint.url = *cfg.endpoint;
    endpoint.model = *cfg.model;
    if (const char* key = std::getenv(cfg.api_key_env.c_str())) endpoint.api_key = key;
    endpoint.cache_dir = cfg.cache_dir ? *cfg.cache_dir : run_dir / "cache";
    endpoint.offline = cfg.offline;
    endpoint.max_retries = cfg.max_retries;
    endpoint.retry_backoff_ms = cfg.retry_backoff_ms;
    endpoint.min_request_interval_ms = cfg.min_request_interval_ms;
    endpoint.timeout_s = cfg.timeout_s;
    endpoint.temperature = cfg.temperature;

    PromptTemplate tmpl = cfg.prompt_template
                              ? PromptTemplate{*cfg.prompt_template}
                              : PromptTemplate::default_template();
    tmpl.validate();

    for (const auto& id : manifest.eval_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        log << "annotate: warning: eval id " << id << " not in dataset\n";
        out.skipped_ids.push_back(id);
        continue;
      }
      const std::string prompt = build_prompt(tmpl, *it->second, full.labels);
      QueryResult q = query(prompt, endpoint);
      ParsedResponse parsed = parse_response(q.response, full.labels);
      LlmRecord rec;
      rec.instance_id = id;
      rec.raw_response = q.response;
      rec.provenance = q.provenance;
      rec.parse_ok = parsed.ok;
      rec.predicted_label = parsed.label;
      rec.rationale = parsed.rationale;
      out.records.push_back(std::move(rec));
    }
  }

  write_records_file(out, run_dir / runfiles::records);

  int failures = 0;
  for (const auto& rec : out.records)
    if (!rec.parse_ok) ++failures;
  log << "annotate: " << out.records.size() << " records ("
      << failures << " parse failures, " << out.skipped_ids.size()
      << " skipped)\n";
}

void cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& run_dir,
                  std::ostream& log) {
  cfg.validate();
  auto [vocab, model] = load_model(run_dir / runfiles::model);
  Dataset full = load_configured_dataset(cfg);
  SplitManifest manifest = read_split(run_dir);
  AnnotateOutput annotated = read_records_file(run_dir / runfiles::records);

  std::unordered_map<std::string, const Instance*> by_id;
  for (const auto& inst : full.instances) by_id.emplace(inst.id, &inst);
  std::unordered_map<std::string, std::string> gold_by_id;
  for (const auto& inst : full.instances) gold_by_id.emplace(inst.id, inst.gold_label);

  // Feature sets for every annotated instance; the class whose weight row is
  // read comes from the reference model unless configured otherwise.
  std::vector<FeatureSet> featuresets;
  std::vector<std::pair<std::string, std::string>> gold_pred;
  for (const auto& rec : annotated.records) {
    auto it = by_id.find(rec.instance_id);
    if (it == by_id.end()) {
      log << "evaluate: warning: record for unknown instance " << rec.instance_id
          << "\n";
      continue;
    }
    SparseVector x = transform(vocab, it->second->text);
    std::string klass;
    if (cfg.class_source == RunConfig::ClassSource::llm && rec.parse_ok)
      klass = rec.predicted_label;
    else
      klass = predict(model, x).label;
    featuresets.push_back(top_features(model, vocab, x, klass, cfg.k, rec.instance_id));
    if (rec.parse_ok)
      gold_pred.emplace_back(it->second->gold_label, rec.predicted_label);
  }

  BatchCoverageResult batch = batch_coverage(featuresets, annotated.records,
                                             gold_by_id, cfg.matchers, cfg.edit_policy);
  write_coverage_csv(batch.records, run_dir / runfiles::coverage_csv);
  write_coverage_jsonl(batch.records, run_dir / runfiles::coverage_jsonl);

  if (cfg.audit) {
    std::unordered_map<std::string, const LlmRecord*> rec_by_id;
    for (const auto& rec : annotated.records) rec_by_id.emplace(rec.instance_id, &rec);
    std::ofstream audit(run_dir / runfiles::audit, std::ios::binary);
    if (!audit) throw Error(ErrorKind::io, "cannot write audit file");
    for (const auto& fs : featuresets) {
      auto rec = rec_by_id.find(fs.instance_id);
      if (rec == rec_by_id.end() || !rec->second->parse_ok) continue;
      for (MatcherKind m : cfg.matchers) {
        CoverageDetail detail =
            coverage_detailed(fs, rec->second->rationale, m, cfg.edit_policy);
        for (const auto& match : detail.matches) {
          ordered_json line;
          line["instance_id"] = fs.instance_id;
          line["matcher"] = std::string(matcher_name(m));
          line["feature"] = match.feature;
          line["matched"] = match.matched;
          line["evidence"] = match.evidence
                                 ? json::array({match.evidence->begin, match.evidence->end})
                                 : json(nullptr);
          line["distance"] = match.distance ? json(*match.distance) : json(nullptr);
          audit << line.dump() << '\n';
        }
      }
    }
  }

  ConfusionMatrix cm = confusion(gold_pred, full.labels);

  std::vector<GroupSummary> summaries;
  std::vector<BootstrapResult> bootstraps;
  std::vector<std::string> warnings;
  for (std::size_t mi = 0; mi < cfg.matchers.size(); ++mi) {
    const MatcherKind m = cfg.matchers[mi];
    std::vector<CoverageRecord> for_matcher;
    for (const auto& r : batch.records)
      if (r.matcher == m) for_matcher.push_back(r);
    auto [match_group, mismatch_group] = partition(for_matcher);
    summaries.push_back(summarize_group(match_group, full.name, Condition::match, m));
    summaries.push_back(
        summarize_group(mismatch_group, full.name, Condition::mismatch, m));

    const auto stat_seed = [&](std::uint64_t which) {
      return derive_seed(cfg.bootstrap_seed, mi, which);
    };
    const auto guarded = [&](const char* name, auto&& fn) {
      try {
        bootstraps.push_back(fn());
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::insufficient_data) throw;
        warnings.push_back(std::string(name) + " (" +
                           std::string(matcher_name(m)) + "): " + e.what());
      }
    };
    guarded("delta_support", [&] {
      return bootstrap_delta(match_group, mismatch_group, CovField::support,
                             cfg.n_resamples, stat_seed(0));
    });
    guarded("delta_contradict", [&] {
      return bootstrap_delta(match_group, mismatch_group, CovField::contradict,
                             cfg.n_resamples, stat_seed(1));
    });
    guarded("delta_star", [&] {
      return bootstrap_asymmetry(match_group, mismatch_group, cfg.n_resamples,
                                 stat_seed(2));
    });
  }

  ordered_json summary;
  summary["format"] = "racov.summary/1";
  summary["dataset"] = full.name;
  summary["k"] = cfg.k;
  summary["n_eval"] = manifest.eval_ids.size();
  summary["n_records"] = annotated.records.size();
  summary["n_skipped_annotate"] = annotated.skipped_ids.size();
  summary["n_parse_failures"] = batch.skipped_parse_failures;
  summary["n_skipped_unmatched"] = batch.skipped_unmatched;
  summary["llm_accuracy"] = cm.accuracy();
  ordered_json confusion_json;
  confusion_json["labels"] = cm.labels;
  confusion_json["counts"] = cm.counts;
  summary["confusion"] = confusion_json;
  ordered_json summaries_json = ordered_json::array();
  for (const auto& s : summaries) summaries_json.push_back(summary_to_json(s));
  summary["group_summaries"] = summaries_json;
  ordered_json bootstraps_json = ordered_json::array();
  for (const auto& b : bootstraps) bootstraps_json.push_back(bootstrap_to_json(b));
  summary["bootstrap"] = bootstraps_json;
  summary["warnings"] = warnings;
  write_text(run_dir / runfiles::summary, summary.dump(2) + "\n");

  log << "evaluate: " << batch.records.size() << " coverage records, "
      << bootstraps.size() << " bootstrap statistics, llm accuracy "
      << cm.accuracy() << "\n";
}

void cmd_report(const std::filesystem::path& run_dir, std::ostream& log) {
  json summary = read_json(run_dir / runfiles::summary);
  auto records = read_coverage_jsonl(run_dir / runfiles::coverage_jsonl);

  std::vector<GroupSummary> summaries;
  for (const auto& j : summary.at("group_summaries"))
    summaries.push_back(summary_from_json(j));
  std::vector<BootstrapResult> bootstraps;
  for (const auto& j : summary.at("bootstrap"))
    bootstraps.push_back(bootstrap_from_json(j));

  const std::string dataset = summary.at("dataset").get<std::string>();

  std::filesystem::create_directories(run_dir / "tables");
  std::filesystem::create_directories(run_dir / "figures");

  write_text(run_dir / "tables" / "coverage_means.csv", coverage_table_csv(summaries));
  write_text(run_dir / "tables" / "coverage_means.txt", coverage_table_text(summaries));
  write_text(run_dir / "tables" / "bootstrap.csv",
             bootstrap_table_csv(bootstraps, dataset));

  ConfusionMatrix cm;
  cm.labels = summary.at("confusion").at("labels").get<std::vector<std::string>>();
  cm.counts = summary.at("confusion").at("counts").get<std::vector<std::vector<int>>>();
  write_text(run_dir / "figures" / "confusion.svg",
             render_heatmap(cm, "Confusion matrix: " + dataset + " (LLM vs gold)"));

  std::vector<MatcherKind> matchers;
  for (const auto& s : summaries)
    if (std::find(matchers.begin(), matchers.end(), s.matcher) == matchers.end())
      matchers.push_back(s.matcher);
  for (MatcherKind m : matchers) {
    const std::string name(matcher_name(m));
    write_text(run_dir / "figures" / ("scatter_" + name + ".svg"),
               render_scatter(scatter_points(records, m),
                              dataset + ": coverage per instance (" + name + ")"));
  }

  log << "report: wrote tables/ and figures/ under " << run_dir.string() << "\n";
}

void cmd_all(const RunConfig& cfg, const std::filesystem::path& run_dir,
             std::ostream& log) {
  cmd_train(cfg, run_dir, log);
  cmd_annotate(cfg, run_dir, log);
  cmd_evaluate(cfg, run_dir, log);
  cmd_report(run_dir, log);
}

}  // namespace racov
