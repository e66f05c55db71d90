#include "racov/coverage.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "racov/error.hpp"

namespace racov {

namespace {

using nlohmann::json;

void run_subset(const std::vector<FeatureContribution>& subset,
                const NormalizedText& rationale, MatcherKind matcher,
                const EditPolicy& policy, int& hits,
                std::vector<MatchResult>& matches) {
  for (const auto& fc : subset) {
    MatchResult res = run_matcher(matcher, fc.feature, rationale, policy);
    if (res.matched) ++hits;
    matches.push_back(std::move(res));
  }
}

}  // namespace

CoverageDetail coverage_detailed(const FeatureSet& fs, std::string_view rationale,
                                 MatcherKind matcher, const EditPolicy& policy) {
  const NormalizedText norm = normalize(rationale);

  CoverageDetail out;
  out.record.instance_id = fs.instance_id;
  out.record.matcher = matcher;

  int support_hits = 0, contradict_hits = 0;
  run_subset(fs.supporting, norm, matcher, policy, support_hits, out.matches);
  run_subset(fs.contradicting, norm, matcher, policy, contradict_hits, out.matches);

  if (!fs.supporting.empty())
    out.record.support_cov = static_cast<double>(support_hits) /
                             static_cast<double>(fs.supporting.size());
  if (!fs.contradicting.empty())
    out.record.contradict_cov = static_cast<double>(contradict_hits) /
                                static_cast<double>(fs.contradicting.size());
  out.record.raw_count = support_hits + contradict_hits;
  out.record.proportion = fs.k > 0 ? static_cast<double>(out.record.raw_count) /
                                         static_cast<double>(fs.k)
                                   : 0.0;
  return out;
}

CoverageRecord coverage(const FeatureSet& fs, std::string_view rationale,
                        MatcherKind matcher, const EditPolicy& policy) {
  return coverage_detailed(fs, rationale, matcher, policy).record;
}

BatchCoverageResult batch_coverage(
    const std::vector<FeatureSet>& featuresets,
    const std::vector<LlmRecord>& llm_records,
    const std::unordered_map<std::string, std::string>& gold_by_id,
    const std::vector<MatcherKind>& matchers, const EditPolicy& policy) {
  std::unordered_map<std::string, const LlmRecord*> by_id;
  for (const auto& rec : llm_records) by_id.emplace(rec.instance_id, &rec);

  BatchCoverageResult out;
  for (const auto& fs : featuresets) {
    auto rec_it = by_id.find(fs.instance_id);
    if (rec_it == by_id.end()) {
      ++out.skipped_unmatched;
      continue;
    }
    const LlmRecord& rec = *rec_it->second;
    if (!rec.parse_ok) {
      ++out.skipped_parse_failures;
      continue;
    }
    auto gold_it = gold_by_id.find(fs.instance_id);
    if (gold_it == gold_by_id.end()) {
      ++out.skipped_unmatched;
      continue;
    }
    for (MatcherKind m : matchers) {
      CoverageRecord cr = coverage(fs, rec.rationale, m, policy);
      cr.correct = rec.predicted_label == gold_it->second;
      out.records.push_back(std::move(cr));
    }
  }
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const CoverageRecord& a, const CoverageRecord& b) {
                     if (a.instance_id != b.instance_id)
                       return a.instance_id < b.instance_id;
                     return static_cast<int>(a.matcher) < static_cast<int>(b.matcher);
                   });
  return out;
}

namespace {

std::string csv_number(double v) {
  json j = v;  // shortest round-trip formatting
  return j.dump();
}

}  // namespace

void write_coverage_csv(const std::vector<CoverageRecord>& records,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write coverage csv: " + path.string());
  out << "instance_id,matcher,support_cov,contradict_cov,raw_count,proportion,correct\n";
  for (const auto& r : records) {
    out << r.instance_id << ',' << matcher_name(r.matcher) << ','
        << (r.support_cov ? csv_number(*r.support_cov) : "") << ','
        << (r.contradict_cov ? csv_number(*r.contradict_cov) : "") << ','
        << r.raw_count << ',' << csv_number(r.proportion) << ','
        << (r.correct ? "true" : "false") << '\n';
  }
}

void write_coverage_jsonl(const std::vector<CoverageRecord>& records,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write coverage jsonl: " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json doc;
    doc["instance_id"] = r.instance_id;
    doc["matcher"] = std::string(matcher_name(r.matcher));
    doc["support_cov"] = r.support_cov ? json(*r.support_cov) : json(nullptr);
    doc["contradict_cov"] = r.contradict_cov ? json(*r.contradict_cov) : json(nullptr);
    doc["raw_count"] = r.raw_count;
    doc["proportion"] = r.proportion;
    doc["correct"] = r.correct;
    out << doc.dump() << '\n';
  }
}

std::vector<CoverageRecord> read_coverage_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open coverage jsonl: " + path.string());
  std::vector<CoverageRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
      throw Error(ErrorKind::parse,
                  "malformed coverage line " + std::to_string(line_no));
    CoverageRecord r;
    r.instance_id = doc.at("instance_id").get<std::string>();
    auto m = matcher_from_name(doc.at("matcher").get<std::string>());
    if (!m)
      throw Error(ErrorKind::parse,
                  "unknown matcher at coverage line " + std::to_string(line_no));
    r.matcher = *m;
    if (!doc.at("support_cov").is_null())
      r.support_cov = doc.at("support_cov").get<double>();
    if (!doc.at("contradict_cov").is_null())
      r.contradict_cov = doc.at("contradict_cov").get<double>();
    r.raw_count = doc.at("raw_count").get<int>();
    r.proportion = doc.at("proportion").get<double>();
    r.correct = doc.at("correct").get<bool>();
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace racov
