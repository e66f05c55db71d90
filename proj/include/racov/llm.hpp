#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "racov/corpus.hpp"

namespace racov {

enum class Provenance { live, cache, replay };

std::string_view provenance_name(Provenance p) noexcept;

// One annotation: the model's predicted label and free-text rationale.
// parse_ok == false marks records whose label could not be recovered; they
// are counted in reports but excluded from coverage.
struct LlmRecord {
  std::string instance_id;
  std::string predicted_label;  // manifest casing; empty if !parse_ok
  std::string rationale;
  std::string raw_response;
  Provenance provenance = Provenance::replay;
  bool parse_ok = true;
};

// Template with {text} and {labels} placeholders, each exactly once.
struct PromptTemplate {
  std::string text;

  void validate() const;
  static PromptTemplate default_template();
};

std::string build_prompt(const PromptTemplate& tmpl, const Instance& inst,
                         const std::vector<std::string>& labels);

struct EndpointConfig {
  std::string url;       // full POST url of an openai-style chat endpoint
  std::string model;
  std::string api_key;
  std::filesystem::path cache_dir;
  bool offline = false;  // cache only, never touch the network
  int max_retries = 3;
  int retry_backoff_ms = 250;       // doubled after every failed attempt
  int min_request_interval_ms = 0;  // paces live calls; cache hits skip it
  int timeout_s = 60;
  double temperature = 0.0;
};

struct QueryResult {
  std::string response;
  Provenance provenance = Provenance::live;
};

// Cache-first query. Cache files are content-addressed by
// sha256(model || '\n' || prompt) and written atomically.
QueryResult query(const std::string& prompt, const EndpointConfig& cfg);

std::string response_cache_key(const std::string& prompt, const std::string& model);

struct ParsedResponse {
  bool ok = false;
  std::string label;
  std::string rationale;
};

// Primary path: a JSON object with "label" and "rationale". Fallback: first
// occurrence of any known label (longest first), remaining text as rationale.
ParsedResponse parse_response(std::string_view raw, const std::vector<std::string>& labels);

// JSONL replay file: {"id","label","rationale"} or {"id","raw"} per line.
std::vector<LlmRecord> replay_load(const std::filesystem::path& path,
                                   const std::vector<std::string>& labels);

// Annotation stage output: records in evaluation order plus the ids that
// could not be annotated (missing replay entries).
struct AnnotateOutput {
  std::vector<LlmRecord> records;
  std::vector<std::string> skipped_ids;
};

void write_records_file(const AnnotateOutput& out, const std::filesystem::path& path);
AnnotateOutput read_records_file(const std::filesystem::path& path);

}  // namespace racov
