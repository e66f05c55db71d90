#include "racov/llm.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <optional>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "racov/error.hpp"

namespace racov {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string_view::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(a, b - a + 1));
}

std::string fold(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

bool is_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t count = 0, pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string_view::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

std::string replace_once(std::string s, std::string_view placeholder,
                         std::string_view value) {
  std::size_t pos = s.find(placeholder);
  s.replace(pos, placeholder.size(), value);
  return s;
}

// Strips a ```lang ... ``` fence, a habit of chat models asked for JSON.
std::string strip_code_fence(std::string s) {
  if (s.rfind("```", 0) != 0) return s;
  std::size_t nl = s.find('\n');
  if (nl == std::string::npos) return s;
  s.erase(0, nl + 1);
  std::size_t closing = s.rfind("```");
  if (closing != std::string::npos) s.erase(closing);
  return trim(s);
}

std::optional<std::string> canonical_label(std::string_view candidate,
                                           const std::vector<std::string>& labels) {
  std::string folded = fold(trim(candidate));
  for (const auto& label : labels)
    if (fold(label) == folded) return label;
  return std::nullopt;
}

}  // namespace

std::string_view provenance_name(Provenance p) noexcept {
  switch (p) {
    case Provenance::live: return "live";
    case Provenance::cache: return "cache";
    case Provenance::replay: return "replay";
  }
  return "?";
}

void PromptTemplate::validate() const {
  if (count_occurrences(text, "{text}") != 1)
    throw Error(ErrorKind::config,
                "prompt template must contain {text} exactly once");
  if (count_occurrences(text, "{labels}") != 1)
    throw Error(ErrorKind::config,
                "prompt template must contain {labels} exactly once");
}

PromptTemplate PromptTemplate::default_template() {
  return PromptTemplate{
      "You are a careful text classifier. The allowed labels are: {labels}.\n"
      "Classify the text below and explain briefly which words or phrases "
      "drove your decision.\n"
      "Reply with a JSON object of the form "
      "{\"label\": \"<one allowed label>\", \"rationale\": \"<short explanation>\"}.\n"
      "Text: {text}"};
}

std::string build_prompt(const PromptTemplate& tmpl, const Instance& inst,
                         const std::vector<std::string>& labels) {
  tmpl.validate();
  std::string label_list;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) label_list += ", ";
    label_list += labels[i];
  }
  std::string prompt = replace_once(tmpl.text, "{labels}", label_list);
  return replace_once(std::move(prompt), "{text}", inst.text);
}

std::string response_cache_key(const std::string& prompt, const std::string& model) {
  std::string payload = model + "\n" + prompt;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(payload.data(), payload.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

namespace {

std::optional<std::string> cache_lookup(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception&) {
    return std::nullopt;  // corrupt cache entry: treat as a miss
  }
  if (!doc.is_object() || !doc.contains("response") || !doc["response"].is_string())
    return std::nullopt;
  return doc["response"].get<std::string>();
}

void cache_store(const std::filesystem::path& file, const std::string& key,
                 const EndpointConfig& cfg, const std::string& prompt,
                 const std::string& response) {
  std::filesystem::create_directories(file.parent_path());
  json doc{{"key", key}, {"model", cfg.model}, {"prompt", prompt}, {"response", response}};
  std::filesystem::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write cache file: " + tmp.string());
    out << doc.dump() << '\n';
  }
  std::filesystem::rename(tmp, file);
}

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos)
    throw Error(ErrorKind::config, "endpoint url must include a scheme: " + url);
  std::size_t path_at = url.find('/', scheme + 3);
  if (path_at == std::string::npos) return {url, "/"};
  return {url.substr(0, path_at), url.substr(path_at)};
}

std::string extract_chat_content(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse,
                "endpoint returned non-json body: " + std::string(e.what()));
  }
  try {
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::parse, "endpoint response is not chat-completion shaped");
  }
}

}  // namespace

QueryResult query(const std::string& prompt, const EndpointConfig& cfg) {
  const std::string key = response_cache_key(prompt, cfg.model);
  const std::filesystem::path cache_file =
      cfg.cache_dir.empty() ? std::filesystem::path{}
                            : cfg.cache_dir / (key + ".json");

  if (!cache_file.empty()) {
    if (auto hit = cache_lookup(cache_file))
      return QueryResult{*hit, Provenance::cache};
  }
  if (cfg.offline)
    throw Error(ErrorKind::network,
                "offline mode and no cached response for key " + key);
  if (cfg.url.empty())
    throw Error(ErrorKind::config, "no endpoint url configured");
  if (cfg.min_request_interval_ms > 0)
    std::this_thread::sleep_for(
        std::chrono::milliseconds(cfg.min_request_interval_ms));

  const ParsedUrl url = split_url(cfg.url);
  json body{{"model", cfg.model},
            {"temperature", cfg.temperature},
            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}};
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!cfg.api_key.empty())
    headers.emplace("Authorization", "Bearer " + cfg.api_key);

  int backoff_ms = cfg.retry_backoff_ms;
  std::string last_failure = "no attempt made";
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms *= 2;
    }
    httplib::Client client(url.origin);
    client.set_connection_timeout(cfg.timeout_s, 0);
    client.set_read_timeout(cfg.timeout_s, 0);
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = "http status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw Error(ErrorKind::network,
                  "endpoint rejected request with status " + std::to_string(res->status));
    std::string content = extract_chat_content(res->body);
    if (!cache_file.empty()) cache_store(cache_file, key, cfg, prompt, content);
    return QueryResult{std::move(content), Provenance::live};
  }
  throw Error(ErrorKind::network, "retries exhausted (" + last_failure + ")");
}

ParsedResponse parse_response(std::string_view raw, const std::vector<std::string>& labels) {
  const std::string cleaned = strip_code_fence(trim(raw));

  // Primary path: structured reply.
  if (!cleaned.empty() && cleaned.front() == '{') {
    json doc = json::parse(cleaned, nullptr, false);
    if (doc.is_object() && doc.contains("label") && doc["label"].is_string()) {
      if (auto label = canonical_label(doc["label"].get<std::string>(), labels)) {
        std::string rationale;
        if (doc.contains("rationale") && doc["rationale"].is_string())
          rationale = trim(doc["rationale"].get<std::string>());
        if (!rationale.empty()) return {true, *label, rationale};
      }
    }
  }

  // Fallback: first occurrence of any known label, longest label first,
  // bounded by non-alphanumeric neighbours.
  std::vector<std::size_t> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return labels[a].size() > labels[b].size();
  });
  const std::string folded = fold(raw);
  for (std::size_t pos = 0; pos < folded.size(); ++pos) {
    for (std::size_t li : order) {
      const std::string needle = fold(labels[li]);
      if (needle.empty() || folded.compare(pos, needle.size(), needle) != 0) continue;
      if (pos > 0 && is_alnum(folded[pos - 1])) continue;
      std::size_t end = pos + needle.size();
      if (end < folded.size() && is_alnum(folded[end])) continue;

      std::string after(raw.substr(end));
      std::size_t a = after.find_first_not_of(" \t\r\n.:,;!-");
      after = a == std::string::npos ? "" : trim(after.substr(a));
      std::string before = trim(raw.substr(0, pos));
      std::string rationale = !after.empty() ? after
                              : !before.empty() ? before
                                                : std::string(raw);
      return {true, labels[li], rationale};
    }
  }
  return {false, "", ""};
}

std::vector<LlmRecord> replay_load(const std::filesystem::path& path,
                                   const std::vector<std::string>& labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open replay file: " + path.string());

  std::vector<LlmRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("id") ||
        !doc["id"].is_string())
      throw Error(ErrorKind::parse, "malformed replay line " + std::to_string(line_no) +
                                        " in " + path.string());

    LlmRecord rec;
    rec.instance_id = doc["id"].get<std::string>();
    rec.provenance = Provenance::replay;
    if (doc.contains("raw") && doc["raw"].is_string()) {
      rec.raw_response = doc["raw"].get<std::string>();
      ParsedResponse parsed = parse_response(rec.raw_response, labels);
      rec.parse_ok = parsed.ok;
      rec.predicted_label = parsed.label;
      rec.rationale = parsed.rationale;
    } else if (doc.contains("label") && doc["label"].is_string() &&
               doc.contains("rationale") && doc["rationale"].is_string()) {
      rec.raw_response = line;
      rec.rationale = doc["rationale"].get<std::string>();
      if (auto label = canonical_label(doc["label"].get<std::string>(), labels);
          label && !trim(rec.rationale).empty()) {
        rec.predicted_label = *label;
        rec.parse_ok = true;
      } else {
        rec.parse_ok = false;
      }
    } else {
      throw Error(ErrorKind::parse,
                  "replay line " + std::to_string(line_no) +
                      " needs either {id,label,rationale} or {id,raw}");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_records_file(const AnnotateOutput& out, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::io, "cannot write records file: " + path.string());
  for (const auto& rec : out.records) {
    json doc;
    doc["id"] = rec.instance_id;
    doc["label"] = rec.predicted_label;
    doc["rationale"] = rec.rationale;
    doc["raw"] = rec.raw_response;
    doc["provenance"] = std::string(provenance_name(rec.provenance));
    doc["parse_ok"] = rec.parse_ok;
    os << doc.dump() << '\n';
  }
  for (const auto& id : out.skipped_ids) {
    json doc{{"id", id}, {"skipped", true}};
    os << doc.dump() << '\n';
  }
}

AnnotateOutput read_records_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open records file: " + path.string());
  AnnotateOutput out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("id"))
      throw Error(ErrorKind::parse,
                  "malformed records line " + std::to_string(line_no));
    if (doc.value("skipped", false)) {
      out.skipped_ids.push_back(doc["id"].get<std::string>());
      continue;
    }
    LlmRecord rec;
    rec.instance_id = doc.at("id").get<std::string>();
    rec.predicted_label = doc.value("label", "");
    rec.rationale = doc.value("rationale", "");
    rec.raw_response = doc.value("raw", "");
    rec.parse_ok = doc.value("parse_ok", true);
    std::string prov = doc.value("provenance", "replay");
    rec.provenance = prov == "live"    ? Provenance::live
                     : prov == "cache" ? Provenance::cache
                                       : Provenance::replay;
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace racov
