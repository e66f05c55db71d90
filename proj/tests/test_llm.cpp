#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "racov/error.hpp"
#include "racov/llm.hpp"
#include "test_util.hpp"

using namespace racov;
using racov::testutil::TempDir;

TEST_CASE("build_prompt substitutes both placeholders") {
  PromptTemplate tmpl{"Classify: {text} Labels: {labels}"};
  Instance inst{"i", "hi", "A"};
  CHECK(build_prompt(tmpl, inst, {"A", "B"}) == "Classify: hi Labels: A, B");

  // byte-identical across calls
  CHECK(build_prompt(tmpl, inst, {"A", "B"}) == build_prompt(tmpl, inst, {"A", "B"}));
}

TEST_CASE("build_prompt rejects malformed templates") {
  Instance inst{"i", "hi", "A"};
  CHECK_THROWS_AS(build_prompt(PromptTemplate{"Classify: {text}"}, inst, {"A"}), Error);
  CHECK_THROWS_AS(build_prompt(PromptTemplate{"{labels} {labels} {text}"}, inst, {"A"}),
                  Error);
  CHECK_NOTHROW(PromptTemplate::default_template().validate());
}

TEST_CASE("parse_response: structured replies") {
  const std::vector<std::string> labels = {"Positive", "Negative"};
  ParsedResponse p = parse_response(
      R"({"label":"Positive","rationale":"mentions great acting"})", labels);
  REQUIRE(p.ok);
  CHECK(p.label == "Positive");
  CHECK(p.rationale == "mentions great acting");

  // casing is normalized to the manifest
  ParsedResponse folded =
      parse_response(R"({"label":"negative","rationale":"dull"})", labels);
  REQUIRE(folded.ok);
  CHECK(folded.label == "Negative");

  // fenced json still parses
  ParsedResponse fenced = parse_response(
      "```json\n{\"label\":\"Positive\",\"rationale\":\"nice\"}\n```", labels);
  CHECK(fenced.ok);
}

TEST_CASE("parse_response: label-scan fallback") {
  const std::vector<std::string> labels = {"Positive", "Negative"};
  ParsedResponse p =
      parse_response("Label: negative. Because the plot drags.", labels);
  REQUIRE(p.ok);
  CHECK(p.label == "Negative");
  CHECK(p.rationale == "Because the plot drags.");

  // label at the end: rationale falls back to the preceding text
  ParsedResponse tail = parse_response("The plot drags badly. Negative.", labels);
  REQUIRE(tail.ok);
  CHECK(tail.label == "Negative");
  CHECK(tail.rationale == "The plot drags badly.");

  // no label anywhere
  ParsedResponse fail = parse_response("I cannot decide.", labels);
  CHECK_FALSE(fail.ok);

  // embedded words do not count ("positively" is not "Positive")
  ParsedResponse bounded = parse_response("positively dreadful stuff", labels);
  CHECK_FALSE(bounded.ok);
}

TEST_CASE("parse_response: longest label wins at the same position") {
  const std::vector<std::string> labels = {"Sci", "Sci/Tech"};
  ParsedResponse p = parse_response("Sci/Tech: chip news", labels);
  REQUIRE(p.ok);
  CHECK(p.label == "Sci/Tech");
}

TEST_CASE("replay_load: well-formed, raw, and malformed lines") {
  TempDir tmp;
  const std::vector<std::string> labels = {"Pos", "Neg"};

  auto good = tmp.write("replay.jsonl",
                        "{\"id\":\"a\",\"label\":\"Pos\",\"rationale\":\"fine\"}\n"
                        "{\"id\":\"b\",\"label\":\"neg\",\"rationale\":\"bad\"}\n"
                        "{\"id\":\"c\",\"raw\":\"Label: pos. Catchy songs.\"}\n");
  auto records = replay_load(good, labels);
  REQUIRE(records.size() == 3);
  CHECK(records[0].parse_ok);
  CHECK(records[1].predicted_label == "Neg");
  CHECK(records[2].parse_ok);
  CHECK(records[2].predicted_label == "Pos");
  CHECK(records[2].rationale == "Catchy songs.");
  for (const auto& r : records) CHECK(r.provenance == Provenance::replay);

  auto bad = tmp.write("bad.jsonl",
                       "{\"id\":\"a\",\"label\":\"Pos\",\"rationale\":\"ok\"}\n"
                       "{\"id\":\"b\"}\n");
  try {
    replay_load(bad, labels);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  // out-of-space labels become flagged parse failures, not crashes
  auto weird = tmp.write("weird.jsonl",
                         "{\"id\":\"a\",\"label\":\"Maybe\",\"rationale\":\"eh\"}\n");
  auto flagged = replay_load(weird, labels);
  REQUIRE(flagged.size() == 1);
  CHECK_FALSE(flagged[0].parse_ok);
}

TEST_CASE("query: warm cache serves without any network") {
  TempDir tmp;
  EndpointConfig cfg;
  cfg.url = "http://127.0.0.1:9";  // nothing listens here
  cfg.model = "test-model";
  cfg.cache_dir = tmp.path() / "cache";
  cfg.offline = false;
  cfg.max_retries = 0;

  const std::string prompt = "some prompt";
  const std::string key = response_cache_key(prompt, cfg.model);
  std::filesystem::create_directories(cfg.cache_dir);
  tmp.write("cache/" + key + ".json",
            "{\"key\":\"" + key + "\",\"model\":\"test-model\",\"prompt\":\"some "
            "prompt\",\"response\":\"cached reply\"}\n");

  QueryResult q = query(prompt, cfg);
  CHECK(q.response == "cached reply");
  CHECK(q.provenance == Provenance::cache);
}

TEST_CASE("query: offline cache miss is an explicit error") {
  TempDir tmp;
  EndpointConfig cfg;
  cfg.url = "http://127.0.0.1:9";
  cfg.model = "test-model";
  cfg.cache_dir = tmp.path() / "cache";
  cfg.offline = true;
  try {
    query("never seen", cfg);
    FAIL("expected offline miss");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::network);
  }
}

TEST_CASE("query: transient 5xx retries once, then the response is cached") {
  TempDir tmp;
  std::atomic<int> hits{0};

  httplib::Server server;
  server.Post("/v1/chat/completions",
              [&](const httplib::Request&, httplib::Response& res) {
                if (hits.fetch_add(1) == 0) {
                  res.status = 503;
                  res.set_content("overloaded", "text/plain");
                  return;
                }
                nlohmann::json message{
                    {"role", "assistant"},
                    {"content", "{\"label\":\"Pos\",\"rationale\":\"ok\"}"}};
                nlohmann::json body;
                body["choices"] = nlohmann::json::array({{{"message", message}}});
                res.set_content(body.dump(), "application/json");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread runner([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EndpointConfig cfg;
  cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model = "test-model";
  cfg.cache_dir = tmp.path() / "cache";
  cfg.max_retries = 2;
  cfg.retry_backoff_ms = 10;

  QueryResult q = query("prompt one", cfg);
  CHECK(q.provenance == Provenance::live);
  CHECK(q.response == "{\"label\":\"Pos\",\"rationale\":\"ok\"}");
  CHECK(hits.load() == 2);  // 503 then 200

  // identical prompt now comes from the cache, no extra request
  QueryResult again = query("prompt one", cfg);
  CHECK(again.provenance == Provenance::cache);
  CHECK(again.response == q.response);
  CHECK(hits.load() == 2);

  server.stop();
  runner.join();
}

TEST_CASE("records file round trip with skip entries") {
  TempDir tmp;
  AnnotateOutput out;
  LlmRecord rec;
  rec.instance_id = "a";
  rec.predicted_label = "Pos";
  rec.rationale = "nice";
  rec.raw_response = "{\"label\":\"Pos\",\"rationale\":\"nice\"}";
  rec.provenance = Provenance::replay;
  out.records.push_back(rec);
  out.skipped_ids.push_back("missing1");

  auto file = tmp.path() / "records.jsonl";
  write_records_file(out, file);
  AnnotateOutput back = read_records_file(file);
  REQUIRE(back.records.size() == 1);
  CHECK(back.records[0].instance_id == "a");
  CHECK(back.records[0].predicted_label == "Pos");
  CHECK(back.records[0].provenance == Provenance::replay);
  REQUIRE(back.skipped_ids.size() == 1);
  CHECK(back.skipped_ids[0] == "missing1");
}
