#include "racov/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "racov/error.hpp"
#include "racov/rng.hpp"

namespace racov {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

void append_instance(Dataset& d, Instance inst, int line,
                     std::unordered_map<std::string, int>& seen) {
  if (inst.id.empty())
    throw Error(ErrorKind::parse, "empty id at line " + std::to_string(line));
  if (trim(inst.text).empty())
    throw Error(ErrorKind::parse, "empty text for id \"" + inst.id +
                                      "\" at line " + std::to_string(line));
  if (inst.gold_label.empty())
    throw Error(ErrorKind::parse, "empty label for id \"" + inst.id +
                                      "\" at line " + std::to_string(line));
  auto [it, fresh] = seen.emplace(inst.id, line);
  if (!fresh)
    throw Error(ErrorKind::parse, "duplicate id \"" + inst.id + "\" at line " +
                                      std::to_string(line) +
                                      " (first seen at line " +
                                      std::to_string(it->second) + ")");
  d.instances.push_back(std::move(inst));
}

void load_jsonl(Dataset& d, std::istream& in) {
  std::unordered_map<std::string, int> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::parse, "malformed json at line " +
                                        std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("text") ||
        !obj.contains("label") || !obj["id"].is_string() ||
        !obj["text"].is_string() || !obj["label"].is_string())
      throw Error(ErrorKind::parse,
                  "record at line " + std::to_string(line_no) +
                      " must be an object with string fields id/text/label");
    append_instance(d,
                    Instance{obj["id"].get<std::string>(),
                             obj["text"].get<std::string>(),
                             obj["label"].get<std::string>()},
                    line_no, seen);
  }
}

// Minimal RFC-4180 reader: quoted fields, "" escapes, embedded newlines.
std::vector<std::pair<std::vector<std::string>, int>> read_csv_rows(std::istream& in) {
  std::vector<std::pair<std::vector<std::string>, int>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  int line_no = 1;
  int row_start = 1;
  char c;
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        ++line_no;
        if (any || !field.empty() || !row.empty()) {
          row.push_back(std::move(field));
          field.clear();
          rows.emplace_back(std::move(row), row_start);
          row.clear();
          any = false;
        }
        row_start = line_no;
        break;
      default:
        field.push_back(c);
        any = true;
        break;
    }
  }
  if (quoted)
    throw Error(ErrorKind::parse, "unterminated quoted field starting near line " +
                                      std::to_string(row_start));
  if (any || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.emplace_back(std::move(row), row_start);
  }
  return rows;
}

void load_csv(Dataset& d, std::istream& in) {
  auto rows = read_csv_rows(in);
  if (rows.empty()) throw Error(ErrorKind::parse, "csv file has no header row");
  std::unordered_map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < rows[0].first.size(); ++i)
    columns[trim(rows[0].first[i])] = i;
  for (const char* required : {"id", "text", "label"})
    if (!columns.count(required))
      throw Error(ErrorKind::parse,
                  std::string("csv header is missing column \"") + required + "\"");

  std::unordered_map<std::string, int> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [fields, line] = rows[r];
    if (fields.size() != rows[0].first.size())
      throw Error(ErrorKind::parse, "csv row at line " + std::to_string(line) +
                                        " has " + std::to_string(fields.size()) +
                                        " fields, expected " +
                                        std::to_string(rows[0].first.size()));
    append_instance(d,
                    Instance{fields[columns["id"]], fields[columns["text"]],
                             fields[columns["label"]]},
                    line, seen);
  }
}

void finalize_labels(Dataset& d,
                     const std::optional<std::vector<std::string>>& manifest) {
  if (manifest) {
    std::set<std::string> allowed(manifest->begin(), manifest->end());
    for (const auto& inst : d.instances)
      if (!allowed.count(inst.gold_label))
        throw Error(ErrorKind::data, "label \"" + inst.gold_label + "\" of id \"" +
                                         inst.id + "\" is not in the labels manifest");
    d.labels = *manifest;
  } else {
    std::set<std::string> present;
    for (const auto& inst : d.instances) present.insert(inst.gold_label);
    d.labels.assign(present.begin(), present.end());
  }
  if (d.labels.size() < 2)
    throw Error(ErrorKind::data, "label space must contain at least 2 labels, got " +
                                     std::to_string(d.labels.size()));
}

}  // namespace

int Dataset::label_index(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> load_labels_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open labels manifest: " + path.string());
  std::vector<std::string> labels;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    std::string label = trim(line);
    if (label.empty()) continue;
    if (!seen.insert(label).second)
      throw Error(ErrorKind::parse, "duplicate label \"" + label + "\" in manifest");
    labels.push_back(std::move(label));
  }
  if (labels.empty())
    throw Error(ErrorKind::parse, "labels manifest is empty: " + path.string());
  return labels;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const std::optional<std::filesystem::path>& labels_manifest) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open dataset file: " + path.string());

  Dataset d;
  d.name = path.stem().string();
  if (format == DatasetFormat::jsonl)
    load_jsonl(d, in);
  else
    load_csv(d, in);

  if (d.instances.empty())
    throw Error(ErrorKind::data, "dataset is empty: " + path.string());

  std::optional<std::vector<std::string>> manifest;
  if (labels_manifest) manifest = load_labels_manifest(*labels_manifest);
  finalize_labels(d, manifest);
  return d;
}

void save_dataset_jsonl(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write dataset file: " + path.string());
  for (const auto& inst : d.instances) {
    json obj;
    obj["id"] = inst.id;
    obj["text"] = inst.text;
    obj["label"] = inst.gold_label;
    out << obj.dump() << '\n';
  }
}

std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction,
                                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorKind::config, "train_fraction must lie in (0,1)");
  const std::size_t n = d.instances.size();
  const auto total_train =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 0.5));
  if (total_train == 0 || total_train >= n)
    throw Error(ErrorKind::data,
                "split with fraction " + std::to_string(train_fraction) + " on " +
                    std::to_string(n) + " instances leaves an empty part");

  // Index groups per label, in label-space order.
  std::vector<std::vector<std::size_t>> groups(d.labels.size());
  for (std::size_t i = 0; i < n; ++i) {
    int li = d.label_index(d.instances[i].gold_label);
    if (li < 0)
      throw Error(ErrorKind::data, "instance \"" + d.instances[i].id +
                                       "\" has a label outside the label space");
    groups[static_cast<std::size_t>(li)].push_back(i);
  }
  bool stratify = true;
  for (const auto& g : groups)
    if (g.size() < 2) stratify = false;

  Rng rng(seed);
  std::vector<bool> in_train(n, false);

  if (stratify) {
    // Largest-remainder apportionment of the train budget across labels.
    std::vector<std::size_t> take(groups.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      double target = train_fraction * static_cast<double>(groups[g].size());
      take[g] = static_cast<std::size_t>(std::floor(target));
      assigned += take[g];
      remainders.emplace_back(target - std::floor(target), g);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::size_t extra = total_train > assigned ? total_train - assigned : 0;
    for (const auto& [frac, g] : remainders) {
      if (extra == 0) break;
      if (take[g] < groups[g].size()) {
        ++take[g];
        --extra;
      }
    }
    while (extra > 0) {  // float-rounding stragglers
      bool placed = false;
      for (std::size_t g = 0; g < groups.size() && extra > 0; ++g)
        if (take[g] < groups[g].size()) {
          ++take[g];
          --extra;
          placed = true;
        }
      if (!placed) break;
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
      auto shuffled = groups[g];
      rng.shuffle(shuffled);
      for (std::size_t i = 0; i < take[g] && i < shuffled.size(); ++i)
        in_train[shuffled[i]] = true;
    }
  } else {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < total_train; ++i) in_train[order[i]] = true;
  }

  Dataset train, eval;
  train.name = d.name + ".train";
  eval.name = d.name + ".eval";
  train.labels = d.labels;
  eval.labels = d.labels;
  for (std::size_t i = 0; i < n; ++i)
    (in_train[i] ? train : eval).instances.push_back(d.instances[i]);

  if (train.instances.empty() || eval.instances.empty())
    throw Error(ErrorKind::data, "split produced an empty part");
  return {std::move(train), std::move(eval)};
}

}  // namespace racov
