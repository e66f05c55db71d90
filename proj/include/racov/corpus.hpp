#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace racov {

// One labeled text example.
struct Instance {
  std::string id;
  std::string text;
  std::string gold_label;
};

struct Dataset {
  std::string name;
  std::vector<Instance> instances;
  std::vector<std::string> labels;  // ordered label space

  std::size_t size() const noexcept { return instances.size(); }
  int label_index(std::string_view label) const;  // -1 if unknown
};

enum class DatasetFormat { jsonl, csv };

// Reads a dataset, validating ids, non-empty texts, and the label space.
// Records keep file order. When a labels manifest is given it defines the
// label space (and every gold label must belong to it); otherwise the label
// space is the sorted set of observed labels.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const std::optional<std::filesystem::path>& labels_manifest = {});

// One label per line, order significant.
std::vector<std::string> load_labels_manifest(const std::filesystem::path& path);

// Canonical interchange form: one {"id","text","label"} object per line.
void save_dataset_jsonl(const Dataset& d, const std::filesystem::path& path);

// Deterministic, seeded train/eval split. Stratified per label when every
// label has at least two instances; parts keep the original record order.
std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction,
                                  std::uint64_t seed);

}  // namespace racov
