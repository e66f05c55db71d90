#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "racov/corpus.hpp"

namespace racov {

struct VectorizerConfig {
  int ngram_min = 1;
  int ngram_max = 2;
  int min_df = 1;
  std::string stopword_list_id = "builtin-v1";
};

// Fitted n-gram space over lemmas. Indices are dense and assigned in
// lexicographic n-gram order, which keeps fitting deterministic.
struct Vocabulary {
  std::vector<std::string> ngrams;  // index -> n-gram
  std::unordered_map<std::string, std::size_t> index;
  std::vector<double> idf;
  VectorizerConfig config;

  std::size_t size() const noexcept { return ngrams.size(); }
};

// Strictly increasing indices, values > 0, unit L2 norm unless empty.
struct SparseVector {
  std::vector<std::pair<std::size_t, double>> entries;

  bool empty() const noexcept { return entries.empty(); }
};

struct LrConfig {
  double l2 = 1.0;
  double tol = 1e-6;      // gradient-norm stopping criterion
  int max_iter = 500;
  std::uint64_t seed = 0;  // recorded; training itself is deterministic
};

struct LrWeights {
  std::vector<std::vector<double>> weights;  // classes x vocabulary
  std::vector<double> intercepts;            // per class
  std::vector<std::string> class_order;
  LrConfig config;
  bool converged = false;
  int iterations = 0;

  std::size_t n_classes() const noexcept { return class_order.size(); }
  std::size_t dim() const noexcept {
    return weights.empty() ? 0 : weights.front().size();
  }
};

struct FeatureContribution {
  std::string feature;
  double contribution = 0.0;  // weight * tf-idf value, signed
};

// Top-k instance-active features of one instance, split by contribution sign.
struct FeatureSet {
  std::string instance_id;
  std::vector<FeatureContribution> supporting;    // contribution > 0
  std::vector<FeatureContribution> contradicting; // contribution < 0
  int k = 0;
};

struct Prediction {
  std::string label;
  int label_index = 0;
  std::vector<double> probabilities;
};

// idf_t = ln((1+N)/(1+df_t)) + 1, over stopword-filtered lemma n-grams
// (bigrams are dropped only when both members are stopwords).
Vocabulary fit_vectorizer(const Dataset& train, const VectorizerConfig& cfg = {},
                          const std::unordered_set<std::string>* stopwords = nullptr);

// count * idf per n-gram, L2-normalized; unknown n-grams are ignored.
SparseVector transform(const Vocabulary& vocab, std::string_view text);

// Multinomial softmax regression trained by batch gradient descent with
// Armijo backtracking. Objective:
//   J = (1/n) sum_i cross_entropy_i + (l2/2) * ||W||_F^2   (intercepts free)
// Non-convergence within max_iter is reported via LrWeights::converged.
LrWeights train_lr(const std::vector<SparseVector>& X, const std::vector<int>& y,
                   const std::vector<std::string>& class_order, const LrConfig& cfg = {},
                   std::vector<double>* loss_history = nullptr,
                   std::size_t dim = 0);  // 0: infer from the largest active index

Prediction predict(const LrWeights& model, const SparseVector& x);

// Contributions c_j = W[class][j] * x_j over active features, ranked by |c_j|
// (ties to the lower index); zero contributions are excluded.
FeatureSet top_features(const LrWeights& model, const Vocabulary& vocab,
                        const SparseVector& x, const std::string& klass, int k,
                        std::string instance_id = {});

// Flat-parameter objective helpers, exposed so tests can difference the loss
// numerically. Layout: [W row-major (C x V), b (C)].
struct LrProblem {
  const std::vector<SparseVector>* X = nullptr;
  const std::vector<int>* y = nullptr;
  std::size_t n_classes = 0;
  std::size_t dim = 0;
  double l2 = 0.0;
};
double lr_loss(const LrProblem& p, const std::vector<double>& params);
std::vector<double> lr_gradient(const LrProblem& p, const std::vector<double>& params);

// Single-file model archive (vocabulary + weights + config), format-tagged.
void save_model(const Vocabulary& vocab, const LrWeights& model,
                const std::filesystem::path& path);
std::pair<Vocabulary, LrWeights> load_model(const std::filesystem::path& path);

}  // namespace racov
