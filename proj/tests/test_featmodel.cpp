#include <doctest.h>

#include <cmath>
#include <cstring>
#include <unordered_set>

#include "racov/error.hpp"
#include "racov/featmodel.hpp"
#include "racov/rng.hpp"
#include "test_util.hpp"

using namespace racov;
using racov::testutil::TempDir;

namespace {

Dataset docs_dataset(const std::vector<std::string>& texts) {
  Dataset d;
  d.name = "docs";
  d.labels = {"A", "B"};
  for (std::size_t i = 0; i < texts.size(); ++i)
    d.instances.push_back(Instance{"d" + std::to_string(i), texts[i],
                                   i % 2 == 0 ? "A" : "B"});
  return d;
}

const std::unordered_set<std::string> kNoStopwords;

}  // namespace

TEST_CASE("fit_vectorizer: hand-computed idf over two documents") {
  Dataset d = docs_dataset({"a b", "b c"});
  Vocabulary vocab = fit_vectorizer(d, {}, &kNoStopwords);

  REQUIRE(vocab.size() == 5);  // a, "a b", b, "b c", c
  CHECK(vocab.ngrams == std::vector<std::string>{"a", "a b", "b", "b c", "c"});

  const double idf_df1 = std::log(3.0 / 2.0) + 1.0;
  CHECK(vocab.idf[vocab.index.at("b")] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vocab.idf[vocab.index.at("a")] == doctest::Approx(idf_df1).epsilon(1e-12));
  CHECK(vocab.idf[vocab.index.at("a b")] == doctest::Approx(idf_df1).epsilon(1e-12));
}

TEST_CASE("fit_vectorizer: idf of a term present in every document is 1") {
  Dataset d = docs_dataset({"x", "x"});
  Vocabulary vocab = fit_vectorizer(d, {}, &kNoStopwords);
  REQUIRE(vocab.size() == 1);
  CHECK(vocab.idf[vocab.index.at("x")] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_vectorizer: all-stopword corpus is an error") {
  Dataset d = docs_dataset({"the of", "of the"});
  CHECK_THROWS_AS(fit_vectorizer(d), Error);
}

TEST_CASE("fit_vectorizer: min_df filters rare n-grams") {
  Dataset d = docs_dataset({"a b", "b c"});
  VectorizerConfig cfg;
  cfg.min_df = 2;
  Vocabulary vocab = fit_vectorizer(d, cfg, &kNoStopwords);
  CHECK(vocab.ngrams == std::vector<std::string>{"b"});
}

TEST_CASE("fit_vectorizer: bigrams keep stopword+content pairs") {
  Dataset d = docs_dataset({"the film", "the film"});
  Vocabulary vocab = fit_vectorizer(d);  // builtin stopwords drop "the"
  CHECK(vocab.index.count("film") == 1);
  CHECK(vocab.index.count("the") == 0);
  CHECK(vocab.index.count("the film") == 1);
}

TEST_CASE("transform: hand-computed tf-idf values") {
  Dataset d = docs_dataset({"a c", "a c"});
  VectorizerConfig unigram;
  unigram.ngram_max = 1;
  Vocabulary vocab = fit_vectorizer(d, unigram, &kNoStopwords);

  SUBCASE("single in-vocab token normalizes to 1") {
    SparseVector x = transform(vocab, "a");
    REQUIRE(x.entries.size() == 1);
    CHECK(x.entries[0].second == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("empty and out-of-vocabulary text give the zero vector") {
    CHECK(transform(vocab, "").empty());
    CHECK(transform(vocab, "zebra quagga").empty());
  }
  SUBCASE("two tokens with equal idf split the norm") {
    SparseVector x = transform(vocab, "a c");
    REQUIRE(x.entries.size() == 2);
    const double expected = 1.0 / std::sqrt(2.0);
    CHECK(x.entries[0].second == doctest::Approx(expected).epsilon(1e-12));
    CHECK(x.entries[1].second == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("vectors have unit norm when nonzero") {
    SparseVector x = transform(vocab, "a a c");
    double norm = 0.0;
    for (const auto& [j, v] : x.entries) norm += v * v;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  }
}

namespace {

SparseVector sv(std::initializer_list<std::pair<std::size_t, double>> entries) {
  SparseVector x;
  for (const auto& e : entries) x.entries.push_back(e);
  return x;
}

// 10 separable points in 2 dims.
void separable_toy(std::vector<SparseVector>& X, std::vector<int>& y) {
  for (int i = 0; i < 5; ++i) {
    X.push_back(sv({{0, 0.8 + 0.04 * i}, {1, 0.1}}));
    y.push_back(0);
    X.push_back(sv({{0, 0.1}, {1, 0.8 + 0.04 * i}}));
    y.push_back(1);
  }
}

}  // namespace

TEST_CASE("train_lr: separable toy set reaches full training accuracy") {
  std::vector<SparseVector> X;
  std::vector<int> y;
  separable_toy(X, y);
  std::vector<double> history;
  LrWeights model = train_lr(X, y, {"A", "B"}, {}, &history);

  for (std::size_t i = 0; i < X.size(); ++i)
    CHECK(predict(model, X[i]).label_index == y[i]);

  // accepted iterations never increase the objective
  for (std::size_t t = 1; t < history.size(); ++t) CHECK(history[t] <= history[t - 1]);
}

TEST_CASE("train_lr: analytic gradient matches central finite differences") {
  Rng rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t dim = 3 + rng.below(4);
    const std::size_t n_classes = 2 + rng.below(3);
    const std::size_t n = n_classes + 4 + rng.below(6);

    std::vector<SparseVector> X;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      SparseVector x;
      for (std::size_t j = 0; j < dim; ++j)
        if (rng.below(2) == 0) x.entries.emplace_back(j, 0.1 + rng.unit());
      X.push_back(std::move(x));
      y.push_back(static_cast<int>(i % n_classes));
    }
    LrProblem prob{&X, &y, n_classes, dim, 0.3};

    std::vector<double> params(n_classes * dim + n_classes);
    for (double& p : params) p = rng.unit() - 0.5;

    const auto analytic = lr_gradient(prob, params);
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto plus = params, minus = params;
      plus[k] += h;
      minus[k] -= h;
      const double fd = (lr_loss(prob, plus) - lr_loss(prob, minus)) / (2 * h);
      const double rel = std::fabs(analytic[k] - fd) / std::max(1.0, std::fabs(fd));
      worst = std::max(worst, rel);
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("train_lr: doubling the l2 strength does not grow the weights") {
  std::vector<SparseVector> X;
  std::vector<int> y;
  separable_toy(X, y);

  auto weight_norm = [](const LrWeights& m) {
    double sum = 0.0;
    for (const auto& row : m.weights)
      for (double w : row) sum += w * w;
    return std::sqrt(sum);
  };

  LrConfig weak, strong;
  weak.l2 = 0.5;
  strong.l2 = 1.0;
  double n_weak = weight_norm(train_lr(X, y, {"A", "B"}, weak));
  double n_strong = weight_norm(train_lr(X, y, {"A", "B"}, strong));
  CHECK(n_strong <= n_weak + 1e-12);
}

TEST_CASE("train_lr: input validation") {
  std::vector<SparseVector> X{sv({{0, 1.0}}), sv({{1, 1.0}})};
  CHECK_THROWS_AS(train_lr(X, {0}, {"A", "B"}, {}), Error);       // size mismatch
  CHECK_THROWS_AS(train_lr(X, {0, 0}, {"A", "B"}, {}), Error);    // class B unseen
  CHECK_THROWS_AS(train_lr(X, {0, 2}, {"A", "B"}, {}), Error);    // index range
}

TEST_CASE("predict: intercept-only behaviour on the zero vector") {
  LrWeights model;
  model.class_order = {"A", "B", "C"};
  model.weights = {{0.0}, {0.0}, {0.0}};
  model.intercepts = {0.1, 0.9, 0.4};
  Prediction p = predict(model, SparseVector{});
  REQUIRE(p.probabilities.size() == 3);

  // softmax of intercepts
  double denom = std::exp(0.1) + std::exp(0.9) + std::exp(0.4);
  CHECK(p.probabilities[0] == doctest::Approx(std::exp(0.1) / denom).epsilon(1e-12));
  CHECK(p.label == "B");
}

TEST_CASE("predict: probabilities sum to one on random inputs") {
  Rng rng(5);
  LrWeights model;
  model.class_order = {"A", "B", "C", "D"};
  model.intercepts = {0.0, 0.1, -0.2, 0.3};
  model.weights.assign(4, std::vector<double>(6));
  for (auto& row : model.weights)
    for (double& w : row) w = rng.unit() * 4.0 - 2.0;

  for (int i = 0; i < 100; ++i) {
    SparseVector x;
    for (std::size_t j = 0; j < 6; ++j)
      if (rng.below(2)) x.entries.emplace_back(j, rng.unit());
    Prediction p = predict(model, x);
    double sum = 0.0;
    for (double v : p.probabilities) sum += v;
    CHECK(std::fabs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("predict: adding a constant to every logit keeps the argmax") {
  Rng rng(6);
  LrWeights model;
  model.class_order = {"A", "B", "C"};
  model.intercepts = {0.2, -0.1, 0.05};
  model.weights.assign(3, std::vector<double>(4));
  for (auto& row : model.weights)
    for (double& w : row) w = rng.unit() * 2.0 - 1.0;

  LrWeights shifted = model;
  for (double& b : shifted.intercepts) b += 7.5;

  for (int i = 0; i < 50; ++i) {
    SparseVector x;
    for (std::size_t j = 0; j < 4; ++j)
      if (rng.below(2)) x.entries.emplace_back(j, rng.unit());
    CHECK(predict(model, x).label == predict(shifted, x).label);
  }
}

namespace {

Vocabulary tiny_vocab(std::size_t n) {
  Vocabulary v;
  for (std::size_t i = 0; i < n; ++i) {
    v.ngrams.push_back("f" + std::to_string(i + 1));
    v.index.emplace(v.ngrams.back(), i);
    v.idf.push_back(1.0);
  }
  return v;
}

}  // namespace

TEST_CASE("top_features: worked example with mixed signs") {
  Vocabulary vocab = tiny_vocab(4);
  LrWeights model;
  model.class_order = {"A", "B"};
  model.weights = {{2.0, -3.0, 0.5, 1.0}, {0.0, 0.0, 0.0, 0.0}};
  model.intercepts = {0.0, 0.0};

  SparseVector x = sv({{0, 0.5}, {1, 0.5}, {2, 0.5}});
  FeatureSet fs = top_features(model, vocab, x, "A", 2, "inst");

  REQUIRE(fs.supporting.size() == 1);
  REQUIRE(fs.contradicting.size() == 1);
  CHECK(fs.supporting[0].feature == "f1");
  CHECK(fs.supporting[0].contribution == doctest::Approx(1.0));
  CHECK(fs.contradicting[0].feature == "f2");
  CHECK(fs.contradicting[0].contribution == doctest::Approx(-1.5));
  CHECK(fs.k == 2);
  CHECK(fs.instance_id == "inst");
}

TEST_CASE("top_features: zero vector and oversized k") {
  Vocabulary vocab = tiny_vocab(3);
  LrWeights model;
  model.class_order = {"A", "B"};
  model.weights = {{2.0, -3.0, 0.0}, {0.0, 0.0, 0.0}};
  model.intercepts = {0.0, 0.0};

  FeatureSet empty = top_features(model, vocab, SparseVector{}, "A", 5);
  CHECK(empty.supporting.empty());
  CHECK(empty.contradicting.empty());

  // f3 has weight 0 -> zero contribution, excluded
  SparseVector x = sv({{0, 0.4}, {1, 0.4}, {2, 0.4}});
  FeatureSet fs = top_features(model, vocab, x, "A", 10);
  CHECK(fs.supporting.size() + fs.contradicting.size() == 2);
  CHECK(static_cast<int>(fs.supporting.size() + fs.contradicting.size()) <= fs.k);
}

TEST_CASE("top_features: equals a brute-force oracle on random models") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 1 + rng.below(8);
    Vocabulary vocab = tiny_vocab(dim);
    LrWeights model;
    model.class_order = {"A", "B"};
    model.weights.assign(2, std::vector<double>(dim));
    for (auto& row : model.weights)
      for (double& w : row) w = (rng.unit() - 0.5) * 4.0;
    model.intercepts = {0.0, 0.0};

    SparseVector x;
    for (std::size_t j = 0; j < dim; ++j)
      if (rng.below(2)) x.entries.emplace_back(j, 0.05 + rng.unit());
    const int k = 1 + static_cast<int>(rng.below(5));
    FeatureSet fs = top_features(model, vocab, x, "A", k);

    // oracle: all (index, contribution) pairs, sort, cut, partition
    struct Pair {
      std::size_t j;
      double c;
    };
    std::vector<Pair> all;
    for (const auto& [j, v] : x.entries) {
      double c = model.weights[0][j] * v;
      if (c != 0.0) all.push_back({j, c});
    }
    std::sort(all.begin(), all.end(), [](const Pair& a, const Pair& b) {
      if (std::fabs(a.c) != std::fabs(b.c)) return std::fabs(a.c) > std::fabs(b.c);
      return a.j < b.j;
    });
    if (all.size() > static_cast<std::size_t>(k)) all.resize(static_cast<std::size_t>(k));
    std::vector<std::string> want_support, want_contra;
    for (const auto& p : all)
      (p.c > 0 ? want_support : want_contra).push_back(vocab.ngrams[p.j]);

    std::vector<std::string> got_support, got_contra;
    for (const auto& f : fs.supporting) got_support.push_back(f.feature);
    for (const auto& f : fs.contradicting) got_contra.push_back(f.feature);
    CHECK(got_support == want_support);
    CHECK(got_contra == want_contra);

    // sign consistency: tf-idf values are nonnegative
    for (const auto& f : fs.supporting) CHECK(f.contribution > 0.0);
    for (const auto& f : fs.contradicting) CHECK(f.contribution < 0.0);
    CHECK(static_cast<int>(fs.supporting.size() + fs.contradicting.size()) <= k);
  }
}

TEST_CASE("model archive round-trips bit-exactly") {
  TempDir tmp;
  Dataset d = docs_dataset({"the movie was great fun", "a boring dull plot",
                            "great acting and pacing", "dull and boring scenes"});
  Vocabulary vocab = fit_vectorizer(d);
  std::vector<SparseVector> X;
  std::vector<int> y;
  for (const auto& inst : d.instances) {
    X.push_back(transform(vocab, inst.text));
    y.push_back(d.label_index(inst.gold_label));
  }
  LrWeights model = train_lr(X, y, d.labels, {}, nullptr, vocab.size());

  auto file = tmp.path() / "model.json";
  save_model(vocab, model, file);
  auto [vocab2, model2] = load_model(file);

  CHECK(vocab2.ngrams == vocab.ngrams);
  REQUIRE(vocab2.idf.size() == vocab.idf.size());
  CHECK(std::memcmp(vocab2.idf.data(), vocab.idf.data(),
                    vocab.idf.size() * sizeof(double)) == 0);
  REQUIRE(model2.weights.size() == model.weights.size());
  for (std::size_t c = 0; c < model.weights.size(); ++c)
    CHECK(std::memcmp(model2.weights[c].data(), model.weights[c].data(),
                      model.weights[c].size() * sizeof(double)) == 0);
  CHECK(std::memcmp(model2.intercepts.data(), model.intercepts.data(),
                    model.intercepts.size() * sizeof(double)) == 0);
  CHECK(model2.class_order == model.class_order);
  CHECK(model2.converged == model.converged);

  // saving the loaded model reproduces the file byte for byte
  auto file2 = tmp.path() / "model2.json";
  save_model(vocab2, model2, file2);
  CHECK(racov::testutil::slurp(file) == racov::testutil::slurp(file2));
}
