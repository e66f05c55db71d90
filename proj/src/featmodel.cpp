#include "racov/featmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "racov/error.hpp"
#include "racov/textnorm.hpp"

namespace racov {

namespace {

using nlohmann::json;

// Candidate n-grams of one text. `filtered` applies the fit-time stopword
// rules; transform passes nullptr because vocabulary lookup already filters.
std::vector<std::string> text_ngrams(std::string_view text,
                                     const VectorizerConfig& cfg,
                                     const std::unordered_set<std::string>* stopwords) {
  const NormalizedText norm = normalize(text);
  std::vector<std::string> out;
  const auto is_stop = [&](const std::string& lemma) {
    return stopwords && stopwords->count(lemma) > 0;
  };
  if (cfg.ngram_min <= 1 && cfg.ngram_max >= 1) {
    for (const auto& lemma : norm.lemmas)
      if (!is_stop(lemma)) out.push_back(lemma);
  }
  if (cfg.ngram_max >= 2 && norm.lemmas.size() >= 2) {
    for (std::size_t i = 0; i + 1 < norm.lemmas.size(); ++i) {
      if (is_stop(norm.lemmas[i]) && is_stop(norm.lemmas[i + 1])) continue;
      out.push_back(norm.lemmas[i] + " " + norm.lemmas[i + 1]);
    }
  }
  return out;
}

void softmax_inplace(std::vector<double>& z) {
  double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

std::vector<double> class_scores(const std::vector<double>& params,
                                 std::size_t n_classes, std::size_t dim,
                                 const SparseVector& x) {
  std::vector<double> z(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    double dot = params[n_classes * dim + c];  // intercept
    const double* wc = params.data() + c * dim;
    for (const auto& [j, v] : x.entries) dot += wc[j] * v;
    z[c] = dot;
  }
  return z;
}

}  // namespace

Vocabulary fit_vectorizer(const Dataset& train, const VectorizerConfig& cfg,
                          const std::unordered_set<std::string>* stopwords) {
  if (train.instances.empty())
    throw Error(ErrorKind::data, "cannot fit vectorizer on an empty dataset");
  if (cfg.ngram_min != 1 || cfg.ngram_max < 1 || cfg.ngram_max > 2)
    throw Error(ErrorKind::config, "supported n-gram range is 1..1 or 1..2");
  if (cfg.min_df < 1)
    throw Error(ErrorKind::config, "min_df must be >= 1");

  const std::unordered_set<std::string>* stops =
      stopwords ? stopwords : &builtin_stopwords();

  std::map<std::string, int> df;  // ordered: defines index assignment
  for (const auto& inst : train.instances) {
    auto grams = text_ngrams(inst.text, cfg, stops);
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    for (auto& g : grams) ++df[g];
  }

  Vocabulary vocab;
  vocab.config = cfg;
  const double n_docs = static_cast<double>(train.instances.size());
  for (const auto& [gram, count] : df) {
    if (count < cfg.min_df) continue;
    vocab.index.emplace(gram, vocab.ngrams.size());
    vocab.ngrams.push_back(gram);
    vocab.idf.push_back(std::log((1.0 + n_docs) / (1.0 + count)) + 1.0);
  }
  if (vocab.ngrams.empty())
    throw Error(ErrorKind::data,
                "vocabulary is empty after stopword and min_df filtering");
  return vocab;
}

SparseVector transform(const Vocabulary& vocab, std::string_view text) {
  std::map<std::size_t, double> counts;
  for (const auto& gram : text_ngrams(text, vocab.config, nullptr)) {
    auto it = vocab.index.find(gram);
    if (it != vocab.index.end()) counts[it->second] += 1.0;
  }
  SparseVector x;
  double norm_sq = 0.0;
  for (const auto& [idx, count] : counts) {
    double v = count * vocab.idf[idx];
    x.entries.emplace_back(idx, v);
    norm_sq += v * v;
  }
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& [idx, v] : x.entries) v *= inv;
  }
  return x;
}

double lr_loss(const LrProblem& p, const std::vector<double>& params) {
  const auto& X = *p.X;
  const auto& y = *p.y;
  const double n = static_cast<double>(X.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    auto z = class_scores(params, p.n_classes, p.dim, X[i]);
    double zmax = *std::max_element(z.begin(), z.end());
    double lse = 0.0;
    for (double v : z) lse += std::exp(v - zmax);
    lse = zmax + std::log(lse);
    loss += lse - z[static_cast<std::size_t>(y[i])];
  }
  loss /= n;
  double reg = 0.0;
  for (std::size_t c = 0; c < p.n_classes; ++c)
    for (std::size_t j = 0; j < p.dim; ++j) {
      double w = params[c * p.dim + j];
      reg += w * w;
    }
  return loss + 0.5 * p.l2 * reg;
}

std::vector<double> lr_gradient(const LrProblem& p, const std::vector<double>& params) {
  const auto& X = *p.X;
  const auto& y = *p.y;
  const double inv_n = 1.0 / static_cast<double>(X.size());
  std::vector<double> grad(params.size(), 0.0);
  for (std::size_t i = 0; i < X.size(); ++i) {
    auto prob = class_scores(params, p.n_classes, p.dim, X[i]);
    softmax_inplace(prob);
    for (std::size_t c = 0; c < p.n_classes; ++c) {
      double r = prob[c] - (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0);
      double* gc = grad.data() + c * p.dim;
      for (const auto& [j, v] : X[i].entries) gc[j] += r * v;
      grad[p.n_classes * p.dim + c] += r;
    }
  }
  for (double& g : grad) g *= inv_n;
  for (std::size_t c = 0; c < p.n_classes; ++c)
    for (std::size_t j = 0; j < p.dim; ++j)
      grad[c * p.dim + j] += p.l2 * params[c * p.dim + j];
  return grad;
}

LrWeights train_lr(const std::vector<SparseVector>& X, const std::vector<int>& y,
                   const std::vector<std::string>& class_order, const LrConfig& cfg,
                   std::vector<double>* loss_history, std::size_t dim) {
  if (X.size() != y.size())
    throw Error(ErrorKind::data, "train_lr: |X| != |y|");
  if (class_order.size() < 2)
    throw Error(ErrorKind::data, "train_lr: need at least two classes");
  if (X.size() < class_order.size())
    throw Error(ErrorKind::data, "train_lr: fewer examples than classes");
  std::vector<int> seen(class_order.size(), 0);
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= class_order.size())
      throw Error(ErrorKind::data, "train_lr: label index out of range");
    seen[static_cast<std::size_t>(y[i])] = 1;
    if (!X[i].entries.empty())
      dim = std::max(dim, X[i].entries.back().first + 1);
  }
  for (std::size_t c = 0; c < seen.size(); ++c)
    if (!seen[c])
      throw Error(ErrorKind::data,
                  "train_lr: class \"" + class_order[c] + "\" has no examples");

  const std::size_t n_classes = class_order.size();
  LrProblem prob{&X, &y, n_classes, dim, cfg.l2};
  std::vector<double> params(n_classes * dim + n_classes, 0.0);

  double loss = lr_loss(prob, params);
  if (loss_history) loss_history->push_back(loss);

  bool converged = false;
  int iterations = 0;
  double step = 1.0;
  constexpr double kArmijo = 1e-4;
  for (int t = 0; t < cfg.max_iter; ++t) {
    auto grad = lr_gradient(prob, params);
    double gnorm_sq = 0.0;
    for (double g : grad) gnorm_sq += g * g;
    if (std::sqrt(gnorm_sq) <= cfg.tol) {
      converged = true;
      break;
    }

    step = std::min(step * 2.0, 1e3);
    std::vector<double> trial(params.size());
    bool accepted = false;
    while (step > 1e-18) {
      for (std::size_t k = 0; k < params.size(); ++k)
        trial[k] = params[k] - step * grad[k];
      double trial_loss = lr_loss(prob, trial);
      if (trial_loss <= loss - kArmijo * step * gnorm_sq) {
        params.swap(trial);
        loss = trial_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // stalled at numeric floor
    ++iterations;
    if (loss_history) loss_history->push_back(loss);
  }

  LrWeights model;
  model.class_order = class_order;
  model.config = cfg;
  model.converged = converged;
  model.iterations = iterations;
  model.intercepts.assign(params.begin() + static_cast<std::ptrdiff_t>(n_classes * dim),
                          params.end());
  model.weights.resize(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c)
    model.weights[c].assign(params.begin() + static_cast<std::ptrdiff_t>(c * dim),
                            params.begin() + static_cast<std::ptrdiff_t>((c + 1) * dim));
  return model;
}

Prediction predict(const LrWeights& model, const SparseVector& x) {
  const std::size_t n_classes = model.n_classes();
  const std::size_t dim = model.dim();
  std::vector<double> z(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    double dot = model.intercepts[c];
    for (const auto& [j, v] : x.entries)
      if (j < dim) dot += model.weights[c][j] * v;
    z[c] = dot;
  }
  softmax_inplace(z);
  std::size_t best = 0;
  for (std::size_t c = 1; c < n_classes; ++c)
    if (z[c] > z[best]) best = c;
  return Prediction{model.class_order[best], static_cast<int>(best), std::move(z)};
}

FeatureSet top_features(const LrWeights& model, const Vocabulary& vocab,
                        const SparseVector& x, const std::string& klass, int k,
                        std::string instance_id) {
  if (k < 1) throw Error(ErrorKind::config, "top_features: k must be >= 1");
  int ci = -1;
  for (std::size_t c = 0; c < model.class_order.size(); ++c)
    if (model.class_order[c] == klass) ci = static_cast<int>(c);
  if (ci < 0)
    throw Error(ErrorKind::data, "top_features: unknown class \"" + klass + "\"");

  struct Scored {
    std::size_t index;
    double contribution;
  };
  std::vector<Scored> scored;
  const auto& w = model.weights[static_cast<std::size_t>(ci)];
  for (const auto& [j, v] : x.entries) {
    if (j >= w.size()) continue;
    double c = w[j] * v;
    if (c != 0.0) scored.push_back({j, c});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    double aa = std::fabs(a.contribution), bb = std::fabs(b.contribution);
    if (aa != bb) return aa > bb;
    return a.index < b.index;
  });
  if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));

  FeatureSet fs;
  fs.instance_id = std::move(instance_id);
  fs.k = k;
  for (const auto& s : scored) {
    FeatureContribution fc{vocab.ngrams[s.index], s.contribution};
    (s.contribution > 0 ? fs.supporting : fs.contradicting).push_back(std::move(fc));
  }
  return fs;
}

void save_model(const Vocabulary& vocab, const LrWeights& model,
                const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["format"] = "racov.model/1";
  doc["vectorizer"] = {{"ngram_min", vocab.config.ngram_min},
                       {"ngram_max", vocab.config.ngram_max},
                       {"min_df", vocab.config.min_df},
                       {"stopword_list_id", vocab.config.stopword_list_id}};
  doc["ngrams"] = vocab.ngrams;
  doc["idf"] = vocab.idf;
  doc["classes"] = model.class_order;
  doc["weights"] = model.weights;
  doc["intercepts"] = model.intercepts;
  doc["lr"] = {{"l2", model.config.l2},
               {"tol", model.config.tol},
               {"max_iter", model.config.max_iter},
               {"seed", model.config.seed},
               {"converged", model.converged},
               {"iterations", model.iterations}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write model archive: " + path.string());
  out << doc.dump(2) << '\n';
}

std::pair<Vocabulary, LrWeights> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open model archive: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "malformed model archive: " + std::string(e.what()));
  }
  if (doc.value("format", "") != "racov.model/1")
    throw Error(ErrorKind::parse, "unsupported model archive format in " + path.string());

  Vocabulary vocab;
  const auto& vc = doc.at("vectorizer");
  vocab.config.ngram_min = vc.at("ngram_min").get<int>();
  vocab.config.ngram_max = vc.at("ngram_max").get<int>();
  vocab.config.min_df = vc.at("min_df").get<int>();
  vocab.config.stopword_list_id = vc.at("stopword_list_id").get<std::string>();
  vocab.ngrams = doc.at("ngrams").get<std::vector<std::string>>();
  vocab.idf = doc.at("idf").get<std::vector<double>>();
  for (std::size_t i = 0; i < vocab.ngrams.size(); ++i)
    vocab.index.emplace(vocab.ngrams[i], i);

  LrWeights model;
  model.class_order = doc.at("classes").get<std::vector<std::string>>();
  model.weights = doc.at("weights").get<std::vector<std::vector<double>>>();
  model.intercepts = doc.at("intercepts").get<std::vector<double>>();
  const auto& lr = doc.at("lr");
  model.config.l2 = lr.at("l2").get<double>();
  model.config.tol = lr.at("tol").get<double>();
  model.config.max_iter = lr.at("max_iter").get<int>();
  model.config.seed = lr.at("seed").get<std::uint64_t>();
  model.converged = lr.at("converged").get<bool>();
  model.iterations = lr.at("iterations").get<int>();

  if (model.weights.size() != model.class_order.size())
    throw Error(ErrorKind::parse, "model archive weight rows do not match classes");
  for (const auto& row : model.weights)
    if (row.size() != vocab.ngrams.size())
      throw Error(ErrorKind::parse, "model archive weight row width does not match vocabulary");
  return {std::move(vocab), std::move(model)};
}

}  // namespace racov
