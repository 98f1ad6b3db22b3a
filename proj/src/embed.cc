#include "disco/embed.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "disco/blob.h"
#include "disco/dataset.h"
#include "json.hpp"

namespace disco {

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(std::move(w));
  return out;
}

std::vector<std::string> Ngrams(std::span<const std::string> tokens, int n) {
  std::vector<std::string> out;
  if (n <= 0 || static_cast<std::size_t>(n) > tokens.size()) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string g = tokens[i];
    for (int k = 1; k < n; ++k) {
      g += ' ';
      g += tokens[i + k];
    }
    out.push_back(std::move(g));
  }
  return out;
}

Vocabulary Vocabulary::Build(std::span<const std::string> texts, std::vector<int> orders,
                             std::size_t cap, std::size_t min_freq) {
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto &t : texts) {
    const auto toks = Tokenize(t);
    for (int n : orders) {
      for (auto &g : Ngrams(toks, n)) ++freq[g];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> items;
  for (auto &[g, c] : freq) {
    if (c >= min_freq) items.emplace_back(g, c);
  }
  std::sort(items.begin(), items.end(), [](const auto &a, const auto &b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (items.size() > cap) items.resize(cap);
  Vocabulary v;
  v.orders_ = std::move(orders);
  for (auto &[g, c] : items) {
    v.ids_.emplace(g, static_cast<int>(v.items_.size()));
    v.items_.push_back(g);
  }
  return v;
}

std::optional<int> Vocabulary::Find(std::string_view item) const {
  auto it = ids_.find(std::string(item));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

SparseVector FeaturizeNgrams(std::string_view text, const Vocabulary &vocab) {
  std::map<int, double> counts;
  const auto toks = Tokenize(text);
  for (int n : vocab.orders()) {
    for (const auto &g : Ngrams(toks, n)) {
      if (auto id = vocab.Find(g)) counts[*id] += 1.0;
    }
  }
  return SparseVector(counts.begin(), counts.end());
}

SparseVector ConcatPair(const SparseVector &a, const SparseVector &b, int block) {
  SparseVector out = a;
  for (const auto &[i, v] : b) out.emplace_back(i + block, v);
  return out;
}

SparseVector DenseToSparse(std::span<const double> dense) {
  SparseVector out;
  out.reserve(dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) out.emplace_back(static_cast<int>(i), dense[i]);
  return out;
}

EmbeddingTable EmbeddingTable::Load(std::istream &in) {
  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = Tokenize(line);
    if (fields.empty()) continue;
    if (first) {
      first = false;
      if (fields.size() == 2) {
        char *end = nullptr;
        std::strtoull(fields[0].c_str(), &end, 10);
        const bool count_ok = *end == '\0';
        const unsigned long long dim = std::strtoull(fields[1].c_str(), &end, 10);
        if (count_ok && *end == '\0') {
          table.dim_ = dim;
          continue;
        }
      }
    }
    std::vector<double> vec;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      char *end = nullptr;
      double v = std::strtod(fields[k].c_str(), &end);
      if (*end != '\0') {
        throw std::runtime_error("embedding line " + std::to_string(lineno) +
                                 ": bad number '" + fields[k] + "'");
      }
      vec.push_back(v);
    }
    if (table.dim_ == 0) table.dim_ = vec.size();
    if (vec.size() != table.dim_ || vec.empty()) {
      throw std::runtime_error("embedding line " + std::to_string(lineno) + ": expected " +
                               std::to_string(table.dim_) + " values, got " +
                               std::to_string(vec.size()));
    }
    table.Add(fields[0], vec);
  }
  return table;
}

void EmbeddingTable::Add(const std::string &word, std::span<const double> vec) {
  if (dim_ == 0) dim_ = vec.size();
  if (vec.size() != dim_) {
    throw std::runtime_error("embedding for '" + word + "' has dimension " +
                             std::to_string(vec.size()) + ", table has " +
                             std::to_string(dim_));
  }
  auto [it, inserted] = rows_.emplace(word, words_.size());
  if (!inserted) {
    std::copy(vec.begin(), vec.end(), data_.begin() + it->second * dim_);
    return;
  }
  words_.push_back(word);
  data_.insert(data_.end(), vec.begin(), vec.end());
}

const double *EmbeddingTable::Find(std::string_view word) const {
  auto it = rows_.find(std::string(word));
  if (it == rows_.end()) return nullptr;
  return data_.data() + it->second * dim_;
}

void EmbeddingTable::EstimateProbabilities(std::span<const std::string> texts, double floor) {
  std::unordered_map<std::string, double> counts;
  double total = 0.0;
  for (const auto &t : texts) {
    for (auto &w : Tokenize(t)) {
      counts[w] += 1.0;
      total += 1.0;
    }
  }
  probs_.clear();
  for (auto &[w, c] : counts) probs_[w] = c / total;
  floor_ = floor;
}

double EmbeddingTable::Probability(std::string_view word) const {
  auto it = probs_.find(std::string(word));
  return it == probs_.end() ? floor_ : it->second;
}

std::vector<double> SifEmbed(std::string_view text, const EmbeddingTable &table) {
  std::vector<double> v(table.dim(), 0.0);
  std::size_t used = 0;
  for (const auto &w : Tokenize(text)) {
    const double *vec = table.Find(w);
    if (!vec) continue;
    const double weight = table.smoothing / (table.smoothing + table.Probability(w));
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += weight * vec[k];
    ++used;
  }
  if (used > 0) {
    for (double &x : v) x /= static_cast<double>(used);
  }
  return v;
}

PowerIterationResult FirstPrincipalDirection(std::span<const std::vector<double>> vectors,
                                             double tol, int max_iter, std::uint64_t seed) {
  PowerIterationResult result;
  if (vectors.empty()) return result;
  const std::size_t d = vectors.front().size();
  const double n = static_cast<double>(vectors.size());
  std::vector<double> mean(d, 0.0);
  for (const auto &v : vectors) {
    if (v.size() != d) throw std::invalid_argument("vectors differ in dimension");
    for (std::size_t k = 0; k < d; ++k) mean[k] += v[k] / n;
  }
  // Covariance of the centered rows.
  std::vector<double> cov(d * d, 0.0);
  std::vector<double> c(d);
  for (const auto &v : vectors) {
    for (std::size_t k = 0; k < d; ++k) c[k] = v[k] - mean[k];
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) cov[i * d + j] += c[i] * c[j] / n;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) cov[i * d + j] = cov[j * d + i];
  }

  SplitMix64 rng(seed);
  std::vector<double> u(d);
  for (double &x : u) x = rng.Uniform() - 0.5;
  auto normalize = [](std::vector<double> &x) {
    double norm = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
    if (norm > 0) {
      for (double &e : x) e /= norm;
    }
    return norm;
  };
  normalize(u);
  std::vector<double> next(d);
  for (int it = 1; it <= max_iter; ++it) {
    for (std::size_t i = 0; i < d; ++i) {
      next[i] = std::inner_product(cov.begin() + i * d, cov.begin() + (i + 1) * d, u.begin(), 0.0);
    }
    const double norm = normalize(next);
    result.iterations = it;
    if (norm == 0.0) {
      // Zero covariance: every direction is principal.
      result.converged = true;
      break;
    }
    if (std::inner_product(next.begin(), next.end(), u.begin(), 0.0) < 0) {
      for (double &e : next) e = -e;
    }
    double delta = 0.0;
    for (std::size_t k = 0; k < d; ++k) delta = std::max(delta, std::abs(next[k] - u[k]));
    u.swap(next);
    result.eigenvalue = norm;
    if (delta < tol) {
      result.converged = true;
      break;
    }
  }
  result.direction = std::move(u);
  return result;
}

void RemoveComponent(std::vector<std::vector<double>> &vectors, std::span<const double> u) {
  for (auto &v : vectors) {
    const double dot = std::inner_product(v.begin(), v.end(), u.begin(), 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= dot * u[k];
  }
}

SifCorpus SifEmbedCorpus(std::span<const std::string> texts, const EmbeddingTable &table) {
  SifCorpus out;
  for (const auto &t : texts) out.vectors.push_back(SifEmbed(t, table));
  if (out.vectors.size() >= 2) {
    out.direction = FirstPrincipalDirection(out.vectors).direction;
    RemoveComponent(out.vectors, out.direction);
  }
  return out;
}

LinearModel ZeroModel(std::vector<std::string> labels, std::size_t num_features) {
  LinearModel m;
  m.num_features = num_features;
  m.weights.assign(labels.size() * num_features, 0.0);
  m.bias.assign(labels.size(), 0.0);
  m.labels = std::move(labels);
  return m;
}

std::vector<double> Softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double &x : p) z += (x = std::exp(x - mx));
  for (double &x : p) x /= z;
  return p;
}

namespace {

std::vector<double> Logits(const LinearModel &model, const SparseVector &x) {
  std::vector<double> z(model.bias);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double *row = model.weights.data() + k * model.num_features;
    for (const auto &[j, v] : x) z[k] += row[j] * v;
  }
  return z;
}

void CheckFeatures(std::span<const SparseVector> features, std::size_t num_features) {
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (const auto &[j, v] : features[i]) {
      if (j < 0 || static_cast<std::size_t>(j) >= num_features) {
        throw std::invalid_argument("feature index " + std::to_string(j) + " out of range in row " +
                                    std::to_string(i));
      }
      if (!std::isfinite(v)) {
        throw std::invalid_argument("non-finite feature value in row " + std::to_string(i));
      }
    }
  }
}

}  // namespace

LogRegGradient LogRegLossAndGradient(const LinearModel &model,
                                     std::span<const SparseVector> features,
                                     std::span<const int> labels, double l2,
                                     std::span<const std::size_t> rows) {
  LogRegGradient g;
  g.weights.assign(model.weights.size(), 0.0);
  g.bias.assign(model.bias.size(), 0.0);
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(features.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  const std::size_t d = model.num_features;
  for (std::size_t i : rows) {
    const auto p = Softmax(Logits(model, features[i]));
    g.loss -= std::log(std::max(p[labels[i]], 1e-300)) * inv;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double delta = (p[k] - (static_cast<int>(k) == labels[i] ? 1.0 : 0.0)) * inv;
      g.bias[k] += delta;
      double *row = g.weights.data() + k * d;
      for (const auto &[j, v] : features[i]) row[j] += delta * v;
    }
  }
  if (l2 > 0) {
    double sq = 0.0;
    for (std::size_t q = 0; q < model.weights.size(); ++q) {
      sq += model.weights[q] * model.weights[q];
      g.weights[q] += l2 * model.weights[q];
    }
    g.loss += 0.5 * l2 * sq;
  }
  return g;
}

LinearModel TrainLogReg(std::span<const SparseVector> features, std::span<const int> labels,
                        std::vector<std::string> label_names, std::size_t num_features,
                        const LogRegHyper &hyper, std::vector<double> *losses) {
  if (features.size() != labels.size()) {
    throw std::invalid_argument("features and labels differ in length");
  }
  std::set<int> present(labels.begin(), labels.end());
  if (present.size() < 2) throw std::invalid_argument("logistic regression needs >= 2 classes");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= label_names.size()) {
      throw std::invalid_argument("label id out of range");
    }
  }
  CheckFeatures(features, num_features);

  LinearModel model = ZeroModel(std::move(label_names), num_features);
  const std::size_t n = features.size();
  const std::size_t batch = hyper.batch_size == 0 ? n : std::min(hyper.batch_size, n);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (batch < n) order = SeededPermutation(n, hyper.seed + static_cast<std::uint64_t>(epoch));
    for (std::size_t start = 0; start < n; start += batch) {
      std::span<const std::size_t> rows(order.data() + start, std::min(batch, n - start));
      const auto g = LogRegLossAndGradient(model, features, labels, hyper.l2, rows);
      for (std::size_t q = 0; q < model.weights.size(); ++q) model.weights[q] -= hyper.lr * g.weights[q];
      for (std::size_t k = 0; k < model.bias.size(); ++k) model.bias[k] -= hyper.lr * g.bias[k];
    }
    if (losses) losses->push_back(LogRegLossAndGradient(model, features, labels, hyper.l2).loss);
  }
  return model;
}

Prediction Predict(const LinearModel &model, const SparseVector &x) {
  for (const auto &[j, v] : x) {
    if (j < 0 || static_cast<std::size_t>(j) >= model.num_features) {
      throw std::invalid_argument("feature index " + std::to_string(j) +
                                  " exceeds model dimension " +
                                  std::to_string(model.num_features));
    }
  }
  Prediction pred;
  pred.probabilities = Softmax(Logits(model, x));
  pred.label = static_cast<std::size_t>(
      std::max_element(pred.probabilities.begin(), pred.probabilities.end()) -
      pred.probabilities.begin());
  return pred;
}

Prediction Predict(const LinearModel &model, std::span<const double> dense) {
  if (dense.size() != model.num_features) {
    throw std::invalid_argument("feature dimension " + std::to_string(dense.size()) +
                                " does not match model dimension " +
                                std::to_string(model.num_features));
  }
  return Predict(model, DenseToSparse(dense));
}

void SaveLinearModel(const LinearModel &model, const std::string &prefix) {
  nlohmann::json header = {{"format", "disco-linear-model"},
                           {"version", 1},
                           {"labels", model.labels},
                           {"num_features", model.num_features},
                           {"num_classes", model.num_classes()},
                           {"blob", "float64-le: weights (classes x features, row-major) then bias"}};
  std::ofstream js(prefix + ".json");
  js << header.dump(2) << '\n';
  std::ofstream bin(prefix + ".bin", std::ios::binary);
  WriteF64Blob(bin, model.weights);
  WriteF64Blob(bin, model.bias);
  if (!js || !bin) throw std::runtime_error("failed to write model " + prefix);
}

LinearModel LoadLinearModel(const std::string &prefix) {
  std::ifstream js(prefix + ".json");
  if (!js) throw std::runtime_error("cannot open " + prefix + ".json");
  const auto header = nlohmann::json::parse(js);
  LinearModel m = ZeroModel(header.at("labels").get<std::vector<std::string>>(),
                            header.at("num_features").get<std::size_t>());
  std::ifstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + prefix + ".bin");
  m.weights = ReadF64Blob(bin, m.weights.size());
  m.bias = ReadF64Blob(bin, m.bias.size());
  return m;
}

}  // namespace disco
