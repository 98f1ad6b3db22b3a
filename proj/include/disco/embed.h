// Baseline featurizers (n-gram bag of words, frequency-weighted embedding
// average) and a multinomial logistic-regression classifier.

#ifndef DISCO_EMBED_H_
#define DISCO_EMBED_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace disco {

// (feature index, value), indices strictly increasing.
using SparseVector = std::vector<std::pair<int, double>>;

std::vector<std::string> Tokenize(std::string_view text);

// Contiguous n-grams joined with single spaces; empty when n > |tokens|.
std::vector<std::string> Ngrams(std::span<const std::string> tokens, int n);

class Vocabulary {
 public:
  Vocabulary() = default;

  // Counts n-grams of the given orders over the texts, keeps those seen at
  // least `min_freq` times, then the `cap` most frequent (ties broken
  // lexicographically). Ids follow that ranking.
  static Vocabulary Build(std::span<const std::string> texts, std::vector<int> orders,
                          std::size_t cap = 100000, std::size_t min_freq = 1);

  std::optional<int> Find(std::string_view item) const;
  std::size_t size() const { return items_.size(); }
  const std::vector<std::string> &items() const { return items_; }
  const std::vector<int> &orders() const { return orders_; }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> ids_;
  std::vector<int> orders_;
};

// In-vocabulary n-gram counts of one text.
SparseVector FeaturizeNgrams(std::string_view text, const Vocabulary &vocab);

// [features(s1), features(s2)] with the second block offset by `block`.
SparseVector ConcatPair(const SparseVector &a, const SparseVector &b, int block);
SparseVector DenseToSparse(std::span<const double> dense);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  // Plain-text format: optional "<count> <dim>" header, then "word v1 .. vd".
  // Throws std::runtime_error on a dimension mismatch.
  static EmbeddingTable Load(std::istream &in);

  void Add(const std::string &word, std::span<const double> vec);
  const double *Find(std::string_view word) const;
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string> &words() const { return words_; }

  // Unigram probabilities from a corpus; words never seen get `floor`.
  void EstimateProbabilities(std::span<const std::string> texts, double floor = 1e-9);
  double Probability(std::string_view word) const;
  const std::unordered_map<std::string, double> &probabilities() const { return probs_; }

  double smoothing = 1e-3;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> rows_;
  std::vector<double> data_;
  std::unordered_map<std::string, double> probs_;
  double floor_ = 1e-9;
};

// Mean over in-table words of a/(a + p(w)) * vec(w); OOV words are skipped and
// do not count toward the mean. All-OOV or empty text gives the zero vector.
std::vector<double> SifEmbed(std::string_view text, const EmbeddingTable &table);

struct PowerIterationResult {
  std::vector<double> direction;  // unit length
  double eigenvalue = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Leading eigenvector of the covariance of the row-centered vectors.
PowerIterationResult FirstPrincipalDirection(std::span<const std::vector<double>> vectors,
                                             double tol = 1e-9, int max_iter = 1000,
                                             std::uint64_t seed = 0x5eed);

// v - <v, u> u for every vector.
void RemoveComponent(std::vector<std::vector<double>> &vectors, std::span<const double> u);

// Embeds a whole corpus and removes its common component. Returns the vectors
// and the removed direction (empty if the corpus has fewer than 2 texts).
struct SifCorpus {
  std::vector<std::vector<double>> vectors;
  std::vector<double> direction;
};
SifCorpus SifEmbedCorpus(std::span<const std::string> texts, const EmbeddingTable &table);

struct LinearModel {
  std::vector<std::string> labels;
  std::size_t num_features = 0;
  std::vector<double> weights;  // labels.size() x num_features, row-major
  std::vector<double> bias;

  std::size_t num_classes() const { return labels.size(); }
  double &w(std::size_t k, std::size_t j) { return weights[k * num_features + j]; }
  double w(std::size_t k, std::size_t j) const { return weights[k * num_features + j]; }
};

LinearModel ZeroModel(std::vector<std::string> labels, std::size_t num_features);

struct LogRegHyper {
  double lr = 0.5;
  int epochs = 50;
  double l2 = 1e-4;
  std::size_t batch_size = 0;  // 0: full batch
  std::uint64_t seed = 1;
};

struct LogRegGradient {
  double loss = 0.0;
  std::vector<double> weights;
  std::vector<double> bias;
};

// Mean cross-entropy plus (l2/2)*||W||^2 (bias unregularized) over the rows
// listed in `rows` (all rows when empty), with its exact gradient.
LogRegGradient LogRegLossAndGradient(const LinearModel &model,
                                     std::span<const SparseVector> features,
                                     std::span<const int> labels, double l2,
                                     std::span<const std::size_t> rows = {});

// Mini-batch gradient descent on the regularized loss. `losses` (if given)
// receives the full training loss after every epoch. Throws
// std::invalid_argument with fewer than two classes present, non-finite
// features, or out-of-range feature indices.
LinearModel TrainLogReg(std::span<const SparseVector> features, std::span<const int> labels,
                        std::vector<std::string> label_names, std::size_t num_features,
                        const LogRegHyper &hyper, std::vector<double> *losses = nullptr);

struct Prediction {
  std::size_t label = 0;
  std::vector<double> probabilities;
};

std::vector<double> Softmax(std::span<const double> logits);
// Throws std::invalid_argument on a feature index beyond the model.
Prediction Predict(const LinearModel &model, const SparseVector &x);
Prediction Predict(const LinearModel &model, std::span<const double> dense);

// <prefix>.json (labels, dims) + <prefix>.bin (weights then bias).
void SaveLinearModel(const LinearModel &model, const std::string &prefix);
LinearModel LoadLinearModel(const std::string &prefix);

}  // namespace disco

#endif  // DISCO_EMBED_H_
