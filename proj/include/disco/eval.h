// Classification metrics, confusion analysis and a generic labeled-pair task
// harness.

#ifndef DISCO_EVAL_H_
#define DISCO_EVAL_H_

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "disco/dataset.h"
#include "disco/embed.h"
#include "disco/encoder.h"
#include "json.hpp"

namespace disco {

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold count
};

struct PrfReport {
  std::vector<ClassMetrics> classes;  // lexicographic by label
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
};

// Classes are the union of gold and predicted labels. Undefined precision or
// recall counts as 0. Throws std::invalid_argument on a length mismatch.
PrfReport PerClassPrf(std::span<const std::string> gold, std::span<const std::string> pred);

struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<double>> counts;  // rows actual, columns predicted

  std::size_t size() const { return classes.size(); }
  double Total() const;
  double Trace() const;
  std::vector<std::vector<double>> RowNormalized() const;
  // log(row proportion + delta).
  std::vector<std::vector<double>> LogDisplay(double delta = 1e-4) const;
};

// Labels ordered by ascending frequency, ties lexicographic.
std::vector<std::string> OrderByAscendingFrequency(const std::map<std::string, std::size_t> &freq);

// Throws std::invalid_argument when a label is not in `classes` or the
// sequences differ in length.
ConfusionMatrix Confusion(std::span<const std::string> gold, std::span<const std::string> pred,
                          std::vector<std::string> classes);

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

// Ordinary least squares y = a + b x. Throws AnalysisError when x or y is
// constant or fewer than 3 points are given.
LinearFit FitLine(std::span<const double> x, std::span<const double> y);

struct ResidualAnalysis {
  LinearFit frequency_fit;  // unbalanced cell ~ log(freq of predicted class)
  LinearFit residual_fit;   // balanced cell ~ step-1 residual
  double r2 = 0.0;          // residual_fit.r2
  std::size_t cells = 0;
};

// Works on row-normalized proportions. Off-diagonal cells only unless
// `include_diagonal`. Throws AnalysisError on mismatched classes,
// non-positive frequencies, or a degenerate regression.
ResidualAnalysis FrequencyResidualAnalysis(const ConfusionMatrix &unbalanced,
                                           const ConfusionMatrix &balanced,
                                           const std::map<std::string, double> &class_freqs,
                                           bool include_diagonal = false);

enum class Featurizer { kNgram, kSif, kEncoder };
enum class Classifier { kLogReg, kMajority };

struct PairTaskOptions {
  Featurizer featurizer = Featurizer::kNgram;
  Classifier classifier = Classifier::kLogReg;
  std::vector<int> orders = {1, 2, 3};
  std::size_t vocab_cap = 100000;
  const EmbeddingTable *embeddings = nullptr;  // required for kSif
  const Checkpoint *encoder = nullptr;         // required for kEncoder
  LogRegHyper hyper;
};

struct PairTaskReport {
  PrfReport metrics;
  ConfusionMatrix confusion;
  double majority_accuracy = 0.0;
  std::string majority_label;
  std::size_t unseen_label_errors = 0;  // test labels absent from training
  std::vector<std::string> gold;
  std::vector<std::string> predicted;
  std::vector<std::string> train_labels;
};

// Trains on `train`, predicts `test`. The confusion matrix orders classes by
// ascending training frequency; test-only labels are appended after them.
PairTaskReport PairTaskEval(std::span<const PairRecord> train, std::span<const PairRecord> test,
                            const PairTaskOptions &options);

// Feature rows for a pair list under a fitted featurizer.
struct FittedFeaturizer {
  Featurizer kind = Featurizer::kNgram;
  Vocabulary vocab;
  EmbeddingTable table;
  std::vector<double> direction;
  const Checkpoint *encoder = nullptr;

  std::size_t Dimension() const;
  SparseVector Features(const PairRecord &pair) const;
};
FittedFeaturizer FitFeaturizer(std::span<const PairRecord> train, const PairTaskOptions &options);

nlohmann::json PrfToJson(const PrfReport &report);
nlohmann::json ReportToJson(const PairTaskReport &report);
void WritePrfText(std::ostream &out, const PrfReport &report);
void WriteConfusionCsv(std::ostream &out, const ConfusionMatrix &cm);

}  // namespace disco

#endif  // DISCO_EVAL_H_
