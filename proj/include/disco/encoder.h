// Bidirectional LSTM sentence encoder with temporal max-pooling, the pair
// feature combination [s1, s2, (s1+s2)/2, s1-s2, s1*s2], and a two-layer
// affine softmax classifier. Everything is double precision; gradients come
// from hand-written backpropagation through time.

#ifndef DISCO_ENCODER_H_
#define DISCO_ENCODER_H_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace disco {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string &what, std::optional<std::size_t> example = {})
      : std::runtime_error(what), example_(example) {}
  const std::optional<std::size_t> &example() const { return example_; }

 private:
  std::optional<std::size_t> example_;
};

// Word -> id map; id 0 is reserved for unknown words.
class WordVocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  WordVocab();
  // Words seen at least `min_freq` times, most frequent first (ties
  // lexicographic), at most `cap` entries besides <unk>.
  static WordVocab Build(std::span<const std::string> texts, std::size_t min_freq = 1,
                         std::size_t cap = 100000);
  static WordVocab FromWords(std::vector<std::string> words);  // words[0] must be <unk>

  int Id(std::string_view word) const;
  std::vector<int> Ids(std::string_view text) const;  // whitespace tokens
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string> &words() const { return words_; }
  std::uint64_t Hash() const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

struct EncoderDims {
  std::size_t vocab = 1;
  std::size_t embed = 32;
  std::size_t hidden = 64;
  std::size_t proj = 0;  // 0: 2 * hidden
  std::size_t classes = 2;

  std::size_t projection() const { return proj == 0 ? 2 * hidden : proj; }
};

// Gate rows are stacked input, forget, candidate, output (each `hidden` rows).
struct LstmWeights {
  MatrixXd input;      // 4h x e
  MatrixXd recurrent;  // 4h x h
  VectorXd bias;       // 4h
};

struct EncoderParams {
  MatrixXd embedding;  // e x V, one column per word id
  bool train_embeddings = false;
  LstmWeights forward;
  LstmWeights backward;
  MatrixXd proj_weight;  // p x 10h
  VectorXd proj_bias;
  MatrixXd out_weight;  // K x p
  VectorXd out_bias;

  std::size_t hidden() const { return static_cast<std::size_t>(forward.recurrent.cols()); }
  std::size_t embed_dim() const { return static_cast<std::size_t>(embedding.rows()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(out_bias.size()); }
  EncoderDims dims() const;

  // Same shapes, all zeros.
  EncoderParams ZerosLike() const;
  std::size_t NumValues() const;
};

// Calls fn(name, data, size) for every tensor in a fixed order.
void VisitTensors(EncoderParams &params,
                  const std::function<void(const char *, double *, std::size_t)> &fn);
void VisitTensors(const EncoderParams &params,
                  const std::function<void(const char *, const double *, std::size_t)> &fn);

// LSTM weights uniform in +-1/sqrt(h) with forget-gate bias 1; embeddings
// uniform in +-1; affine layers uniform in +-1/sqrt(fan_in), zero bias.
EncoderParams InitParams(const EncoderDims &dims, std::uint64_t seed);

// Per-timestep LSTM state for one direction, indexed by processing step.
struct LstmTrace {
  std::vector<int> ids;  // input ids in processing order
  MatrixXd gates;        // 4h x T, post-activation
  MatrixXd cells;        // h x T
  MatrixXd hiddens;      // h x T
};

struct SentenceTrace {
  LstmTrace forward;
  LstmTrace backward;      // processed w_T .. w_1
  MatrixXd states;         // 2h x T, column t = [fwd h_t; bwd h_t]
  VectorXd pooled;         // 2h
  std::vector<int> argmax; // winning timestep per coordinate (lowest on ties)
};

// Throws std::invalid_argument on an empty sentence or out-of-range id.
VectorXd Encode(std::span<const int> ids, const EncoderParams &params);
SentenceTrace EncodeTraced(std::span<const int> ids, const EncoderParams &params);

struct PairFeatures {
  VectorXd s1, s2, avg, sub, mul;
  VectorXd combined;  // [s1, s2, avg, sub, mul]
};

// Throws std::invalid_argument on a dimension mismatch.
PairFeatures MakePairFeatures(const VectorXd &s1, const VectorXd &s2);

// Affine projection, affine output layer, softmax.
VectorXd Classify(const VectorXd &combined, const EncoderParams &params);
VectorXd Logits(const VectorXd &combined, const EncoderParams &params);

struct PairExample {
  std::vector<int> s1;
  std::vector<int> s2;
  int label = 0;
};

struct LossAndGrad {
  double loss = 0.0;  // mean cross-entropy
  EncoderParams grad;
};

// Mean loss over the batch and its gradient w.r.t. every tensor (embeddings
// included, whether or not they are trained). Throws NumericError naming the
// first example whose loss is not finite.
LossAndGrad LossAndGradients(std::span<const PairExample> batch, const EncoderParams &params);
double Loss(std::span<const PairExample> batch, const EncoderParams &params);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_tensor;
};

// Central differences on every coordinate, or on a seeded sample of
// `max_coords` coordinates when that is smaller than the parameter count.
// Relative error is |ga - gn| / max(|ga|, |gn|, 1e-12).
GradCheckResult GradCheck(const EncoderParams &params, std::span<const PairExample> batch,
                          double epsilon = 1e-5, std::size_t max_coords = 0,
                          std::uint64_t seed = 1);

// Global L2 norm over every trainable tensor.
double GradientNorm(const EncoderParams &grad, bool include_embeddings);
// Scales all gradients by max_norm / norm when norm > max_norm. Returns the
// norm before clipping.
double ClipGradients(EncoderParams &grad, double max_norm, bool include_embeddings);

struct TrainConfig {
  double initial_lr = 0.1;
  double anneal_factor = 5.0;
  double grad_clip_norm = 5.0;
  int max_epochs = 20;
  int patience = 3;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  EncoderDims dims;

  void Validate() const;
  nlohmann::json ToJson() const;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;  // rate used during the epoch
  double train_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  EncoderParams params;  // from the best validation epoch
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_val_acc = 0.0;
};

// Plain SGD with global-norm clipping. After each epoch the learning rate is
// divided by anneal_factor if validation accuracy dropped below the previous
// epoch's; training stops after max_epochs or `patience` epochs without a new
// best. Throws NumericError on divergence.
TrainResult Train(std::span<const PairExample> train, std::span<const PairExample> valid,
                  const TrainConfig &config,
                  const std::function<void(const EpochRecord &)> &on_epoch = {});
TrainResult Train(std::span<const PairExample> train, std::span<const PairExample> valid,
                  const TrainConfig &config, EncoderParams init,
                  const std::function<void(const EpochRecord &)> &on_epoch = {});

std::size_t PredictLabel(const PairExample &example, const EncoderParams &params);
double Accuracy(std::span<const PairExample> examples, const EncoderParams &params);

// epoch,lr,train_loss,val_acc
void WriteEpochLogCsv(std::ostream &out, std::span<const EpochRecord> log);

// <prefix>.json header (dims, vocab, vocab hash, labels, config) and
// <prefix>.bin little-endian float64 tensors in VisitTensors order.
struct Checkpoint {
  EncoderParams params;
  WordVocab vocab;
  std::vector<std::string> labels;
  nlohmann::json config;
};
void SaveCheckpoint(const std::string &prefix, const Checkpoint &ckpt);
Checkpoint LoadCheckpoint(const std::string &prefix);

// Reads an embedding table file into the embedding matrix for words of
// `vocab`; words missing from the file keep their current vectors. Returns the
// number of rows filled.
std::size_t LoadEmbeddings(std::istream &in, const WordVocab &vocab, EncoderParams &params);

}  // namespace disco

#endif  // DISCO_ENCODER_H_
