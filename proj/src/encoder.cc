#include "disco/encoder.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "disco/blob.h"
#include "disco/dataset.h"
#include "disco/embed.h"

namespace disco {
namespace {

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <class Params, class Fn>
void VisitImpl(Params &p, Fn &&fn) {
  fn("embedding", p.embedding.data(), static_cast<std::size_t>(p.embedding.size()));
  fn("forward.input", p.forward.input.data(), static_cast<std::size_t>(p.forward.input.size()));
  fn("forward.recurrent", p.forward.recurrent.data(),
     static_cast<std::size_t>(p.forward.recurrent.size()));
  fn("forward.bias", p.forward.bias.data(), static_cast<std::size_t>(p.forward.bias.size()));
  fn("backward.input", p.backward.input.data(), static_cast<std::size_t>(p.backward.input.size()));
  fn("backward.recurrent", p.backward.recurrent.data(),
     static_cast<std::size_t>(p.backward.recurrent.size()));
  fn("backward.bias", p.backward.bias.data(), static_cast<std::size_t>(p.backward.bias.size()));
  fn("proj.weight", p.proj_weight.data(), static_cast<std::size_t>(p.proj_weight.size()));
  fn("proj.bias", p.proj_bias.data(), static_cast<std::size_t>(p.proj_bias.size()));
  fn("out.weight", p.out_weight.data(), static_cast<std::size_t>(p.out_weight.size()));
  fn("out.bias", p.out_bias.data(), static_cast<std::size_t>(p.out_bias.size()));
}

LstmTrace RunLstm(std::vector<int> ids, const LstmWeights &w, const MatrixXd &embedding) {
  const Eigen::Index h = w.recurrent.cols();
  const Eigen::Index T = static_cast<Eigen::Index>(ids.size());
  LstmTrace tr;
  tr.gates.resize(4 * h, T);
  tr.cells.resize(h, T);
  tr.hiddens.resize(h, T);
  VectorXd h_prev = VectorXd::Zero(h);
  VectorXd c_prev = VectorXd::Zero(h);
  VectorXd a(4 * h);
  for (Eigen::Index s = 0; s < T; ++s) {
    a.noalias() = w.input * embedding.col(ids[s]);
    a.noalias() += w.recurrent * h_prev;
    a += w.bias;
    for (Eigen::Index r = 0; r < h; ++r) {
      a[r] = Sigmoid(a[r]);
      a[h + r] = Sigmoid(a[h + r]);
      a[2 * h + r] = std::tanh(a[2 * h + r]);
      a[3 * h + r] = Sigmoid(a[3 * h + r]);
    }
    tr.gates.col(s) = a;
    VectorXd c = a.segment(h, h).cwiseProduct(c_prev) + a.head(h).cwiseProduct(a.segment(2 * h, h));
    VectorXd hs = a.tail(h).cwiseProduct(c.array().tanh().matrix());
    tr.cells.col(s) = c;
    tr.hiddens.col(s) = hs;
    c_prev = std::move(c);
    h_prev = std::move(hs);
  }
  tr.ids = std::move(ids);
  return tr;
}

// Backpropagates dH (h x T, processing order) through one direction.
void BackpropLstm(const LstmTrace &tr, const MatrixXd &dH, const LstmWeights &w,
                  LstmWeights &g, MatrixXd &d_embedding, const MatrixXd &embedding) {
  const Eigen::Index h = w.recurrent.cols();
  const Eigen::Index T = tr.hiddens.cols();
  VectorXd dh_next = VectorXd::Zero(h);
  VectorXd dc_next = VectorXd::Zero(h);
  VectorXd da(4 * h);
  const VectorXd zero = VectorXd::Zero(h);
  for (Eigen::Index s = T - 1; s >= 0; --s) {
    const auto gates = tr.gates.col(s);
    const VectorXd c = tr.cells.col(s);
    const VectorXd c_prev = s > 0 ? VectorXd(tr.cells.col(s - 1)) : zero;
    const VectorXd h_prev = s > 0 ? VectorXd(tr.hiddens.col(s - 1)) : zero;
    const VectorXd dh = dH.col(s) + dh_next;
    for (Eigen::Index r = 0; r < h; ++r) {
      const double i = gates[r], f = gates[h + r], gg = gates[2 * h + r], o = gates[3 * h + r];
      const double tc = std::tanh(c[r]);
      const double d_o = dh[r] * tc;
      const double dc = dc_next[r] + dh[r] * o * (1.0 - tc * tc);
      da[r] = dc * gg * i * (1.0 - i);
      da[h + r] = dc * c_prev[r] * f * (1.0 - f);
      da[2 * h + r] = dc * i * (1.0 - gg * gg);
      da[3 * h + r] = d_o * o * (1.0 - o);
      dc_next[r] = dc * f;
    }
    const int id = tr.ids[s];
    g.input.noalias() += da * embedding.col(id).transpose();
    g.recurrent.noalias() += da * h_prev.transpose();
    g.bias += da;
    d_embedding.col(id).noalias() += w.input.transpose() * da;
    dh_next.noalias() = w.recurrent.transpose() * da;
  }
}

void BackpropSentence(const SentenceTrace &tr, const VectorXd &d_pooled,
                      const EncoderParams &params, EncoderParams &grad) {
  const Eigen::Index h = static_cast<Eigen::Index>(params.hidden());
  const Eigen::Index T = tr.states.cols();
  MatrixXd d_fwd = MatrixXd::Zero(h, T);
  MatrixXd d_bwd = MatrixXd::Zero(h, T);
  for (Eigen::Index r = 0; r < 2 * h; ++r) {
    const int t = tr.argmax[r];
    if (r < h) {
      d_fwd(r, t) += d_pooled[r];
    } else {
      d_bwd(r - h, T - 1 - t) += d_pooled[r];
    }
  }
  BackpropLstm(tr.forward, d_fwd, params.forward, grad.forward, grad.embedding, params.embedding);
  BackpropLstm(tr.backward, d_bwd, params.backward, grad.backward, grad.embedding,
               params.embedding);
}

void CheckIds(std::span<const int> ids, const EncoderParams &params) {
  if (ids.empty()) throw std::invalid_argument("cannot encode an empty sentence");
  for (int id : ids) {
    if (id < 0 || id >= params.embedding.cols()) {
      throw std::invalid_argument("word id " + std::to_string(id) + " outside the vocabulary");
    }
  }
}

void Uniform(MatrixXd &m, double scale, SplitMix64 &rng) {
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = (2.0 * rng.Uniform() - 1.0) * scale;
}

double LogSumExp(const VectorXd &z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

}  // namespace

WordVocab::WordVocab() : words_{std::string(kUnkToken)} { ids_[words_[0]] = kUnk; }

WordVocab WordVocab::Build(std::span<const std::string> texts, std::size_t min_freq,
                           std::size_t cap) {
  std::map<std::string, std::size_t> freq;
  for (const auto &t : texts) {
    for (auto &w : Tokenize(t)) ++freq[w];
  }
  std::vector<std::pair<std::string, std::size_t>> items;
  for (auto &[w, c] : freq) {
    if (c >= min_freq && w != kUnkToken) items.emplace_back(w, c);
  }
  std::stable_sort(items.begin(), items.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  if (items.size() > cap) items.resize(cap);
  std::vector<std::string> words{std::string(kUnkToken)};
  for (auto &[w, c] : items) words.push_back(w);
  return FromWords(std::move(words));
}

WordVocab WordVocab::FromWords(std::vector<std::string> words) {
  if (words.empty() || words[0] != kUnkToken) {
    throw std::invalid_argument("vocabulary must start with " + std::string(kUnkToken));
  }
  WordVocab v;
  v.words_ = std::move(words);
  v.ids_.clear();
  for (std::size_t i = 0; i < v.words_.size(); ++i) v.ids_.emplace(v.words_[i], static_cast<int>(i));
  return v;
}

int WordVocab::Id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> WordVocab::Ids(std::string_view text) const {
  std::vector<int> out;
  for (const auto &w : Tokenize(text)) out.push_back(Id(w));
  return out;
}

std::uint64_t WordVocab::Hash() const {
  std::string joined;
  for (const auto &w : words_) {
    joined += w;
    joined += '\n';
  }
  return Fnv1a64(joined);
}

EncoderDims EncoderParams::dims() const {
  return EncoderDims{static_cast<std::size_t>(embedding.cols()), embed_dim(), hidden(),
                     static_cast<std::size_t>(proj_bias.size()), num_classes()};
}

EncoderParams EncoderParams::ZerosLike() const {
  EncoderParams z;
  z.train_embeddings = train_embeddings;
  z.embedding = MatrixXd::Zero(embedding.rows(), embedding.cols());
  for (auto [dst, src] : {std::pair{&z.forward, &forward}, std::pair{&z.backward, &backward}}) {
    dst->input = MatrixXd::Zero(src->input.rows(), src->input.cols());
    dst->recurrent = MatrixXd::Zero(src->recurrent.rows(), src->recurrent.cols());
    dst->bias = VectorXd::Zero(src->bias.size());
  }
  z.proj_weight = MatrixXd::Zero(proj_weight.rows(), proj_weight.cols());
  z.proj_bias = VectorXd::Zero(proj_bias.size());
  z.out_weight = MatrixXd::Zero(out_weight.rows(), out_weight.cols());
  z.out_bias = VectorXd::Zero(out_bias.size());
  return z;
}

std::size_t EncoderParams::NumValues() const {
  std::size_t n = 0;
  VisitTensors(*this, [&](const char *, const double *, std::size_t size) { n += size; });
  return n;
}

void VisitTensors(EncoderParams &params,
                  const std::function<void(const char *, double *, std::size_t)> &fn) {
  VisitImpl(params, fn);
}

void VisitTensors(const EncoderParams &params,
                  const std::function<void(const char *, const double *, std::size_t)> &fn) {
  VisitImpl(params, fn);
}

EncoderParams InitParams(const EncoderDims &dims, std::uint64_t seed) {
  if (dims.vocab == 0 || dims.embed == 0 || dims.hidden == 0 || dims.classes < 2) {
    throw std::invalid_argument("encoder dimensions must be positive with >= 2 classes");
  }
  const auto e = static_cast<Eigen::Index>(dims.embed);
  const auto h = static_cast<Eigen::Index>(dims.hidden);
  const auto p = static_cast<Eigen::Index>(dims.projection());
  const auto k = static_cast<Eigen::Index>(dims.classes);
  SplitMix64 rng(seed);
  EncoderParams params;
  params.embedding.resize(e, static_cast<Eigen::Index>(dims.vocab));
  Uniform(params.embedding, 1.0, rng);
  const double lstm_scale = 1.0 / std::sqrt(static_cast<double>(h));
  for (LstmWeights *w : {&params.forward, &params.backward}) {
    w->input.resize(4 * h, e);
    w->recurrent.resize(4 * h, h);
    w->bias = VectorXd::Zero(4 * h);
    Uniform(w->input, lstm_scale, rng);
    Uniform(w->recurrent, lstm_scale, rng);
    w->bias.segment(h, h).setOnes();
  }
  params.proj_weight.resize(p, 10 * h);
  Uniform(params.proj_weight, 1.0 / std::sqrt(10.0 * static_cast<double>(h)), rng);
  params.proj_bias = VectorXd::Zero(p);
  params.out_weight.resize(k, p);
  Uniform(params.out_weight, 1.0 / std::sqrt(static_cast<double>(p)), rng);
  params.out_bias = VectorXd::Zero(k);
  return params;
}

SentenceTrace EncodeTraced(std::span<const int> ids, const EncoderParams &params) {
  CheckIds(ids, params);
  SentenceTrace tr;
  std::vector<int> fwd(ids.begin(), ids.end());
  std::vector<int> bwd(ids.rbegin(), ids.rend());
  tr.forward = RunLstm(std::move(fwd), params.forward, params.embedding);
  tr.backward = RunLstm(std::move(bwd), params.backward, params.embedding);
  const Eigen::Index h = static_cast<Eigen::Index>(params.hidden());
  const Eigen::Index T = static_cast<Eigen::Index>(ids.size());
  tr.states.resize(2 * h, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    tr.states.col(t).head(h) = tr.forward.hiddens.col(t);
    tr.states.col(t).tail(h) = tr.backward.hiddens.col(T - 1 - t);
  }
  tr.pooled.resize(2 * h);
  tr.argmax.assign(static_cast<std::size_t>(2 * h), 0);
  for (Eigen::Index r = 0; r < 2 * h; ++r) {
    int best = 0;
    for (Eigen::Index t = 1; t < T; ++t) {
      if (tr.states(r, t) > tr.states(r, best)) best = static_cast<int>(t);
    }
    tr.argmax[r] = best;
    tr.pooled[r] = tr.states(r, best);
  }
  return tr;
}

VectorXd Encode(std::span<const int> ids, const EncoderParams &params) {
  return EncodeTraced(ids, params).pooled;
}

PairFeatures MakePairFeatures(const VectorXd &s1, const VectorXd &s2) {
  if (s1.size() != s2.size()) {
    throw std::invalid_argument("sentence vectors differ in dimension");
  }
  PairFeatures f;
  f.s1 = s1;
  f.s2 = s2;
  f.avg = 0.5 * (s1 + s2);
  f.sub = s1 - s2;
  f.mul = s1.cwiseProduct(s2);
  const Eigen::Index d = s1.size();
  f.combined.resize(5 * d);
  f.combined << f.s1, f.s2, f.avg, f.sub, f.mul;
  return f;
}

VectorXd Logits(const VectorXd &combined, const EncoderParams &params) {
  if (combined.size() != params.proj_weight.cols()) {
    throw std::invalid_argument("pair feature width " + std::to_string(combined.size()) +
                                " does not match projection input " +
                                std::to_string(params.proj_weight.cols()));
  }
  VectorXd z = params.proj_weight * combined + params.proj_bias;
  return params.out_weight * z + params.out_bias;
}

VectorXd Classify(const VectorXd &combined, const EncoderParams &params) {
  VectorXd logits = Logits(combined, params);
  const double lse = LogSumExp(logits);
  return (logits.array() - lse).exp().matrix();
}

LossAndGrad LossAndGradients(std::span<const PairExample> batch, const EncoderParams &params) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  LossAndGrad out;
  out.grad = params.ZerosLike();
  EncoderParams &g = out.grad;
  const double inv = 1.0 / static_cast<double>(batch.size());
  const Eigen::Index d = static_cast<Eigen::Index>(2 * params.hidden());
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const PairExample &ex = batch[n];
    if (ex.label < 0 || ex.label >= params.out_bias.size()) {
      throw std::invalid_argument("label out of range in example " + std::to_string(n));
    }
    const SentenceTrace t1 = EncodeTraced(ex.s1, params);
    const SentenceTrace t2 = EncodeTraced(ex.s2, params);
    const PairFeatures pf = MakePairFeatures(t1.pooled, t2.pooled);
    const VectorXd z = params.proj_weight * pf.combined + params.proj_bias;
    const VectorXd logits = params.out_weight * z + params.out_bias;
    const double lse = LogSumExp(logits);
    const double loss = lse - logits[ex.label];
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite loss at example " + std::to_string(n), n);
    }
    out.loss += loss * inv;

    VectorXd dlogits = (logits.array() - lse).exp().matrix() * inv;
    dlogits[ex.label] -= inv;
    g.out_weight.noalias() += dlogits * z.transpose();
    g.out_bias += dlogits;
    const VectorXd dz = params.out_weight.transpose() * dlogits;
    g.proj_weight.noalias() += dz * pf.combined.transpose();
    g.proj_bias += dz;
    const VectorXd dS = params.proj_weight.transpose() * dz;

    const auto d1 = dS.segment(0, d), d2 = dS.segment(d, d), davg = dS.segment(2 * d, d),
               dsub = dS.segment(3 * d, d), dmul = dS.segment(4 * d, d);
    const VectorXd ds1 = d1 + 0.5 * davg + dsub + dmul.cwiseProduct(pf.s2);
    const VectorXd ds2 = d2 + 0.5 * davg - dsub + dmul.cwiseProduct(pf.s1);
    BackpropSentence(t1, ds1, params, g);
    BackpropSentence(t2, ds2, params, g);
  }
  return out;
}

double Loss(std::span<const PairExample> batch, const EncoderParams &params) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  double total = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const PairExample &ex = batch[n];
    const PairFeatures pf = MakePairFeatures(Encode(ex.s1, params), Encode(ex.s2, params));
    const VectorXd logits = Logits(pf.combined, params);
    const double loss = LogSumExp(logits) - logits[ex.label];
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite loss at example " + std::to_string(n), n);
    }
    total += loss;
  }
  return total / static_cast<double>(batch.size());
}

GradCheckResult GradCheck(const EncoderParams &params, std::span<const PairExample> batch,
                          double epsilon, std::size_t max_coords, std::uint64_t seed) {
  const LossAndGrad analytic = LossAndGradients(batch, params);
  struct Coord {
    std::size_t tensor;
    std::size_t offset;
  };
  std::vector<Coord> coords;
  std::vector<std::string> names;
  std::vector<const double *> grads;
  VisitTensors(analytic.grad, [&](const char *name, const double *data, std::size_t size) {
    for (std::size_t k = 0; k < size; ++k) coords.push_back({names.size(), k});
    names.emplace_back(name);
    grads.push_back(data);
  });
  if (max_coords > 0 && max_coords < coords.size()) {
    auto perm = SeededPermutation(coords.size(), seed);
    perm.resize(max_coords);
    std::sort(perm.begin(), perm.end());
    std::vector<Coord> picked;
    for (std::size_t i : perm) picked.push_back(coords[i]);
    coords = std::move(picked);
  }

  EncoderParams work = params;
  std::vector<double *> values;
  VisitTensors(work, [&](const char *, double *data, std::size_t) { values.push_back(data); });

  GradCheckResult result;
  result.coordinates = coords.size();
  for (const Coord &c : coords) {
    double &v = values[c.tensor][c.offset];
    const double saved = v;
    v = saved + epsilon;
    const double plus = Loss(batch, work);
    v = saved - epsilon;
    const double minus = Loss(batch, work);
    v = saved;
    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double ga = grads[c.tensor][c.offset];
    const double rel =
        std::abs(ga - numeric) / std::max({std::abs(ga), std::abs(numeric), 1e-12});
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_tensor = names[c.tensor] + "[" + std::to_string(c.offset) + "]";
    }
  }
  return result;
}

double GradientNorm(const EncoderParams &grad, bool include_embeddings) {
  double sq = 0.0;
  VisitTensors(grad, [&](const char *name, const double *data, std::size_t size) {
    if (!include_embeddings && std::string_view(name) == "embedding") return;
    for (std::size_t k = 0; k < size; ++k) sq += data[k] * data[k];
  });
  return std::sqrt(sq);
}

double ClipGradients(EncoderParams &grad, double max_norm, bool include_embeddings) {
  const double norm = GradientNorm(grad, include_embeddings);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    VisitTensors(grad, [&](const char *name, double *data, std::size_t size) {
      if (!include_embeddings && std::string_view(name) == "embedding") return;
      for (std::size_t k = 0; k < size; ++k) data[k] *= scale;
    });
  }
  return norm;
}

void TrainConfig::Validate() const {
  if (!(initial_lr > 0) || !(anneal_factor > 0) || !(grad_clip_norm > 0) || max_epochs <= 0 ||
      patience <= 0 || batch_size == 0 || dims.hidden == 0 || dims.embed == 0) {
    throw std::invalid_argument("training configuration values must be positive");
  }
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"initial_lr", initial_lr},
          {"anneal_factor", anneal_factor},
          {"grad_clip_norm", grad_clip_norm},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"batch_size", batch_size},
          {"seed", seed},
          {"hidden", dims.hidden},
          {"embed", dims.embed},
          {"proj", dims.projection()}};
}

std::size_t PredictLabel(const PairExample &example, const EncoderParams &params) {
  const PairFeatures pf = MakePairFeatures(Encode(example.s1, params), Encode(example.s2, params));
  VectorXd logits = Logits(pf.combined, params);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[best]) best = k;
  }
  return static_cast<std::size_t>(best);
}

double Accuracy(std::span<const PairExample> examples, const EncoderParams &params) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto &ex : examples) {
    if (static_cast<int>(PredictLabel(ex, params)) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

TrainResult Train(std::span<const PairExample> train, std::span<const PairExample> valid,
                  const TrainConfig &config,
                  const std::function<void(const EpochRecord &)> &on_epoch) {
  return Train(train, valid, config, InitParams(config.dims, config.seed), on_epoch);
}

TrainResult Train(std::span<const PairExample> train, std::span<const PairExample> valid,
                  const TrainConfig &config, EncoderParams init,
                  const std::function<void(const EpochRecord &)> &on_epoch) {
  config.Validate();
  if (train.empty() || valid.empty()) {
    throw std::invalid_argument("training needs non-empty train and validation splits");
  }
  TrainResult result;
  EncoderParams params = std::move(init);
  const bool emb = params.train_embeddings;
  double lr = config.initial_lr;
  std::optional<double> prev_acc;
  double best_acc = -1.0;
  int stale = 0;
  const std::size_t n = train.size();
  std::vector<PairExample> batch;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto order = SeededPermutation(n, config.seed * 0x9E3779B97F4A7C15ULL + epoch);
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_no) {
      batch.clear();
      for (std::size_t k = start; k < std::min(n, start + config.batch_size); ++k) {
        batch.push_back(train[order[k]]);
      }
      LossAndGrad lg;
      try {
        lg = LossAndGradients(batch, params);
      } catch (const NumericError &e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(batch_no) + ": " + e.what(),
                           e.example() ? std::optional<std::size_t>(order[start + *e.example()])
                                       : std::nullopt);
      }
      ClipGradients(lg.grad, config.grad_clip_norm, emb);
      std::vector<double *> p_vals;
      VisitTensors(params, [&](const char *, double *data, std::size_t) { p_vals.push_back(data); });
      std::size_t t = 0;
      VisitTensors(lg.grad, [&](const char *name, const double *data, std::size_t size) {
        double *dst = p_vals[t++];
        if (!emb && std::string_view(name) == "embedding") return;
        for (std::size_t k = 0; k < size; ++k) dst[k] -= lr * data[k];
      });
      loss_sum += lg.loss * static_cast<double>(batch.size());
    }
    EpochRecord rec{epoch, lr, loss_sum / static_cast<double>(n), Accuracy(valid, params)};
    if (!std::isfinite(rec.train_loss)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    }
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.val_acc > best_acc) {
      best_acc = rec.val_acc;
      result.params = params;
      result.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    if (prev_acc && rec.val_acc < *prev_acc) lr /= config.anneal_factor;
    prev_acc = rec.val_acc;
    if (stale >= config.patience) break;
  }
  result.best_val_acc = best_acc;
  return result;
}

void WriteEpochLogCsv(std::ostream &out, std::span<const EpochRecord> log) {
  out << "epoch,lr,train_loss,val_acc\n";
  char buf[128];
  for (const auto &r : log) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.epoch, r.lr, r.train_loss,
                  r.val_acc);
    out << buf;
  }
}

void SaveCheckpoint(const std::string &prefix, const Checkpoint &ckpt) {
  const EncoderDims dims = ckpt.params.dims();
  nlohmann::json header = {{"format", "disco-encoder-checkpoint"},
                           {"version", 1},
                           {"dims",
                            {{"vocab", dims.vocab},
                             {"embed", dims.embed},
                             {"hidden", dims.hidden},
                             {"proj", dims.proj},
                             {"classes", dims.classes}}},
                           {"train_embeddings", ckpt.params.train_embeddings},
                           {"vocab_hash", HexDigest(ckpt.vocab.Hash())},
                           {"vocab", ckpt.vocab.words()},
                           {"labels", ckpt.labels},
                           {"config", ckpt.config},
                           {"tensor_order",
                            {"embedding", "forward.input", "forward.recurrent", "forward.bias",
                             "backward.input", "backward.recurrent", "backward.bias",
                             "proj.weight", "proj.bias", "out.weight", "out.bias"}},
                           {"blob", "float64-le, column-major per tensor"}};
  std::ofstream js(prefix + ".json");
  js << header.dump(2) << '\n';
  std::ofstream bin(prefix + ".bin", std::ios::binary);
  VisitTensors(ckpt.params, [&](const char *, const double *data, std::size_t size) {
    WriteF64Blob(bin, std::span<const double>(data, size));
  });
  if (!js || !bin) throw std::runtime_error("failed to write checkpoint " + prefix);
}

Checkpoint LoadCheckpoint(const std::string &prefix) {
  std::ifstream js(prefix + ".json");
  if (!js) throw std::runtime_error("cannot open " + prefix + ".json");
  const auto header = nlohmann::json::parse(js);
  Checkpoint ckpt;
  const auto &d = header.at("dims");
  EncoderDims dims{d.at("vocab").get<std::size_t>(), d.at("embed").get<std::size_t>(),
                   d.at("hidden").get<std::size_t>(), d.at("proj").get<std::size_t>(),
                   d.at("classes").get<std::size_t>()};
  ckpt.params = InitParams(dims, 0);
  ckpt.params.train_embeddings = header.value("train_embeddings", false);
  ckpt.vocab = WordVocab::FromWords(header.at("vocab").get<std::vector<std::string>>());
  if (HexDigest(ckpt.vocab.Hash()) != header.at("vocab_hash").get<std::string>()) {
    throw std::runtime_error("checkpoint vocabulary hash mismatch");
  }
  ckpt.labels = header.at("labels").get<std::vector<std::string>>();
  ckpt.config = header.value("config", nlohmann::json::object());
  std::ifstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + prefix + ".bin");
  VisitTensors(ckpt.params, [&](const char *, double *data, std::size_t size) {
    auto values = ReadF64Blob(bin, size);
    std::copy(values.begin(), values.end(), data);
  });
  return ckpt;
}

std::size_t LoadEmbeddings(std::istream &in, const WordVocab &vocab, EncoderParams &params) {
  const EmbeddingTable table = EmbeddingTable::Load(in);
  if (table.size() > 0 && table.dim() != params.embed_dim()) {
    throw std::runtime_error("embedding file has dimension " + std::to_string(table.dim()) +
                             ", encoder expects " + std::to_string(params.embed_dim()));
  }
  std::size_t filled = 0;
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    if (const double *v = table.Find(vocab.words()[id])) {
      params.embedding.col(static_cast<Eigen::Index>(id)) =
          Eigen::Map<const VectorXd>(v, static_cast<Eigen::Index>(table.dim()));
      ++filled;
    }
  }
  return filled;
}

}  // namespace disco
