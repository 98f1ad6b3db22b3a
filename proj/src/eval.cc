#include "disco/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace disco {

PrfReport PerClassPrf(std::span<const std::string> gold, std::span<const std::string> pred) {
  if (gold.size() != pred.size()) {
    throw std::invalid_argument("gold and predicted sequences differ in length");
  }
  std::set<std::string> labels(gold.begin(), gold.end());
  labels.insert(pred.begin(), pred.end());
  std::map<std::string, std::size_t> tp, fp, fn, support;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++support[gold[i]];
    if (gold[i] == pred[i]) {
      ++tp[gold[i]];
      ++correct;
    } else {
      ++fp[pred[i]];
      ++fn[gold[i]];
    }
  }
  PrfReport r;
  const double total = static_cast<double>(gold.size());
  r.accuracy = gold.empty() ? 0.0 : static_cast<double>(correct) / total;
  for (const auto &label : labels) {
    ClassMetrics m;
    m.label = label;
    m.support = support[label];
    const double t = static_cast<double>(tp[label]);
    const double p_den = t + static_cast<double>(fp[label]);
    const double r_den = t + static_cast<double>(fn[label]);
    m.precision = p_den > 0 ? t / p_den : 0.0;
    m.recall = r_den > 0 ? t / r_den : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    r.classes.push_back(m);
  }
  if (!r.classes.empty()) {
    const double k = static_cast<double>(r.classes.size());
    for (const auto &m : r.classes) {
      r.macro_precision += m.precision / k;
      r.macro_recall += m.recall / k;
      r.macro_f1 += m.f1 / k;
      if (total > 0) {
        const double w = static_cast<double>(m.support) / total;
        r.weighted_precision += w * m.precision;
        r.weighted_recall += w * m.recall;
        r.weighted_f1 += w * m.f1;
      }
    }
  }
  return r;
}

double ConfusionMatrix::Total() const {
  double t = 0.0;
  for (const auto &row : counts) {
    for (double c : row) t += c;
  }
  return t;
}

double ConfusionMatrix::Trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

std::vector<std::vector<double>> ConfusionMatrix::RowNormalized() const {
  auto out = counts;
  for (auto &row : out) {
    double s = 0.0;
    for (double c : row) s += c;
    if (s > 0) {
      for (double &c : row) c /= s;
    }
  }
  return out;
}

std::vector<std::vector<double>> ConfusionMatrix::LogDisplay(double delta) const {
  auto out = RowNormalized();
  for (auto &row : out) {
    for (double &c : row) c = std::log(c + delta);
  }
  return out;
}

std::vector<std::string> OrderByAscendingFrequency(const std::map<std::string, std::size_t> &freq) {
  std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto &a, const auto &b) { return a.second < b.second; });
  std::vector<std::string> out;
  for (auto &[label, n] : items) out.push_back(label);
  return out;
}

ConfusionMatrix Confusion(std::span<const std::string> gold, std::span<const std::string> pred,
                          std::vector<std::string> classes) {
  if (gold.size() != pred.size()) {
    throw std::invalid_argument("gold and predicted sequences differ in length");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < classes.size(); ++i) index.emplace(classes[i], i);
  ConfusionMatrix cm;
  cm.counts.assign(classes.size(), std::vector<double>(classes.size(), 0.0));
  auto find = [&](const std::string &label) {
    auto it = index.find(label);
    if (it == index.end()) throw std::invalid_argument("unknown label '" + label + "'");
    return it->second;
  };
  for (std::size_t i = 0; i < gold.size(); ++i) cm.counts[find(gold[i])][find(pred[i])] += 1.0;
  cm.classes = std::move(classes);
  return cm;
}

LinearFit FitLine(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw AnalysisError("regression inputs differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw AnalysisError("regression needs at least 3 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double scale_x = std::max(1.0, std::abs(mx));
  if (sxx <= 1e-24 * scale_x * scale_x * static_cast<double>(n)) {
    throw AnalysisError("degenerate design: regressor is constant");
  }
  if (syy == 0.0) throw AnalysisError("degenerate design: response is constant");
  LinearFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - fit.intercept - fit.slope * x[i];
    ss_res += e * e;
  }
  fit.r2 = 1.0 - ss_res / syy;
  return fit;
}

ResidualAnalysis FrequencyResidualAnalysis(const ConfusionMatrix &unbalanced,
                                           const ConfusionMatrix &balanced,
                                           const std::map<std::string, double> &class_freqs,
                                           bool include_diagonal) {
  if (unbalanced.classes != balanced.classes) {
    throw AnalysisError("confusion matrices have different class lists");
  }
  const auto &classes = unbalanced.classes;
  std::vector<double> log_freq;
  for (const auto &c : classes) {
    auto it = class_freqs.find(c);
    if (it == class_freqs.end() || !(it->second > 0)) {
      throw AnalysisError("missing or non-positive frequency for '" + c + "'");
    }
    log_freq.push_back(std::log(it->second));
  }
  const auto u = unbalanced.RowNormalized();
  const auto b = balanced.RowNormalized();
  std::vector<double> x, y_unbal, y_bal;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    for (std::size_t j = 0; j < classes.size(); ++j) {
      if (i == j && !include_diagonal) continue;
      x.push_back(log_freq[j]);
      y_unbal.push_back(u[i][j]);
      y_bal.push_back(b[i][j]);
    }
  }
  ResidualAnalysis out;
  out.cells = x.size();
  out.frequency_fit = FitLine(x, y_unbal);
  std::vector<double> residuals(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    residuals[k] = y_unbal[k] - out.frequency_fit.intercept - out.frequency_fit.slope * x[k];
  }
  out.residual_fit = FitLine(residuals, y_bal);
  out.r2 = out.residual_fit.r2;
  return out;
}

std::size_t FittedFeaturizer::Dimension() const {
  switch (kind) {
    case Featurizer::kNgram: return 2 * vocab.size();
    case Featurizer::kSif: return 2 * table.dim();
    case Featurizer::kEncoder: return 10 * encoder->params.hidden();
  }
  return 0;
}

SparseVector FittedFeaturizer::Features(const PairRecord &pair) const {
  switch (kind) {
    case Featurizer::kNgram:
      return ConcatPair(FeaturizeNgrams(pair.s1, vocab), FeaturizeNgrams(pair.s2, vocab),
                        static_cast<int>(vocab.size()));
    case Featurizer::kSif: {
      std::vector<std::vector<double>> v{SifEmbed(pair.s1, table), SifEmbed(pair.s2, table)};
      if (!direction.empty()) RemoveComponent(v, direction);
      std::vector<double> both = v[0];
      both.insert(both.end(), v[1].begin(), v[1].end());
      return DenseToSparse(both);
    }
    case Featurizer::kEncoder: {
      const auto &vocab_ = encoder->vocab;
      auto ids1 = vocab_.Ids(pair.s1);
      auto ids2 = vocab_.Ids(pair.s2);
      if (ids1.empty()) ids1.push_back(WordVocab::kUnk);
      if (ids2.empty()) ids2.push_back(WordVocab::kUnk);
      const auto pf = MakePairFeatures(Encode(ids1, encoder->params), Encode(ids2, encoder->params));
      return DenseToSparse(std::span<const double>(pf.combined.data(),
                                                   static_cast<std::size_t>(pf.combined.size())));
    }
  }
  return {};
}

FittedFeaturizer FitFeaturizer(std::span<const PairRecord> train, const PairTaskOptions &options) {
  FittedFeaturizer f;
  f.kind = options.featurizer;
  std::vector<std::string> texts;
  for (const auto &p : train) {
    texts.push_back(p.s1);
    texts.push_back(p.s2);
  }
  switch (options.featurizer) {
    case Featurizer::kNgram:
      f.vocab = Vocabulary::Build(texts, options.orders, options.vocab_cap);
      break;
    case Featurizer::kSif: {
      if (!options.embeddings) throw std::invalid_argument("SIF featurizer needs an embedding table");
      f.table = *options.embeddings;
      f.table.EstimateProbabilities(texts);
      f.direction = SifEmbedCorpus(texts, f.table).direction;
      break;
    }
    case Featurizer::kEncoder:
      if (!options.encoder) throw std::invalid_argument("encoder featurizer needs a checkpoint");
      f.encoder = options.encoder;
      break;
  }
  return f;
}

PairTaskReport PairTaskEval(std::span<const PairRecord> train, std::span<const PairRecord> test,
                            const PairTaskOptions &options) {
  if (train.empty()) throw std::invalid_argument("empty training file");
  PairTaskReport report;
  std::map<std::string, std::size_t> freq;
  for (const auto &p : train) ++freq[p.marker];
  for (const auto &[label, n] : freq) report.train_labels.push_back(label);
  report.majority_label = std::max_element(freq.begin(), freq.end(), [](const auto &a, const auto &b) {
                            return a.second < b.second;
                          })->first;

  std::map<std::string, int> label_id;
  for (std::size_t k = 0; k < report.train_labels.size(); ++k) {
    label_id[report.train_labels[k]] = static_cast<int>(k);
  }

  for (const auto &p : test) report.gold.push_back(p.marker);
  if (options.classifier == Classifier::kMajority || report.train_labels.size() < 2) {
    report.predicted.assign(test.size(), report.majority_label);
  } else {
    const FittedFeaturizer featurizer = FitFeaturizer(train, options);
    std::vector<SparseVector> x;
    std::vector<int> y;
    for (const auto &p : train) {
      x.push_back(featurizer.Features(p));
      y.push_back(label_id.at(p.marker));
    }
    const LinearModel model = TrainLogReg(x, y, report.train_labels, featurizer.Dimension(),
                                          options.hyper);
    for (const auto &p : test) {
      report.predicted.push_back(model.labels[Predict(model, featurizer.Features(p)).label]);
    }
  }

  std::size_t majority_hits = 0;
  for (const auto &g : report.gold) {
    if (g == report.majority_label) ++majority_hits;
    if (!label_id.count(g)) ++report.unseen_label_errors;
  }
  report.majority_accuracy =
      test.empty() ? 0.0 : static_cast<double>(majority_hits) / static_cast<double>(test.size());
  report.metrics = PerClassPrf(report.gold, report.predicted);

  std::vector<std::string> classes = OrderByAscendingFrequency(freq);
  std::set<std::string> extra;
  for (const auto &g : report.gold) {
    if (!freq.count(g)) extra.insert(g);
  }
  classes.insert(classes.end(), extra.begin(), extra.end());
  report.confusion = Confusion(report.gold, report.predicted, classes);
  return report;
}

nlohmann::json PrfToJson(const PrfReport &report) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto &m : report.classes) {
    classes.push_back({{"label", m.label},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"support", m.support}});
  }
  return {{"accuracy", report.accuracy},
          {"macro", {{"precision", report.macro_precision},
                     {"recall", report.macro_recall},
                     {"f1", report.macro_f1}}},
          {"weighted", {{"precision", report.weighted_precision},
                        {"recall", report.weighted_recall},
                        {"f1", report.weighted_f1}}},
          {"classes", classes}};
}

nlohmann::json ReportToJson(const PairTaskReport &report) {
  nlohmann::json j = PrfToJson(report.metrics);
  j["majority_baseline"] = {{"label", report.majority_label},
                            {"accuracy", report.majority_accuracy}};
  j["unseen_label_errors"] = report.unseen_label_errors;
  j["test_size"] = report.gold.size();
  j["confusion"] = {{"classes", report.confusion.classes}, {"counts", report.confusion.counts}};
  return j;
}

void WritePrfText(std::ostream &out, const PrfReport &report) {
  std::size_t width = 8;
  for (const auto &m : report.classes) width = std::max(width, m.label.size());
  char buf[256];
  auto line = [&](const std::string &name, double p, double r, double f, const std::string &sup) {
    std::snprintf(buf, sizeof buf, "%-*s  %9.4f  %9.4f  %9.4f  %8s\n", static_cast<int>(width),
                  name.c_str(), p, r, f, sup.c_str());
    out << buf;
  };
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s  %8s\n", static_cast<int>(width), "label",
                "precision", "recall", "f1", "support");
  out << buf;
  for (const auto &m : report.classes) {
    line(m.label, m.precision, m.recall, m.f1, std::to_string(m.support));
  }
  line("macro", report.macro_precision, report.macro_recall, report.macro_f1, "");
  line("weighted", report.weighted_precision, report.weighted_recall, report.weighted_f1, "");
  std::snprintf(buf, sizeof buf, "accuracy %.4f\n", report.accuracy);
  out << buf;
}

void WriteConfusionCsv(std::ostream &out, const ConfusionMatrix &cm) {
  out << "actual\\predicted";
  for (const auto &c : cm.classes) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < cm.size(); ++i) {
    out << cm.classes[i];
    for (double c : cm.counts[i]) out << ',' << static_cast<long long>(c);
    out << '\n';
  }
}

}  // namespace disco
