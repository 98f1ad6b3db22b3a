#include "cli.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "disco/align.h"
#include "disco/corpus.h"
#include "disco/dataset.h"
#include "disco/embed.h"
#include "disco/encoder.h"
#include "disco/eval.h"
#include "disco/extract.h"
#include "disco/patterns.h"
#include "json.hpp"

namespace disco::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char *kVersion = "disco 0.1.0";

// Input problems that are not usage errors.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<PairRecord> ReadPairs(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return ReadPairsTsv(in);
  } catch (const std::runtime_error &e) {
    throw DataError(path + ": " + e.what());
  }
}

std::ofstream OpenOut(const std::string &path, bool binary = false) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

void WritePairsFile(const std::string &path, std::span<const PairRecord> pairs) {
  auto out = OpenOut(path);
  WritePairsTsv(out, pairs);
}

void WriteJsonFile(const std::string &path, const json &j) {
  auto out = OpenOut(path);
  out << j.dump(2) << '\n';
}

std::vector<double> ParseDoubles(const std::string &csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception &) {
      throw CLI::ValidationError("bad number '" + item + "'");
    }
  }
  return out;
}

std::vector<int> ParseOrders(const std::string &csv) {
  std::vector<int> out;
  for (double d : ParseDoubles(csv)) {
    if (d < 1 || d != static_cast<int>(d)) throw CLI::ValidationError("n-gram orders must be positive integers");
    out.push_back(static_cast<int>(d));
  }
  return out;
}

std::vector<PairRecord> ToRecords(std::span<const ExtractedPair> pairs) {
  std::vector<PairRecord> out;
  out.reserve(pairs.size());
  for (const auto &p : pairs) out.push_back({p.s1, p.s2, p.marker, p.doc_id});
  return out;
}

void Log(std::ostream &err, const std::string &cmd, const std::string &msg) {
  err << "[" << cmd << "] " << msg << '\n';
}

struct Context {
  std::ostream &out;
  std::ostream &err;
};

// ---------------------------------------------------------------- extract

struct ExtractArgs {
  std::string in, out, rejects, stats, patterns, markers = "all";
  bool extra_patterns = false;
  bool no_verb = false;
  int min_len = 5, max_len = 50;
  double max_ratio = 5.0;
  std::size_t jobs = 1;
  std::string format = "text";
};

void AddExtract(CLI::App &app, ExtractArgs &a) {
  auto *c = app.add_subcommand("extract", "Mine marker-linked sentence pairs from CoNLL-U");
  c->add_option("--in", a.in, "CoNLL-U corpus")->required();
  c->add_option("--out", a.out, "Output pair TSV (s1, s2, marker)")->required();
  c->add_option("--rejects", a.rejects, "Rejection log TSV (default: <out>.rejects.tsv)");
  c->add_option("--stats", a.stats, "Marker statistics JSON (default: <out>.stats.json)");
  c->add_option("--markers", a.markers, "books5 | books8 | all | comma-separated markers")
      ->capture_default_str();
  c->add_option("--patterns", a.patterns, "JSON pattern overrides");
  c->add_flag("--extra-patterns", a.extra_patterns, "Also register however/meanwhile/for example");
  c->add_option("--min-len", a.min_len, "Minimum words per side")->capture_default_str();
  c->add_option("--max-len", a.max_len, "Maximum words per side")->capture_default_str();
  c->add_option("--max-ratio", a.max_ratio, "Maximum length ratio")->capture_default_str();
  c->add_flag("--no-verb-check", a.no_verb, "Do not require a verb on each side");
  c->add_option("--jobs", a.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--format", a.format, "Summary format: text | json")
      ->check(CLI::IsMember({"text", "json"}))->capture_default_str();
}

int RunExtract(const ExtractArgs &a, Context &ctx) {
  PatternRegistry registry = DefaultPatterns();
  if (a.extra_patterns) registry = registry.WithOverrides(ExtraPatterns());
  if (!a.patterns.empty()) {
    std::ifstream in(a.patterns);
    if (!in) throw DataError("cannot open " + a.patterns);
    try {
      registry = registry.WithOverrides(ReadPatternConfig(in));
    } catch (const std::invalid_argument &e) {
      throw DataError(e.what());
    }
  }
  MarkerSet set = ResolveMarkerSet(a.markers);
  if (a.extra_patterns && set.name == "BooksALL") {
    for (const auto &p : ExtraPatterns()) set.markers.insert(p.marker);
  }
  for (const auto &m : set.markers) {
    if (!registry.Contains(m)) throw CLI::ValidationError("no pattern registered for marker '" + m + "'");
  }
  ExtractionConfig config;
  config.min_len = a.min_len;
  config.max_len = a.max_len;
  config.max_ratio = a.max_ratio;
  config.require_main_verb = !a.no_verb;
  config.markers = set.markers;
  try {
    config.Validate();
  } catch (const std::invalid_argument &e) {
    throw CLI::ValidationError(e.what());
  }

  std::vector<Document> docs;
  {
    std::ifstream in(a.in);
    if (!in) throw DataError("cannot open " + a.in);
    docs = ParseConllu(in);
  }
  const ExtractionResult result = ExtractCorpus(docs, registry, config, a.jobs);
  const auto records = ToRecords(result.accepted);
  WritePairsFile(a.out, records);
  {
    auto rej = OpenOut(a.rejects.empty() ? a.out + ".rejects.tsv" : a.rejects);
    WriteRejectionsTsv(rej, result.rejected);
  }
  const MarkerStats stats = ComputeMarkerStats(records);
  json summary = StatsToJson(stats);
  summary["marker_set"] = set.name;
  summary["documents"] = docs.size();
  summary["rejected"] = result.rejected.size();
  std::map<std::string, std::size_t> reasons;
  for (const auto &r : result.rejected) ++reasons[std::string(ToString(r.reason))];
  summary["rejections_by_reason"] = reasons;
  WriteJsonFile(a.stats.empty() ? a.out + ".stats.json" : a.stats, summary);
  Log(ctx.err, "extract", std::to_string(docs.size()) + " documents, " +
                              std::to_string(result.accepted.size()) + " pairs accepted, " +
                              std::to_string(result.rejected.size()) + " rejected");
  if (a.format == "json") {
    ctx.out << summary.dump(2) << '\n';
  } else {
    WriteStatsText(ctx.out, stats);
  }
  return kOk;
}

// ------------------------------------------------------------------ stats

struct StatsArgs {
  std::string in, out, format = "text";
};

void AddStats(CLI::App &app, StatsArgs &a) {
  auto *c = app.add_subcommand("stats", "Per-marker pair counts and percentages");
  c->add_option("--in", a.in, "Pair TSV")->required();
  c->add_option("--out", a.out, "Also write the report to this file");
  c->add_option("--format", a.format, "text | json")->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
}

int RunStats(const StatsArgs &a, Context &ctx) {
  const auto stats = ComputeMarkerStats(ReadPairs(a.in));
  std::ostringstream text;
  if (a.format == "json") {
    text << StatsToJson(stats).dump(2) << '\n';
  } else {
    WriteStatsText(text, stats);
  }
  ctx.out << text.str();
  if (!a.out.empty()) OpenOut(a.out) << text.str();
  return kOk;
}

// ----------------------------------------------------------------- subset

struct SubsetArgs {
  std::string in, out, markers;
};

void AddSubset(CLI::App &app, SubsetArgs &a) {
  auto *c = app.add_subcommand("subset", "Keep pairs whose marker is in a marker set");
  c->add_option("--in", a.in, "Pair TSV")->required();
  c->add_option("--out", a.out, "Output pair TSV")->required();
  c->add_option("--markers", a.markers, "books5 | books8 | all | comma-separated markers")->required();
}

int RunSubset(const SubsetArgs &a, Context &ctx) {
  PairDataset ds{ReadPairs(a.in), "custom", {}};
  const PairDataset sub = SubsetMarkers(ds, ResolveMarkerSet(a.markers));
  WritePairsFile(a.out, sub.pairs);
  Log(ctx.err, "subset", std::to_string(sub.pairs.size()) + " of " + std::to_string(ds.pairs.size()) +
                             " pairs kept (" + sub.marker_set + ")");
  return kOk;
}

// ------------------------------------------------------------------ split

struct SplitArgs {
  std::string in, out_dir, ratios = "0.9,0.05,0.05", markers;
  std::uint64_t seed = 42;
  std::size_t cap = 0;
};

void AddSplit(CLI::App &app, SplitArgs &a) {
  auto *c = app.add_subcommand("split", "Seeded train/valid/test split");
  c->add_option("--in", a.in, "Pair TSV")->required();
  c->add_option("--out-dir", a.out_dir, "Directory for train.tsv, valid.tsv, test.tsv, split.json");
  c->add_option("--ratios", a.ratios, "train,valid,test")->capture_default_str();
  c->add_option("--seed", a.seed, "Shuffle seed")->capture_default_str();
  c->add_option("--cap", a.cap, "Balance to at most this many pairs per marker before splitting");
  c->add_option("--markers", a.markers, "Marker-set name recorded in the sidecar");
}

json Sidecar(const std::string &marker_set, std::uint64_t seed, const std::vector<double> &ratios,
             std::size_t cap, const std::string &source) {
  return {{"marker_set", marker_set},
          {"seed", seed},
          {"ratios", ratios},
          {"cap", cap == 0 ? json(nullptr) : json(cap)},
          {"source_checksum", "fnv1a64:" + HexDigest(Fnv1a64(source))}};
}

int RunSplit(const SplitArgs &a, Context &ctx) {
  const auto ratios = ParseDoubles(a.ratios);
  if (ratios.size() != 3) throw CLI::ValidationError("--ratios needs three values");
  const std::string source = ReadFile(a.in);
  PairDataset ds{ReadPairs(a.in), a.markers.empty() ? "custom" : ResolveMarkerSet(a.markers).name, {}};
  if (a.cap > 0) ds = Balance(ds, a.cap, a.seed);
  PairDataset split;
  try {
    split = Split(ds, {ratios[0], ratios[1], ratios[2]}, a.seed);
  } catch (const std::invalid_argument &e) {
    throw DataError(e.what());
  }
  const std::string dir = a.out_dir.empty() ? fs::path(a.in).parent_path().string() : a.out_dir;
  const fs::path base = dir.empty() ? fs::path(".") : fs::path(dir);
  for (SplitPart part : {SplitPart::kTrain, SplitPart::kValid, SplitPart::kTest}) {
    const auto rows = split.Part(part);
    WritePairsFile((base / (std::string(ToString(part)) + ".tsv")).string(), rows);
    Log(ctx.err, "split", std::string(ToString(part)) + ": " + std::to_string(rows.size()));
  }
  WriteJsonFile((base / "split.json").string(),
                Sidecar(split.marker_set, a.seed, ratios, a.cap, source));
  return kOk;
}

// ---------------------------------------------------------------- balance

struct BalanceArgs {
  std::string in, out;
  std::size_t cap = 13421;
  std::uint64_t seed = 42;
};

void AddBalance(CLI::App &app, BalanceArgs &a) {
  auto *c = app.add_subcommand("balance", "Cap the number of pairs per marker");
  c->add_option("--in", a.in, "Pair TSV")->required();
  c->add_option("--out", a.out, "Output pair TSV")->required();
  c->add_option("--cap", a.cap, "Pairs kept per marker")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--seed", a.seed, "Shuffle seed")->capture_default_str();
}

int RunBalance(const BalanceArgs &a, Context &ctx) {
  const std::string source = ReadFile(a.in);
  PairDataset ds{ReadPairs(a.in), "custom", {}};
  const PairDataset bal = Balance(ds, a.cap, a.seed);
  WritePairsFile(a.out, bal.pairs);
  WriteJsonFile(a.out + ".meta.json", Sidecar(bal.marker_set, a.seed, {}, a.cap, source));
  Log(ctx.err, "balance", std::to_string(bal.pairs.size()) + " of " + std::to_string(ds.pairs.size()) +
                              " pairs kept");
  return kOk;
}

// --------------------------------------------------------------- validate

struct ValidateArgs {
  std::string extracted, gold, out, format = "text";
  double threshold = kAlignThreshold;
  std::size_t vocab_cap = 0;
  bool raw = false;
  std::size_t jobs = 1;
};

void AddValidate(CLI::App &app, ValidateArgs &a) {
  auto *c = app.add_subcommand("validate", "Align extracted pairs to gold pairs");
  c->add_option("--extracted", a.extracted, "Extracted pair TSV")->required();
  c->add_option("--gold", a.gold, "Gold pair TSV")->required();
  c->add_option("--threshold", a.threshold, "Alignment distance threshold (strict)")->capture_default_str();
  c->add_option("--vocab-cap", a.vocab_cap, "Map words outside the top-N to <unk> (0: off)");
  c->add_flag("--raw", a.raw, "Skip number normalization");
  c->add_option("--out", a.out, "JSON report path");
  c->add_option("--jobs", a.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--format", a.format, "text | json")->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
}

int RunValidate(const ValidateArgs &a, Context &ctx) {
  auto extracted = ReadPairs(a.extracted);
  auto gold = ReadPairs(a.gold);
  if (!a.raw) {
    std::set<std::string> vocab;
    if (a.vocab_cap > 0) {
      std::vector<std::string> texts;
      for (const auto *list : {&extracted, &gold}) {
        for (const auto &p : *list) {
          texts.push_back(PreprocessForAlignment(p.s1));
          texts.push_back(PreprocessForAlignment(p.s2));
        }
      }
      vocab = TopWords(texts, a.vocab_cap);
    }
    for (auto *list : {&extracted, &gold}) {
      for (auto &p : *list) {
        p.s1 = PreprocessForAlignment(p.s1, a.vocab_cap > 0 ? &vocab : nullptr);
        p.s2 = PreprocessForAlignment(p.s2, a.vocab_cap > 0 ? &vocab : nullptr);
      }
    }
  }
  const auto result = AlignByMarker(extracted, gold, a.threshold, a.jobs);
  const auto precision = ExtractionPrecision(result, extracted);
  const json report = AlignmentReportJson(result, precision, a.threshold);
  if (!a.out.empty()) WriteJsonFile(a.out, report);
  if (a.format == "json") {
    ctx.out << report.dump(2) << '\n';
  } else {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-12s %9s %9s %9s\n", "marker", "extracted", "aligned", "precision");
    ctx.out << buf;
    for (const auto &[marker, p] : precision.per_marker) {
      std::snprintf(buf, sizeof buf, "%-12s %9zu %9zu %9s\n", marker.c_str(),
                    precision.extracted_counts.at(marker), precision.aligned_counts.at(marker),
                    p ? (std::to_string(*p).substr(0, 6)).c_str() : "n/a");
      ctx.out << buf;
    }
    std::snprintf(buf, sizeof buf, "overall precision %s\n",
                  precision.overall ? std::to_string(*precision.overall).substr(0, 6).c_str() : "n/a");
    ctx.out << buf;
  }
  return kOk;
}

// --------------------------------------------------------- train-baseline

struct BaselineArgs {
  std::string train, out, featurizer = "ngram", orders = "1,2,3", embeddings;
  double lr = 0.5, l2 = 1e-4;
  int epochs = 50;
  std::size_t batch_size = 0, vocab_cap = 100000;
  std::uint64_t seed = 1;
};

void AddBaseline(CLI::App &app, BaselineArgs &a) {
  auto *c = app.add_subcommand("train-baseline", "Train a bag-of-ngrams or SIF logistic regression");
  c->add_option("--train", a.train, "Training pair TSV")->required();
  c->add_option("--out", a.out, "Model path prefix (.json/.bin)")->required();
  c->add_option("--featurizer", a.featurizer, "ngram | sif")->check(CLI::IsMember({"ngram", "sif"}))
      ->capture_default_str();
  c->add_option("--orders", a.orders, "n-gram orders")->capture_default_str();
  c->add_option("--vocab-cap", a.vocab_cap, "Maximum n-gram vocabulary")->capture_default_str();
  c->add_option("--embeddings", a.embeddings, "Embedding table (sif)");
  c->add_option("--lr", a.lr, "Learning rate")->capture_default_str();
  c->add_option("--l2", a.l2, "L2 penalty")->capture_default_str();
  c->add_option("--epochs", a.epochs, "Epochs")->capture_default_str();
  c->add_option("--batch-size", a.batch_size, "Mini-batch size (0: full batch)")->capture_default_str();
  c->add_option("--seed", a.seed, "Shuffle seed")->capture_default_str();
}

EmbeddingTable LoadTable(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return EmbeddingTable::Load(in);
  } catch (const std::runtime_error &e) {
    throw DataError(path + ": " + e.what());
  }
}

int RunBaseline(const BaselineArgs &a, Context &ctx) {
  const auto train = ReadPairs(a.train);
  PairTaskOptions opt;
  opt.featurizer = a.featurizer == "sif" ? Featurizer::kSif : Featurizer::kNgram;
  opt.orders = ParseOrders(a.orders);
  opt.vocab_cap = a.vocab_cap;
  EmbeddingTable table;
  if (opt.featurizer == Featurizer::kSif) {
    if (a.embeddings.empty()) throw CLI::ValidationError("--embeddings is required for sif");
    table = LoadTable(a.embeddings);
    opt.embeddings = &table;
  }
  const FittedFeaturizer featurizer = FitFeaturizer(train, opt);
  std::set<std::string> label_set;
  for (const auto &p : train) label_set.insert(p.marker);
  std::vector<std::string> labels(label_set.begin(), label_set.end());
  std::map<std::string, int> id;
  for (std::size_t k = 0; k < labels.size(); ++k) id[labels[k]] = static_cast<int>(k);
  std::vector<SparseVector> x;
  std::vector<int> y;
  for (const auto &p : train) {
    x.push_back(featurizer.Features(p));
    y.push_back(id[p.marker]);
  }
  LogRegHyper hyper{a.lr, a.epochs, a.l2, a.batch_size, a.seed};
  std::vector<double> losses;
  LinearModel model;
  try {
    model = TrainLogReg(x, y, labels, featurizer.Dimension(), hyper, &losses);
  } catch (const std::invalid_argument &e) {
    throw DataError(e.what());
  }
  SaveLinearModel(model, a.out);
  if (opt.featurizer == Featurizer::kNgram) {
    auto vout = OpenOut(a.out + ".vocab.txt");
    for (const auto &g : featurizer.vocab.items()) vout << g << '\n';
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (static_cast<int>(Predict(model, x[i]).label) == y[i]) ++correct;
  }
  json summary = {{"featurizer", a.featurizer},
                  {"features", featurizer.Dimension()},
                  {"classes", labels},
                  {"final_loss", losses.empty() ? json(nullptr) : json(losses.back())},
                  {"train_accuracy", static_cast<double>(correct) / static_cast<double>(x.size())}};
  ctx.out << summary.dump(2) << '\n';
  return kOk;
}

// ---------------------------------------------------------- train-encoder

struct EncoderArgs {
  std::string train, valid, out_dir, embeddings;
  std::size_t hidden = 64, embed = 32, proj = 0, batch_size = 16, min_freq = 1;
  double lr = 0.1, anneal = 5.0, clip = 5.0;
  int epochs = 20, patience = 3;
  bool train_embeddings = false;
  std::uint64_t seed = 1;
};

void AddEncoder(CLI::App &app, EncoderArgs &a) {
  auto *c = app.add_subcommand("train-encoder", "Train the BiLSTM-max pair classifier");
  c->add_option("--train", a.train, "Training pair TSV")->required();
  c->add_option("--valid", a.valid, "Validation pair TSV")->required();
  c->add_option("--out-dir", a.out_dir, "Directory for encoder.json/.bin and epoch_log.csv")->required();
  c->add_option("--hidden", a.hidden, "LSTM hidden size per direction")->capture_default_str();
  c->add_option("--embed", a.embed, "Word embedding size")->capture_default_str();
  c->add_option("--proj", a.proj, "Projection size (0: 2*hidden)")->capture_default_str();
  c->add_option("--embeddings", a.embeddings, "Initial embedding table");
  c->add_flag("--train-embeddings", a.train_embeddings, "Update word embeddings");
  c->add_option("--min-freq", a.min_freq, "Minimum word frequency for the vocabulary")->capture_default_str();
  c->add_option("--lr", a.lr, "Initial learning rate")->capture_default_str();
  c->add_option("--anneal", a.anneal, "Learning-rate divisor when validation accuracy drops")
      ->capture_default_str();
  c->add_option("--clip", a.clip, "Global gradient-norm clip")->capture_default_str();
  c->add_option("--epochs", a.epochs, "Maximum epochs")->capture_default_str();
  c->add_option("--patience", a.patience, "Early-stopping patience")->capture_default_str();
  c->add_option("--batch-size", a.batch_size, "Mini-batch size")->capture_default_str();
  c->add_option("--seed", a.seed, "Initialization and shuffle seed")->capture_default_str();
}

std::vector<PairExample> ToExamples(std::span<const PairRecord> pairs, const WordVocab &vocab,
                                    const std::map<std::string, int> &label_id,
                                    const std::string &what) {
  std::vector<PairExample> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto it = label_id.find(pairs[i].marker);
    if (it == label_id.end()) {
      throw DataError(what + " row " + std::to_string(i + 1) + ": label '" + pairs[i].marker +
                      "' not seen in training");
    }
    PairExample ex{vocab.Ids(pairs[i].s1), vocab.Ids(pairs[i].s2), it->second};
    if (ex.s1.empty() || ex.s2.empty()) {
      throw DataError(what + " row " + std::to_string(i + 1) + ": empty sentence");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

int RunEncoder(const EncoderArgs &a, Context &ctx) {
  const auto train = ReadPairs(a.train);
  const auto valid = ReadPairs(a.valid);
  std::vector<std::string> texts;
  std::set<std::string> label_set;
  for (const auto &p : train) {
    texts.push_back(p.s1);
    texts.push_back(p.s2);
    label_set.insert(p.marker);
  }
  if (label_set.size() < 2) throw DataError("training data needs at least two labels");
  const std::vector<std::string> labels(label_set.begin(), label_set.end());
  std::map<std::string, int> label_id;
  for (std::size_t k = 0; k < labels.size(); ++k) label_id[labels[k]] = static_cast<int>(k);
  const WordVocab vocab = WordVocab::Build(texts, a.min_freq);
  const auto train_ex = ToExamples(train, vocab, label_id, "train");
  const auto valid_ex = ToExamples(valid, vocab, label_id, "valid");

  TrainConfig config;
  config.initial_lr = a.lr;
  config.anneal_factor = a.anneal;
  config.grad_clip_norm = a.clip;
  config.max_epochs = a.epochs;
  config.patience = a.patience;
  config.batch_size = a.batch_size;
  config.seed = a.seed;
  config.dims = EncoderDims{vocab.size(), a.embed, a.hidden, a.proj, labels.size()};
  try {
    config.Validate();
  } catch (const std::invalid_argument &e) {
    throw CLI::ValidationError(e.what());
  }
  EncoderParams init = InitParams(config.dims, config.seed);
  init.train_embeddings = a.train_embeddings;
  if (!a.embeddings.empty()) {
    std::ifstream in(a.embeddings);
    if (!in) throw DataError("cannot open " + a.embeddings);
    try {
      const auto filled = LoadEmbeddings(in, vocab, init);
      Log(ctx.err, "train-encoder", "loaded " + std::to_string(filled) + " pretrained vectors");
    } catch (const std::runtime_error &e) {
      throw DataError(e.what());
    }
  }
  const TrainResult result = Train(train_ex, valid_ex, config, std::move(init), [&](const EpochRecord &r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %d lr %.6g train_loss %.6f val_acc %.4f", r.epoch, r.lr,
                  r.train_loss, r.val_acc);
    Log(ctx.err, "train-encoder", buf);
  });
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  SaveCheckpoint((dir / "encoder").string(), Checkpoint{result.params, vocab, labels, config.ToJson()});
  {
    auto log = OpenOut((dir / "epoch_log.csv").string());
    WriteEpochLogCsv(log, result.log);
  }
  json summary = {{"best_epoch", result.best_epoch},
                  {"best_val_acc", result.best_val_acc},
                  {"epochs_run", result.log.size()},
                  {"labels", labels},
                  {"vocab_size", vocab.size()}};
  ctx.out << summary.dump(2) << '\n';
  return kOk;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string train, test, pairs, dev_prefixes, test_prefixes;
  std::string featurizer = "ngram", classifier = "logreg", checkpoint, embeddings;
  std::string orders = "1,2,3", format = "text", report, confusion_csv, predictions;
  double lr = 0.5, l2 = 1e-4;
  int epochs = 50;
  std::size_t batch_size = 0;
  std::uint64_t seed = 1;
};

void AddEval(CLI::App &app, EvalArgs &a) {
  auto *c = app.add_subcommand("eval", "Train a classifier on one pair file and evaluate on another");
  c->add_option("--train", a.train, "Training pair TSV");
  c->add_option("--test", a.test, "Test pair TSV");
  c->add_option("--pairs", a.pairs, "Single TSV with a doc_id column, split by prefix")
      ;
  c->add_option("--dev-prefixes", a.dev_prefixes, "doc_id prefixes held out as development data");
  c->add_option("--test-prefixes", a.test_prefixes, "doc_id prefixes used as test data");
  c->add_option("--featurizer", a.featurizer, "ngram | sif | encoder")
      ->check(CLI::IsMember({"ngram", "sif", "encoder"}))->capture_default_str();
  c->add_option("--classifier", a.classifier, "logreg | majority")
      ->check(CLI::IsMember({"logreg", "majority"}))->capture_default_str();
  c->add_option("--checkpoint", a.checkpoint, "Encoder checkpoint prefix (encoder featurizer)");
  c->add_option("--embeddings", a.embeddings, "Embedding table (sif)");
  c->add_option("--orders", a.orders, "n-gram orders")->capture_default_str();
  c->add_option("--lr", a.lr, "Learning rate")->capture_default_str();
  c->add_option("--l2", a.l2, "L2 penalty")->capture_default_str();
  c->add_option("--epochs", a.epochs, "Epochs")->capture_default_str();
  c->add_option("--batch-size", a.batch_size, "Mini-batch size (0: full batch)")->capture_default_str();
  c->add_option("--seed", a.seed, "Shuffle seed")->capture_default_str();
  c->add_option("--format", a.format, "text | json")->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  c->add_option("--report", a.report, "JSON report path");
  c->add_option("--confusion-csv", a.confusion_csv, "Confusion matrix CSV path");
  c->add_option("--predictions", a.predictions, "gold<TAB>predicted TSV path");
}

std::vector<std::string> SplitCsv(const std::string &csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool HasPrefix(const std::string &s, const std::vector<std::string> &prefixes) {
  for (const auto &p : prefixes) {
    if (s.rfind(p, 0) == 0) return true;
  }
  return false;
}

int RunEval(const EvalArgs &a, Context &ctx) {
  std::vector<PairRecord> train, test;
  if (!a.pairs.empty()) {
    if (a.test_prefixes.empty()) throw CLI::ValidationError("--pairs needs --test-prefixes");
    const auto dev = SplitCsv(a.dev_prefixes);
    const auto tst = SplitCsv(a.test_prefixes);
    for (auto &p : ReadPairs(a.pairs)) {
      if (HasPrefix(p.doc_id, tst)) {
        test.push_back(std::move(p));
      } else if (!HasPrefix(p.doc_id, dev)) {
        train.push_back(std::move(p));
      }
    }
  } else {
    if (a.train.empty() || a.test.empty()) throw CLI::ValidationError("need --train and --test, or --pairs");
    train = ReadPairs(a.train);
    test = ReadPairs(a.test);
  }
  if (train.empty()) throw DataError("no training pairs");
  PairTaskOptions opt;
  opt.featurizer = a.featurizer == "sif"       ? Featurizer::kSif
                   : a.featurizer == "encoder" ? Featurizer::kEncoder
                                               : Featurizer::kNgram;
  opt.classifier = a.classifier == "majority" ? Classifier::kMajority : Classifier::kLogReg;
  opt.orders = ParseOrders(a.orders);
  opt.hyper = LogRegHyper{a.lr, a.epochs, a.l2, a.batch_size, a.seed};
  EmbeddingTable table;
  Checkpoint ckpt;
  if (opt.featurizer == Featurizer::kSif) {
    if (a.embeddings.empty()) throw CLI::ValidationError("--embeddings is required for sif");
    table = LoadTable(a.embeddings);
    opt.embeddings = &table;
  } else if (opt.featurizer == Featurizer::kEncoder) {
    if (a.checkpoint.empty()) throw CLI::ValidationError("--checkpoint is required for encoder");
    try {
      ckpt = LoadCheckpoint(a.checkpoint);
    } catch (const std::exception &e) {
      throw DataError(e.what());
    }
    opt.encoder = &ckpt;
  }
  const PairTaskReport report = PairTaskEval(train, test, opt);
  const json j = ReportToJson(report);
  if (!a.report.empty()) WriteJsonFile(a.report, j);
  if (!a.confusion_csv.empty()) {
    auto out = OpenOut(a.confusion_csv);
    WriteConfusionCsv(out, report.confusion);
  }
  if (!a.predictions.empty()) {
    auto out = OpenOut(a.predictions);
    for (std::size_t i = 0; i < report.gold.size(); ++i) {
      out << report.gold[i] << '\t' << report.predicted[i] << '\n';
    }
  }
  if (a.format == "json") {
    ctx.out << j.dump(2) << '\n';
  } else {
    WritePrfText(ctx.out, report.metrics);
    char buf[160];
    std::snprintf(buf, sizeof buf, "majority baseline (%s) %.4f\n", report.majority_label.c_str(),
                  report.majority_accuracy);
    ctx.out << buf;
    if (report.unseen_label_errors > 0) {
      ctx.out << "test labels unseen in training: " << report.unseen_label_errors << '\n';
    }
  }
  return kOk;
}

// -------------------------------------------------------------- confusion

struct ConfusionArgs {
  std::string predictions, balanced, train, csv, log_csv, format = "text";
  bool include_diagonal = false;
};

void AddConfusion(CLI::App &app, ConfusionArgs &a) {
  auto *c = app.add_subcommand("confusion", "Confusion matrices and the frequency-residual analysis");
  c->add_option("--predictions", a.predictions, "gold<TAB>predicted TSV")->required()
      ;
  c->add_option("--balanced", a.balanced, "Predictions of a model trained on balanced data")
      ;
  c->add_option("--train", a.train, "Training pair TSV giving class frequencies");
  c->add_flag("--include-diagonal", a.include_diagonal, "Regress on diagonal cells too");
  c->add_option("--csv", a.csv, "Count matrix CSV path");
  c->add_option("--log-csv", a.log_csv, "Log-proportion matrix CSV path");
  c->add_option("--format", a.format, "text | json")->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
}

std::pair<std::vector<std::string>, std::vector<std::string>> ReadPredictions(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> gold, pred;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw DataError(path + " line " + std::to_string(lineno) + ": expected gold<TAB>predicted");
    }
    gold.push_back(line.substr(0, tab));
    pred.push_back(line.substr(tab + 1));
  }
  return {gold, pred};
}

int RunConfusion(const ConfusionArgs &a, Context &ctx) {
  const auto [gold, pred] = ReadPredictions(a.predictions);
  std::map<std::string, std::size_t> freq;
  if (!a.train.empty()) {
    for (const auto &p : ReadPairs(a.train)) ++freq[p.marker];
  } else {
    for (const auto &g : gold) ++freq[g];
  }
  for (const auto *labels : {&gold, &pred}) {
    for (const auto &l : *labels) freq.try_emplace(l, 0);
  }
  const auto classes = OrderByAscendingFrequency(freq);
  ConfusionMatrix cm;
  try {
    cm = Confusion(gold, pred, classes);
  } catch (const std::invalid_argument &e) {
    throw DataError(e.what());
  }
  if (!a.csv.empty()) {
    auto out = OpenOut(a.csv);
    WriteConfusionCsv(out, cm);
  }
  const auto log_display = cm.LogDisplay();
  if (!a.log_csv.empty()) {
    auto out = OpenOut(a.log_csv);
    out << "actual\\predicted";
    for (const auto &c : cm.classes) out << ',' << c;
    out << '\n';
    for (std::size_t i = 0; i < cm.size(); ++i) {
      out << cm.classes[i];
      for (double v : log_display[i]) out << ',' << v;
      out << '\n';
    }
  }
  json j = {{"classes", cm.classes},
            {"counts", cm.counts},
            {"row_normalized", cm.RowNormalized()},
            {"accuracy", cm.Total() > 0 ? cm.Trace() / cm.Total() : 0.0}};
  if (!a.balanced.empty()) {
    const auto [bgold, bpred] = ReadPredictions(a.balanced);
    ConfusionMatrix bcm;
    try {
      bcm = Confusion(bgold, bpred, classes);
    } catch (const std::invalid_argument &e) {
      throw DataError(e.what());
    }
    std::map<std::string, double> fmap;
    for (const auto &[k, v] : freq) fmap[k] = static_cast<double>(v);
    const auto ra = FrequencyResidualAnalysis(cm, bcm, fmap, a.include_diagonal);
    j["residual_analysis"] = {
        {"r2", ra.r2},
        {"cells", ra.cells},
        {"frequency_fit", {{"intercept", ra.frequency_fit.intercept}, {"slope", ra.frequency_fit.slope},
                           {"r2", ra.frequency_fit.r2}}},
        {"residual_fit", {{"intercept", ra.residual_fit.intercept}, {"slope", ra.residual_fit.slope}}}};
  }
  if (a.format == "json") {
    ctx.out << j.dump(2) << '\n';
  } else {
    WriteConfusionCsv(ctx.out, cm);
    if (j.contains("residual_analysis")) {
      ctx.out << "residual R^2 " << j["residual_analysis"]["r2"].get<double>() << " over "
              << j["residual_analysis"]["cells"].get<std::size_t>() << " cells\n";
    }
  }
  return kOk;
}

// -------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::size_t hidden = 4, embed = 4, vocab = 12, classes = 3, batch = 4, max_len = 6, max_coords = 0;
  double epsilon = 1e-5, tolerance = 1e-4;
  std::uint64_t seed = 1;
};

void AddGradcheck(CLI::App &app, GradcheckArgs &a) {
  auto *c = app.add_subcommand("gradcheck", "Finite-difference check of encoder gradients");
  c->add_option("--hidden", a.hidden, "Hidden size")->capture_default_str();
  c->add_option("--embed", a.embed, "Embedding size")->capture_default_str();
  c->add_option("--vocab", a.vocab, "Vocabulary size")->capture_default_str();
  c->add_option("--classes", a.classes, "Number of classes")->capture_default_str();
  c->add_option("--batch", a.batch, "Batch size")->capture_default_str();
  c->add_option("--max-len", a.max_len, "Maximum sentence length")->capture_default_str();
  c->add_option("--max-coords", a.max_coords, "Sampled coordinates (0: all)")->capture_default_str();
  c->add_option("--epsilon", a.epsilon, "Finite-difference step")->capture_default_str();
  c->add_option("--tolerance", a.tolerance, "Pass threshold")->capture_default_str();
  c->add_option("--seed", a.seed, "Seed")->capture_default_str();
}

int RunGradcheck(const GradcheckArgs &a, Context &ctx) {
  if (a.hidden == 0 || a.embed == 0 || a.vocab < 2 || a.classes < 2 || a.batch == 0 || a.max_len == 0) {
    throw CLI::ValidationError("gradcheck sizes must be positive (vocab, classes >= 2)");
  }
  EncoderParams params = InitParams(EncoderDims{a.vocab, a.embed, a.hidden, 0, a.classes}, a.seed);
  params.train_embeddings = true;
  SplitMix64 rng(a.seed ^ 0xA5A5A5A5ULL);
  std::vector<PairExample> batch;
  for (std::size_t n = 0; n < a.batch; ++n) {
    PairExample ex;
    for (auto *s : {&ex.s1, &ex.s2}) {
      const std::size_t len = 1 + rng.Below(a.max_len);
      for (std::size_t t = 0; t < len; ++t) s->push_back(static_cast<int>(rng.Below(a.vocab)));
    }
    ex.label = static_cast<int>(rng.Below(a.classes));
    batch.push_back(std::move(ex));
  }
  const auto r = GradCheck(params, batch, a.epsilon, a.max_coords, a.seed);
  char buf[200];
  std::snprintf(buf, sizeof buf, "max_relative_error %.3e over %zu coordinates (worst %s)\n",
                r.max_relative_error, r.coordinates, r.worst_tensor.c_str());
  ctx.out << buf;
  return r.max_relative_error < a.tolerance ? kOk : kNumericError;
}

}  // namespace

int Run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Discourse-marker sentence-pair toolkit", "disco"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "TOML/INI file with option values (flags take precedence)");
  app.require_subcommand(1);

  ExtractArgs extract;
  StatsArgs stats;
  SubsetArgs subset;
  SplitArgs split;
  BalanceArgs balance;
  ValidateArgs validate;
  BaselineArgs baseline;
  EncoderArgs encoder;
  EvalArgs eval;
  ConfusionArgs confusion;
  GradcheckArgs gradcheck;
  AddExtract(app, extract);
  AddStats(app, stats);
  AddSubset(app, subset);
  AddSplit(app, split);
  AddBalance(app, balance);
  AddValidate(app, validate);
  AddBaseline(app, baseline);
  AddEncoder(app, encoder);
  AddEval(app, eval);
  AddConfusion(app, confusion);
  AddGradcheck(app, gradcheck);

  Context ctx{out, err};
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "extract") return RunExtract(extract, ctx);
    if (cmd == "stats") return RunStats(stats, ctx);
    if (cmd == "subset") return RunSubset(subset, ctx);
    if (cmd == "split") return RunSplit(split, ctx);
    if (cmd == "balance") return RunBalance(balance, ctx);
    if (cmd == "validate") return RunValidate(validate, ctx);
    if (cmd == "train-baseline") return RunBaseline(baseline, ctx);
    if (cmd == "train-encoder") return RunEncoder(encoder, ctx);
    if (cmd == "eval") return RunEval(eval, ctx);
    if (cmd == "confusion") return RunConfusion(confusion, ctx);
    if (cmd == "gradcheck") return RunGradcheck(gradcheck, ctx);
    return kUsageError;
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return kUsageError;
  } catch (const NumericError &e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const AnalysisError &e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const ParseError &e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const StructureError &e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const DataError &e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument &e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception &e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace disco::cli
