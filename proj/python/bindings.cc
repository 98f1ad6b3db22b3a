#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.h"
#include "disco/align.h"
#include "disco/dataset.h"
#include "disco/encoder.h"
#include "disco/eval.h"
#include "disco/extract.h"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace disco;

namespace {

// Pairs cross the boundary as (s1, s2, marker) or (s1, s2, marker, doc_id).
std::vector<PairRecord> ToPairs(const py::sequence &seq) {
  std::vector<PairRecord> out;
  out.reserve(py::len(seq));
  for (const auto &item : seq) {
    const auto t = item.cast<py::sequence>();
    if (py::len(t) != 3 && py::len(t) != 4) throw py::value_error("pairs are (s1, s2, marker[, doc_id]) tuples");
    PairRecord p{t[0].cast<std::string>(), t[1].cast<std::string>(), t[2].cast<std::string>(), ""};
    if (py::len(t) == 4) p.doc_id = t[3].cast<std::string>();
    out.push_back(std::move(p));
  }
  return out;
}

py::list FromPairs(std::span<const PairRecord> pairs) {
  py::list out;
  for (const auto &p : pairs) out.append(py::make_tuple(p.s1, p.s2, p.marker, p.doc_id));
  return out;
}

py::list ParseDocs(const std::string &text) {
  py::list docs;
  for (const auto &d : ParseConlluString(text)) {
    py::list sentences;
    for (const auto &s : d.sentences) {
      py::list toks;
      for (const auto &t : s.tokens()) toks.append(py::make_tuple(t.index, t.form, t.upos, t.head, t.deprel));
      sentences.append(toks);
    }
    docs.append(py::dict("doc_id"_a = d.doc_id, "sentences"_a = sentences));
  }
  return docs;
}

py::dict Extract(const std::string &text, const std::string &markers, int min_len, int max_len,
                 double max_ratio, bool require_main_verb, std::size_t jobs) {
  ExtractionConfig cfg;
  cfg.min_len = min_len;
  cfg.max_len = max_len;
  cfg.max_ratio = max_ratio;
  cfg.require_main_verb = require_main_verb;
  if (!markers.empty()) cfg.markers = ResolveMarkerSet(markers).markers;
  const auto docs = ParseConlluString(text);
  ExtractionResult r;
  {
    py::gil_scoped_release release;
    r = ExtractCorpus(docs, DefaultPatterns(), cfg, jobs);
  }
  py::list accepted, rejected;
  for (const auto &p : r.accepted) {
    accepted.append(py::dict("s1"_a = p.s1, "s2"_a = p.s2, "marker"_a = p.marker,
                             "mode"_a = std::string(ToString(p.mode)), "doc_id"_a = p.doc_id,
                             "sentence_index"_a = p.sentence_index));
  }
  for (const auto &j : r.rejected) {
    rejected.append(py::dict("doc_id"_a = j.doc_id, "sentence_index"_a = j.sentence_index,
                             "marker"_a = j.marker, "reason"_a = std::string(ToString(j.reason))));
  }
  return py::dict("accepted"_a = accepted, "rejected"_a = rejected);
}

py::dict Align(const py::sequence &extracted, const py::sequence &gold, double threshold, bool by_marker) {
  const auto ex = ToPairs(extracted);
  const auto gd = ToPairs(gold);
  const auto r = by_marker ? AlignByMarker(ex, gd, threshold) : AlignPairs(ex, gd, threshold);
  py::list al;
  for (const auto &a : r.alignments) {
    al.append(py::dict("extracted"_a = a.extracted, "gold"_a = a.gold, "match_distance"_a = a.match_distance,
                       "quality"_a = a.quality));
  }
  return py::dict("alignments"_a = al, "unaligned"_a = r.unaligned);
}

py::dict SplitPairs(const py::sequence &pairs, std::array<double, 3> ratios, std::uint64_t seed) {
  PairDataset ds;
  ds.pairs = ToPairs(pairs);
  const auto s = Split(ds, ratios, seed);
  return py::dict("train"_a = FromPairs(s.Part(SplitPart::kTrain)),
                  "valid"_a = FromPairs(s.Part(SplitPart::kValid)),
                  "test"_a = FromPairs(s.Part(SplitPart::kTest)));
}

py::dict Prf(const std::vector<std::string> &gold, const std::vector<std::string> &pred) {
  const auto r = PerClassPrf(gold, pred);
  py::dict classes;
  for (const auto &c : r.classes) {
    classes[py::str(c.label)] = py::dict("precision"_a = c.precision, "recall"_a = c.recall, "f1"_a = c.f1,
                                         "support"_a = c.support);
  }
  return py::dict("classes"_a = classes, "macro_precision"_a = r.macro_precision,
                  "macro_recall"_a = r.macro_recall, "macro_f1"_a = r.macro_f1,
                  "weighted_f1"_a = r.weighted_f1, "accuracy"_a = r.accuracy);
}

py::dict GradCheckRandom(std::size_t hidden, std::size_t embed, std::size_t vocab, std::size_t classes,
                         std::size_t batch, std::size_t max_len, double epsilon, std::uint64_t seed) {
  if (hidden == 0 || embed == 0 || vocab < 2 || classes < 2 || batch == 0 || max_len == 0) {
    throw py::value_error("sizes must be positive (vocab, classes >= 2)");
  }
  EncoderParams params = InitParams(EncoderDims{vocab, embed, hidden, 0, classes}, seed);
  params.train_embeddings = true;
  SplitMix64 rng(seed ^ 0xA5A5A5A5ULL);
  std::vector<PairExample> examples;
  for (std::size_t n = 0; n < batch; ++n) {
    PairExample ex;
    for (auto *s : {&ex.s1, &ex.s2}) {
      const std::size_t len = 1 + rng.Below(max_len);
      for (std::size_t t = 0; t < len; ++t) s->push_back(static_cast<int>(rng.Below(vocab)));
    }
    ex.label = static_cast<int>(rng.Below(classes));
    examples.push_back(std::move(ex));
  }
  GradCheckResult r;
  {
    py::gil_scoped_release release;
    r = GradCheck(params, examples, epsilon, 0, seed);
  }
  return py::dict("max_relative_error"_a = r.max_relative_error, "coordinates"_a = r.coordinates,
                  "worst_tensor"_a = r.worst_tensor);
}

py::tuple RunCli(const std::vector<std::string> &args) {
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = cli::Run(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Discourse-marker pair extraction, alignment, metrics and encoder checks";

  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<AnalysisError>(m, "AnalysisError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<StructureError>(m, "StructureError", PyExc_ValueError);

  m.def("parse_conllu", &ParseDocs, "text"_a,
        "Parse CoNLL-U text into [{doc_id, sentences: [[(id, form, upos, head, deprel), ...]]}].");
  m.def("extract", &Extract, "conllu"_a, "markers"_a = "", "min_len"_a = 5, "max_len"_a = 50,
        "max_ratio"_a = 5.0, "require_main_verb"_a = true, "jobs"_a = 1,
        "Extract (s1, s2, marker) pairs with the default patterns. `markers` is a set name "
        "(books5, books8, all) or a comma list.");
  m.def("marker_set", [](const std::string &name) { return ResolveMarkerSet(name).markers; }, "name"_a);
  m.def("levenshtein", [](const std::string &a, const std::string &b) { return Levenshtein(a, b); }, "a"_a,
        "b"_a);
  m.def("normalized_levenshtein",
        [](const std::string &a, const std::string &b) { return NormalizedLevenshtein(a, b); }, "a"_a, "b"_a);
  m.def("align", &Align, "extracted"_a, "gold"_a, "threshold"_a = kAlignThreshold, "by_marker"_a = false);
  m.def("split", &SplitPairs, "pairs"_a, "ratios"_a = std::array<double, 3>{0.9, 0.05, 0.05}, "seed"_a = 42);
  m.def("balance",
        [](const py::sequence &pairs, std::size_t cap, std::uint64_t seed) {
          PairDataset ds;
          ds.pairs = ToPairs(pairs);
          return FromPairs(Balance(ds, cap, seed).pairs);
        },
        "pairs"_a, "cap"_a, "seed"_a = 42);
  m.def("per_class_prf", &Prf, "gold"_a, "pred"_a);
  m.def("confusion",
        [](const std::vector<std::string> &gold, const std::vector<std::string> &pred,
           std::vector<std::string> classes) { return Confusion(gold, pred, std::move(classes)).counts; },
        "gold"_a, "pred"_a, "classes"_a);
  m.def("grad_check", &GradCheckRandom, "hidden"_a = 4, "embed"_a = 4, "vocab"_a = 12, "classes"_a = 3,
        "batch"_a = 4, "max_len"_a = 6, "epsilon"_a = 1e-5, "seed"_a = 1,
        "Central-difference gradient check of the encoder on a random batch.");
  m.def("run", &RunCli, "args"_a, "Run a disco subcommand in-process; returns (exit_code, stdout, stderr).");
}
